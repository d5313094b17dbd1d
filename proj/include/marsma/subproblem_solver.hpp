// SPDX-License-Identifier: Apache-2.0
//
// marsma: sum-rate optimization for movable-antenna downlink RSMA
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MARSMA_SUBPROBLEM_SOLVER_HPP
#define MARSMA_SUBPROBLEM_SOLVER_HPP

#include "marsma/fp_updates.hpp"
#include "marsma/rsma_metrics.hpp"

#include <array>
#include <ostream>

namespace marsma {

// Beamformer / common-rate block of the alternating optimization:
//
//   max_{F, r_c}  Ghat(F, r_c | alpha, beta)
//   s.t.  tr(F^H F) <= P_0
//         t_k(F | mu_k, eta_k) >= ln2 * sum_j r_c,j   for all k
//         r_c >= 0
//
// Ghat is a concave quadratic in F plus sum r_c, and every t_k is a concave
// quadratic in F, so the problem is a small dense convex QCQP. It is solved
// with a primal log-barrier method and damped Newton steps over the real
// stacking z = [Re f_1; Im f_1; ...; Re f_c; Im f_c; r_c].

struct SolverConfig {
    double barrier_start = 10.0;
    double barrier_mult = 20.0;
    double newton_tol = 1e-10;   // on lambda^2 / 2
    int max_newton_iters = 80;   // per centering stage
    int max_outer_iters = 40;    // barrier stages
    double feasibility_eps = 1e-7;
    double gap_tol = 1e-9;       // stop once m / t falls below this
    bool freeze_beamformer = false; // optimize r_c only, F held at the start point

    void validate() const
    {
        if (!(barrier_mult > 1.0))
            throw std::invalid_argument("barrier_mult must exceed 1.");
        if (!(barrier_start > 0.0) || !(newton_tol > 0.0) || !(feasibility_eps > 0.0) || !(gap_tol > 0.0))
            throw std::invalid_argument("solver tolerances must be positive.");
        if (max_newton_iters < 1 || max_outer_iters < 1)
            throw std::invalid_argument("solver iteration caps must be at least 1.");
    }
};

struct SubproblemSpec {
    CMatrix channels; // N_T x K
    AuxState aux;
    RVector noise;
    double power_budget = 1.0;
    Beamformer beamformer; // warm start
    RateAllocation rates;  // warm start
};

enum class SolverErrorKind { InfeasibleStart, BarrierDiverged, CannotInteriorize };

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    SolverErrorKind kind() const { return kind_; }

private:
    SolverErrorKind kind_;
};

struct BarrierStage {
    double t = 0.0;
    int newton_iters = 0;
    double objective = 0.0;
    double max_violation = 0.0;
};

struct SubproblemResult {
    Beamformer beamformer;
    RateAllocation rates;
    double objective = 0.0;
    int newton_iters = 0;
    bool kept_warm_start = false;
    std::vector<BarrierStage> trace;
};

inline void write_trace_csv(std::ostream &os, const std::vector<BarrierStage> &trace)
{
    os << "stage,t,newton_iters,objective,max_violation\n";
    os.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i)
        os << i << ',' << trace[i].t << ',' << trace[i].newton_iters << ',' << trace[i].objective << ','
           << trace[i].max_violation << '\n';
}

namespace detail {

// f(z) = z^T Q z + q^T z + c
struct Quadratic {
    RMatrix Q;
    RVector q;
    double c = 0.0;

    Quadratic() = default;
    explicit Quadratic(Eigen::Index n) : Q(RMatrix::Zero(n, n)), q(RVector::Zero(n)) {}

    double value(const RVector &z) const { return z.dot(Q * z) + q.dot(z) + c; }

    // Adds w * v^H M v for the complex block starting at `offset`.
    void add_hermitian(Eigen::Index offset, const CMatrix &M, double w)
    {
        const Eigen::Index n = M.rows();
        Q.block(offset, offset, n, n) += w * M.real();
        Q.block(offset, offset + n, n, n) -= w * M.imag();
        Q.block(offset + n, offset, n, n) += w * M.imag();
        Q.block(offset + n, offset + n, n, n) += w * M.real();
    }

    // Adds w * Re(c^H v) for the complex block starting at `offset`.
    void add_linear(Eigen::Index offset, const CVector &cv, double w)
    {
        const Eigen::Index n = cv.size();
        q.segment(offset, n) += w * cv.real();
        q.segment(offset + n, n) += w * cv.imag();
    }
};

class SubproblemModel {
public:
    SubproblemModel(const SubproblemSpec &spec) : N(spec.channels.rows()), K(spec.channels.cols())
    {
        const Eigen::Index n = size();
        const AuxState &aux = spec.aux;
        const Eigen::Index rates = rate_offset();

        objective = Quadratic(n);
        CMatrix private_weight = CMatrix::Zero(N, N);
        for (Eigen::Index k = 0; k < K; ++k) {
            const CVector h = spec.channels.col(k);
            objective.c += (std::log1p(aux.alpha[k]) - aux.alpha[k]) / kLn2;
            objective.c -= std::norm(aux.beta[k]) * spec.noise[k] / kLn2;
            objective.add_linear(block(k), aux.beta[k] * h, 2.0 * std::sqrt(1.0 + aux.alpha[k]) / kLn2);
            private_weight += std::norm(aux.beta[k]) * h * h.adjoint();
        }
        for (Eigen::Index j = 0; j < K; ++j)
            objective.add_hermitian(block(j), private_weight, -1.0 / kLn2);
        objective.q.segment(rates, K).setOnes();

        surrogates.assign(static_cast<std::size_t>(K), Quadratic(n));
        for (Eigen::Index k = 0; k < K; ++k) {
            Quadratic &t = surrogates[static_cast<std::size_t>(k)];
            const CVector h = spec.channels.col(k);
            const CMatrix hh = h * h.adjoint();
            const double e2 = std::norm(aux.eta[k]);
            t.c = std::log1p(aux.mu[k]) - aux.mu[k] - e2 * spec.noise[k];
            t.add_linear(block(K), aux.eta[k] * h, 2.0 * std::sqrt(1.0 + aux.mu[k]));
            for (Eigen::Index j = 0; j <= K; ++j)
                t.add_hermitian(block(j), hh, -e2);
            t.q.segment(rates, K).setConstant(-kLn2);
        }
        power_budget = spec.power_budget;
    }

    Eigen::Index size() const { return 2 * N * (K + 1) + K; }
    Eigen::Index rate_offset() const { return 2 * N * (K + 1); }
    Eigen::Index block(Eigen::Index j) const { return 2 * N * j; }

    RVector pack(const Beamformer &F, const RateAllocation &r) const
    {
        RVector z(size());
        for (Eigen::Index j = 0; j <= K; ++j) {
            z.segment(block(j), N) = F.matrix.col(j).real();
            z.segment(block(j) + N, N) = F.matrix.col(j).imag();
        }
        z.segment(rate_offset(), K) = r;
        return z;
    }

    Beamformer unpack_beamformer(const RVector &z) const
    {
        CMatrix M(N, K + 1);
        for (Eigen::Index j = 0; j <= K; ++j)
            for (Eigen::Index i = 0; i < N; ++i)
                M(i, j) = cplx(z[block(j) + i], z[block(j) + N + i]);
        return Beamformer(std::move(M));
    }

    RateAllocation unpack_rates(const RVector &z) const { return z.segment(rate_offset(), K); }

    double power_slack(const RVector &z) const { return power_budget - z.head(rate_offset()).squaredNorm(); }

    Eigen::Index N, K;
    Quadratic objective;
    std::vector<Quadratic> surrogates;
    double power_budget = 0.0;
};

} // namespace detail

struct InteriorPoint {
    Beamformer beamformer;
    RateAllocation rates;
    double delta = 0.0;
};

// Pulls a (nearly) feasible point strictly inside every inequality: F and r_c
// shrink by (1 - delta), r_c is capped below the smallest surrogate and lifted
// off zero. delta is the first of {1e-6, 1e-4, 1e-2} that gives positive
// margins everywhere.
inline InteriorPoint make_strict_interior(const SubproblemSpec &spec, const Beamformer &F, const RateAllocation &r,
                                          bool keep_beamformer = false)
{
    const Eigen::Index K = spec.channels.cols();
    for (double delta : {1e-6, 1e-4, 1e-2}) {
        const double s = 1.0 - delta;
        const Beamformer Fs(keep_beamformer ? F.matrix : CMatrix(s * F.matrix));
        if (!keep_beamformer && !(spec.power_budget - Fs.power() > 0.0))
            continue;
        double cap = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k)
            cap = std::min(cap, common_surrogate(spec.channels.col(k), spec.noise[k], Fs, spec.aux.mu[k],
                                                 spec.aux.eta[k]) /
                                    kLn2);
        if (!(cap > 0.0) || !std::isfinite(cap))
            continue;
        const RVector rp = r.cwiseMax(0.0);
        const double total = rp.sum();
        const double scale = total > 0.0 ? s * std::min(1.0, cap / total) : 0.0;
        RVector rs = scale * rp + RVector::Constant(K, delta * cap / (2.0 * static_cast<double>(K)));

        bool ok = (rs.array() > 0.0).all();
        for (Eigen::Index k = 0; k < K && ok; ++k)
            ok = common_constraint_surplus(spec.channels, spec.noise, Fs, rs, spec.aux.mu, spec.aux.eta,
                                           static_cast<int>(k)) > 0.0;
        if (ok)
            return {Fs, std::move(rs), delta};
    }
    throw SolverError(SolverErrorKind::CannotInteriorize, "make_strict_interior: no shrink factor up to 1e-2 works.");
}

inline double subproblem_objective(const SubproblemSpec &spec, const Beamformer &F, const RateAllocation &r)
{
    return reformulated_objective(spec.channels, spec.noise, F, r, spec.aux.alpha, spec.aux.beta).value;
}

// Largest violation of the subproblem constraints (0 when feasible).
inline double subproblem_violation(const SubproblemSpec &spec, const Beamformer &F, const RateAllocation &r)
{
    double v = std::max(0.0, F.power() - spec.power_budget);
    v = std::max(v, -r.minCoeff());
    for (Eigen::Index k = 0; k < spec.channels.cols(); ++k)
        v = std::max(v, -common_constraint_surplus(spec.channels, spec.noise, F, r, spec.aux.mu, spec.aux.eta,
                                                   static_cast<int>(k)));
    return v;
}

inline SubproblemResult solve(const SubproblemSpec &spec, const SolverConfig &cfg = {})
{
    cfg.validate();
    const Eigen::Index K = spec.channels.cols();
    const Eigen::Index N = spec.channels.rows();
    if (spec.beamformer.matrix.rows() != N || spec.beamformer.matrix.cols() != K + 1 || spec.rates.size() != K ||
        spec.noise.size() != K || spec.aux.alpha.size() != K || spec.aux.beta.size() != K ||
        spec.aux.mu.size() != K || spec.aux.eta.size() != K)
        throw std::invalid_argument("solve: subproblem dimensions are inconsistent.");

    {
        const double eps = cfg.feasibility_eps;
        bool ok = spec.beamformer.power() <= spec.power_budget * (1.0 + eps) && spec.rates.minCoeff() >= -eps;
        for (Eigen::Index k = 0; k < K && ok; ++k)
            ok = common_constraint_surplus(spec.channels, spec.noise, spec.beamformer, spec.rates, spec.aux.mu,
                                           spec.aux.eta, static_cast<int>(k)) >= -eps;
        if (!ok)
            throw SolverError(SolverErrorKind::InfeasibleStart, "solve: warm start violates a constraint.");
    }

    const detail::SubproblemModel model(spec);
    const InteriorPoint start = make_strict_interior(spec, spec.beamformer, spec.rates, cfg.freeze_beamformer);
    RVector z = model.pack(start.beamformer, start.rates);

    const Eigen::Index n = model.size();
    const Eigen::Index first = cfg.freeze_beamformer ? model.rate_offset() : 0; // first free coordinate
    const Eigen::Index nfree = n - first;
    const bool use_power = !cfg.freeze_beamformer;
    const double m = static_cast<double>(2 * K + (use_power ? 1 : 0));

    // Strict feasibility of z, plus the barrier value.
    auto barrier_value = [&](const RVector &zz, double t, double &out) {
        double phi = t * model.objective.value(zz);
        if (use_power) {
            const double s = model.power_slack(zz);
            if (!(s > 0.0))
                return false;
            phi += std::log(s);
        }
        for (Eigen::Index k = 0; k < K; ++k) {
            const double s = model.surrogates[static_cast<std::size_t>(k)].value(zz);
            const double r = zz[model.rate_offset() + k];
            if (!(s > 0.0) || !(r > 0.0))
                return false;
            phi += std::log(s) + std::log(r);
        }
        out = phi;
        return std::isfinite(phi);
    };

    SubproblemResult res;
    double t = cfg.barrier_start;
    bool stop = false;
    RVector grad(n);
    RMatrix hess(n, n);
    for (int stage = 0; stage < cfg.max_outer_iters && !stop; ++stage) {
        int iters = 0;
        bool centered = false;
        for (; iters < cfg.max_newton_iters; ++iters) {
            // gradient and Hessian of t*Ghat + sum log s_i
            grad = t * (2.0 * model.objective.Q * z + model.objective.q);
            hess = (2.0 * t) * model.objective.Q;
            if (use_power) {
                const double s = model.power_slack(z);
                RVector g = RVector::Zero(n);
                g.head(model.rate_offset()) = -2.0 * z.head(model.rate_offset());
                grad += g / s;
                hess.topLeftCorner(model.rate_offset(), model.rate_offset()).diagonal().array() -= 2.0 / s;
                hess.noalias() -= (g * g.transpose()) / (s * s);
            }
            for (Eigen::Index k = 0; k < K; ++k) {
                const detail::Quadratic &q = model.surrogates[static_cast<std::size_t>(k)];
                const RVector Qz = q.Q * z;
                const double s = z.dot(Qz) + q.q.dot(z) + q.c;
                const RVector g = 2.0 * Qz + q.q;
                grad += g / s;
                hess += (2.0 / s) * q.Q;
                hess.noalias() -= (g * g.transpose()) / (s * s);
                const Eigen::Index ri = model.rate_offset() + k;
                const double r = z[ri];
                grad[ri] += 1.0 / r;
                hess(ri, ri) -= 1.0 / (r * r);
            }

            const RVector g_free = grad.tail(nfree);
            RMatrix A = -hess.bottomRightCorner(nfree, nfree);
            Eigen::LLT<RMatrix> llt(A);
            if (llt.info() != Eigen::Success) {
                A.diagonal().array() += 1e-12 * (1.0 + A.diagonal().cwiseAbs().maxCoeff());
                llt.compute(A);
                if (llt.info() != Eigen::Success)
                    throw SolverError(SolverErrorKind::BarrierDiverged, "solve: Newton system is not definite.");
            }
            const RVector d_free = llt.solve(g_free);
            const double decrement = g_free.dot(d_free);
            if (!std::isfinite(decrement))
                throw SolverError(SolverErrorKind::BarrierDiverged, "solve: non-finite Newton decrement.");
            if (decrement / 2.0 <= cfg.newton_tol) {
                centered = true;
                break;
            }

            RVector d = RVector::Zero(n);
            d.tail(nfree) = d_free;
            double phi0 = 0.0;
            barrier_value(z, t, phi0);
            double a = 1.0;
            double phi = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
                const RVector trial = z + a * d;
                if (barrier_value(trial, t, phi) && phi > phi0 && phi >= phi0 + 0.01 * a * decrement) {
                    z = trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // Rounding floor of the barrier value: nothing left to gain at this t.
                centered = decrement < 1e-3;
                stop = !centered;
                break;
            }
        }

        if (!centered && !stop)
            throw SolverError(SolverErrorKind::BarrierDiverged, "solve: centering did not converge.");

        BarrierStage st;
        st.t = t;
        st.newton_iters = iters;
        st.objective = model.objective.value(z);
        st.max_violation = subproblem_violation(spec, model.unpack_beamformer(z), model.unpack_rates(z));
        res.trace.push_back(st);
        res.newton_iters += iters;

        if (m / t < cfg.gap_tol)
            break;
        t *= cfg.barrier_mult;
    }

    res.beamformer = model.unpack_beamformer(z);
    res.rates = model.unpack_rates(z);
    res.objective = subproblem_objective(spec, res.beamformer, res.rates);

    const double warm = subproblem_objective(spec, spec.beamformer, spec.rates);
    if (res.objective < warm) {
        res.beamformer = spec.beamformer;
        res.rates = spec.rates;
        res.objective = warm;
        res.kept_warm_start = true;
    }
    return res;
}

} // namespace marsma

#endif
