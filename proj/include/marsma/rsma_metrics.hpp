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

#ifndef MARSMA_RSMA_METRICS_HPP
#define MARSMA_RSMA_METRICS_HPP

#include "marsma/channel_model.hpp"
#include "marsma/types.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace marsma {

// Public rates are log2 (bits/s/Hz). Natural logs only appear inside the
// quadratic-transform surrogates, with explicit 1/ln2 factors.

namespace detail {

inline void check_noise(double noise)
{
    if (!(noise > 0.0) || !std::isfinite(noise))
        throw std::invalid_argument("noise power must be positive.");
}

inline void check_dims(const CVector &h, const Beamformer &F)
{
    if (h.size() != F.matrix.rows())
        throw std::invalid_argument("channel and beamformer dimensions disagree.");
}

// Sum_{j<K} |h^H f_j|^2
inline double private_power(const CVector &h, const Beamformer &F)
{
    double s = 0.0;
    for (int j = 0; j < F.num_users(); ++j)
        s += std::norm(h.dot(F.private_stream(j)));
    return s;
}

} // namespace detail

// Common stream is decoded first, all K private streams act as interference.
inline double sinr_common(const CVector &h, const Beamformer &F, double noise)
{
    detail::check_noise(noise);
    detail::check_dims(h, F);
    return std::norm(h.dot(F.common_stream())) / (detail::private_power(h, F) + noise);
}

// After SIC removes the common stream, only other private streams interfere.
inline double sinr_private(const CVector &h, const Beamformer &F, double noise, int k)
{
    detail::check_noise(noise);
    detail::check_dims(h, F);
    if (k < 0 || k >= F.num_users())
        throw std::out_of_range("sinr_private: stream index out of range.");
    double interference = 0.0;
    for (int j = 0; j < F.num_users(); ++j)
        if (j != k)
            interference += std::norm(h.dot(F.private_stream(j)));
    return std::norm(h.dot(F.private_stream(k))) / (interference + noise);
}

struct RateReport {
    RVector sinr_common;
    RVector sinr_private;
    RVector private_rate;     // log2(1 + SINR_p,k)
    RVector common_rate_cap;  // log2(1 + SINR_c,k)
    RVector common_rate;      // allocation r_c as given
    double common_cap = 0.0;  // min_k log2(1 + SINR_c,k)
    double sum_rate = 0.0;    // sum_k r_p,k + r_c,k
    double saturated_sum_rate = 0.0; // same, with sum r_c raised to common_cap

    static std::string csv_header() { return "sum_rate,saturated_sum_rate,common_cap,sum_private,sum_common"; }

    // Column order matches csv_header().
    std::string csv_row() const
    {
        std::ostringstream os;
        os.precision(17);
        os << sum_rate << ',' << saturated_sum_rate << ',' << common_cap << ',' << private_rate.sum() << ','
           << common_rate.sum();
        return os.str();
    }
};

inline RateReport achieved_sum_rate(const CMatrix &H, const RVector &noise, const Beamformer &F,
                                    const RateAllocation &r_c)
{
    const int K = static_cast<int>(H.cols());
    if (F.num_users() != K || r_c.size() != K || noise.size() != K)
        throw std::invalid_argument("achieved_sum_rate: dimension mismatch.");
    RateReport r;
    r.sinr_common.resize(K);
    r.sinr_private.resize(K);
    r.private_rate.resize(K);
    r.common_rate_cap.resize(K);
    r.common_rate = r_c;
    for (int k = 0; k < K; ++k) {
        const CVector h = H.col(k);
        r.sinr_common[k] = sinr_common(h, F, noise[k]);
        r.sinr_private[k] = sinr_private(h, F, noise[k], k);
        r.private_rate[k] = std::log2(1.0 + r.sinr_private[k]);
        r.common_rate_cap[k] = std::log2(1.0 + r.sinr_common[k]);
    }
    r.common_cap = r.common_rate_cap.minCoeff();
    r.sum_rate = r.private_rate.sum() + r_c.sum();
    r.saturated_sum_rate = r.private_rate.sum() + r.common_cap;
    return r;
}

inline RateReport achieved_sum_rate(const ChannelScenario &scenario, const AntennaLayout &layout,
                                    const Beamformer &F, const RateAllocation &r_c)
{
    return achieved_sum_rate(channel_matrix(layout, scenario), scenario.params.noise_vector(), F, r_c);
}

// Quadratic-transform surrogate split into its three parts.
struct ReformulatedObjective {
    double g0 = 0.0;  // (1/ln2) sum [ln(1+a) - a] + sum r_c
    RVector g1;       // sqrt(a_k+1) Re(b_k^* h_k^H f_k)
    RVector g2;       // |b_k|^2 (sum_j |h_k^H f_j|^2 + noise_k)
    double value = 0.0;
};

inline ReformulatedObjective reformulated_objective(const CMatrix &H, const RVector &noise, const Beamformer &F,
                                                    const RateAllocation &r_c, const RVector &alpha,
                                                    const CVector &beta)
{
    const int K = static_cast<int>(H.cols());
    if (alpha.size() != K || beta.size() != K || r_c.size() != K || F.num_users() != K)
        throw std::invalid_argument("reformulated_objective: dimension mismatch.");
    ReformulatedObjective out;
    out.g1.resize(K);
    out.g2.resize(K);
    double log_terms = 0.0;
    for (int k = 0; k < K; ++k) {
        if (!(alpha[k] > -1.0))
            throw std::invalid_argument("reformulated_objective: alpha must exceed -1.");
        log_terms += std::log1p(alpha[k]) - alpha[k];
        const CVector h = H.col(k);
        out.g1[k] = std::sqrt(alpha[k] + 1.0) * std::real(std::conj(beta[k]) * h.dot(F.private_stream(k)));
        out.g2[k] = std::norm(beta[k]) * (detail::private_power(h, F) + noise[k]);
    }
    out.g0 = log_terms / kLn2 + r_c.sum();
    out.value = out.g0 + (2.0 / kLn2) * out.g1.sum() - out.g2.sum() / kLn2;
    return out;
}

inline ReformulatedObjective reformulated_objective(const Beamformer &F, const RateAllocation &r_c,
                                                    const AntennaLayout &layout, const AuxState &aux,
                                                    const ChannelScenario &scenario)
{
    return reformulated_objective(channel_matrix(layout, scenario), scenario.params.noise_vector(), F, r_c, aux.alpha,
                                  aux.beta);
}

// t_k(F, mu_k, eta_k): concave lower bound on ln(1 + SINR_c,k).
inline double common_surrogate(const CVector &h, double noise, const Beamformer &F, double mu, cplx eta)
{
    if (!(mu > -1.0))
        throw std::invalid_argument("common_surrogate: mu must exceed -1.");
    const cplx hc = h.dot(F.common_stream());
    const double denom = detail::private_power(h, F) + std::norm(hc) + noise;
    return std::log1p(mu) - mu + 2.0 * std::sqrt(mu + 1.0) * std::real(std::conj(eta) * hc) - std::norm(eta) * denom;
}

// t_k - ln2 * sum_j r_c,j; nonnegative iff the reformulated common-rate constraint holds.
inline double common_constraint_surplus(const CMatrix &H, const RVector &noise, const Beamformer &F,
                                        const RateAllocation &r_c, const RVector &mu, const CVector &eta, int k)
{
    if (k < 0 || k >= H.cols())
        throw std::out_of_range("common_constraint_surplus: user index out of range.");
    return common_surrogate(H.col(k), noise[k], F, mu[k], eta[k]) - kLn2 * r_c.sum();
}

inline double common_constraint_surplus(const Beamformer &F, const RateAllocation &r_c, const AntennaLayout &layout,
                                        const AuxState &aux, const ChannelScenario &scenario, int k)
{
    return common_constraint_surplus(channel_matrix(layout, scenario), scenario.params.noise_vector(), F, r_c, aux.mu,
                                     aux.eta, k);
}

struct FeasibilityTolerances {
    double power = 1e-7;
    double rate = 1e-7;
    double geometry = 1e-9;
};

struct ConstraintCheck {
    bool ok = true;
    double slack = std::numeric_limits<double>::infinity(); // worst-case, negative when violated
};

struct FeasibilityReport {
    ConstraintCheck power;        // P_0 - tr(F^H F)
    ConstraintCheck common_rate;  // min_k log2(1+SINR_c,k) - sum r_c
    ConstraintCheck nonnegative;  // min_k r_c,k
    ConstraintCheck box;          // min over antennas of distance to the region boundary
    ConstraintCheck spacing;      // min adjacent gap - D_0

    bool all() const { return power.ok && common_rate.ok && nonnegative.ok && box.ok && spacing.ok; }
};

inline FeasibilityReport check_feasibility(const AntennaLayout &layout, const Beamformer &F, const RateAllocation &r_c,
                                           const ChannelScenario &scenario, const FeasibilityTolerances &tol = {})
{
    const SystemParams &p = scenario.params;
    FeasibilityReport rep;

    rep.power.slack = p.tx_power_w - F.power();
    rep.power.ok = rep.power.slack >= -tol.power;

    const RateReport rates = achieved_sum_rate(scenario, layout, F, r_c);
    rep.common_rate.slack = rates.common_cap - r_c.sum();
    rep.common_rate.ok = rep.common_rate.slack >= -tol.rate;

    rep.nonnegative.slack = r_c.size() ? r_c.minCoeff() : 0.0;
    rep.nonnegative.ok = rep.nonnegative.slack >= -tol.rate;

    for (int i = 0; i < layout.size(); ++i) {
        const double x = layout.positions[i];
        rep.box.slack = std::min({rep.box.slack, x - p.x_min_m, p.x_max_m - x});
    }
    rep.box.ok = rep.box.slack >= -tol.geometry;

    std::vector<double> sorted(layout.positions.data(), layout.positions.data() + layout.size());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        rep.spacing.slack = std::min(rep.spacing.slack, sorted[i] - sorted[i - 1] - p.min_spacing_m);
    rep.spacing.ok = rep.spacing.slack >= -tol.geometry;
    return rep;
}

} // namespace marsma

#endif
