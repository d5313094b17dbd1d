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

#ifndef MARSMA_POSITION_OPTIMIZER_HPP
#define MARSMA_POSITION_OPTIMIZER_HPP

#include "marsma/beamforming.hpp"

#include <numeric>
#include <ostream>

namespace marsma {

// ---------- Coarse stage ----------

// Every sorted N_T-subset of the grid x_min + i * spacing inside [x_min, x_max].
// Candidates come out in lexicographic order.
inline std::vector<AntennaLayout> enumerate_coarse_grid(const SystemParams &p, double spacing,
                                                        std::size_t max_candidates = 2'000'000)
{
    if (!(spacing > 0.0))
        throw std::invalid_argument("enumerate_coarse_grid: spacing must be positive.");
    if (spacing + kGeometryTol < p.min_spacing_m)
        throw std::invalid_argument("enumerate_coarse_grid: grid spacing below the minimum antenna spacing.");
    const int points = static_cast<int>(std::floor((p.x_max_m - p.x_min_m) / spacing + 1e-9)) + 1;
    const int n = p.num_tx_antennas;
    if (points < n)
        throw std::invalid_argument("enumerate_coarse_grid: grid has fewer points than antennas.");

    double count = 1.0;
    for (int i = 0; i < n; ++i)
        count = count * (points - i) / (i + 1);
    if (count > static_cast<double>(max_candidates))
        throw std::invalid_argument("enumerate_coarse_grid: too many candidates.");

    std::vector<AntennaLayout> out;
    out.reserve(static_cast<std::size_t>(count + 0.5));
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        RVector x(n);
        for (int i = 0; i < n; ++i)
            x[i] = std::min(p.x_min_m + idx[static_cast<std::size_t>(i)] * spacing, p.x_max_m);
        out.emplace_back(std::move(x));
        int i = n - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == points - n + i)
            --i;
        if (i < 0)
            break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

struct CoarseSelection {
    std::size_t index = 0;
    IterateState state;          // after the single FP pass
    std::vector<double> scores;  // NaN for candidates whose pass failed
    std::size_t failures = 0;
};

// Scores every candidate with one FP pass from the cold start and keeps the
// best. Scores within `tie_tol` (relative) of each other count as equal; the
// lexicographically smallest layout wins a tie.
inline CoarseSelection coarse_select(const std::vector<AntennaLayout> &candidates, const ChannelScenario &scenario,
                                     const SolverConfig &cfg = {}, double tie_tol = 1e-6)
{
    if (candidates.empty())
        throw std::invalid_argument("coarse_select: no candidates.");
    CoarseSelection sel;
    sel.scores.assign(candidates.size(), std::numeric_limits<double>::quiet_NaN());
    bool have = false;
    double best = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        IterateState s;
        try {
            s = cold_start(scenario, candidates[i]);
            fp_pass(s, scenario, cfg);
        } catch (const SolverError &) {
            ++sel.failures;
            continue;
        }
        sel.scores[i] = s.objective;
        const bool better = !have || s.objective > best + tie_tol * std::max(1.0, std::abs(best));
        const bool tie = have && !better && s.objective >= best - tie_tol * std::max(1.0, std::abs(best));
        if (better || (tie && std::lexicographical_compare(
                                  candidates[i].positions.begin(), candidates[i].positions.end(),
                                  candidates[sel.index].positions.begin(), candidates[sel.index].positions.end()))) {
            if (better)
                best = s.objective;
            sel.index = i;
            sel.state = std::move(s);
            have = true;
        }
    }
    if (!have)
        throw SolverError(SolverErrorKind::BarrierDiverged, "coarse_select: every candidate failed.");
    return sel;
}

// ---------- Fine stage ----------

// d Ghat / d x_n for fixed (F, r_c, alpha, beta). Only entry n of h_k depends
// on x_n, so d(h_k^H f_j)/dx_n = conj(h'_{k,n}) f_{j,n}.
inline RVector objective_gradient(const AntennaLayout &layout, const ChannelScenario &scenario, const Beamformer &F,
                                  const RVector &alpha, const CVector &beta)
{
    const int N = layout.size();
    const int K = scenario.num_users();
    if (F.num_tx() != N || F.num_users() != K || alpha.size() != K || beta.size() != K)
        throw std::invalid_argument("objective_gradient: dimension mismatch.");
    const CMatrix H = channel_matrix(layout, scenario);
    const CMatrix D = channel_position_derivative(layout, scenario);
    const CMatrix U = H.adjoint() * F.matrix; // U(k, j) = h_k^H f_j

    RVector g = RVector::Zero(N);
    for (int n = 0; n < N; ++n) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            const cplx dh = std::conj(D(n, k));
            const double d1 = std::sqrt(alpha[k] + 1.0) * std::real(std::conj(beta[k]) * dh * F.matrix(n, k));
            double d2 = 0.0;
            for (int j = 0; j < K; ++j)
                d2 += std::real(std::conj(U(k, j)) * dh * F.matrix(n, j));
            d2 *= std::norm(beta[k]);
            // d|u|^2 = 2 Re(conj(u) du), so both parts share the 2/ln2 factor.
            acc += d1 - d2;
        }
        g[n] = 2.0 / kLn2 * acc;
    }
    return g;
}

struct AscentConfig {
    double initial_step_wavelengths = 0.1; // first trial displacement, in wavelengths
    double min_step_wavelengths = 1e-6;    // stall once the trial displacement drops below this
    double shrink = 1.5;
};

struct AscentState {
    double kappa = 0.0;     // meters per unit gradient; <= 0 selects the default rule
    double kappa_min = 0.0; // <= 0 selects the default rule
    AntennaLayout layout;
};

struct AscentStep {
    double kappa = 0.0;
    bool accepted = false;
    double objective = 0.0;
};

struct AscentResult {
    AscentState state;
    Beamformer beamformer; // rows follow the antennas after re-sorting
    double objective = 0.0;
    int rejections = 0;
    bool stalled = false;
    std::vector<AscentStep> steps;
};

inline void write_trace_csv(std::ostream &os, const std::vector<AscentStep> &steps)
{
    os << "trial,kappa,accepted,objective\n";
    os.precision(17);
    for (std::size_t i = 0; i < steps.size(); ++i)
        os << i << ',' << steps[i].kappa << ',' << (steps[i].accepted ? 1 : 0) << ',' << steps[i].objective << '\n';
}

// One gradient step x + kappa * grad, backtracked by kappa /= 1.5 until the
// proposal improves on `prev_objective` and stays inside the box, the spacing
// constraint and the reformulated common-rate constraints at the current
// (F, r_c, mu, eta). Stalls once the displacement kappa*|grad| falls under
// kappa_min*|grad|.
inline AscentResult ascend_positions(const AscentState &state, const ChannelScenario &scenario, const Beamformer &F,
                                     const RateAllocation &r_c, const AuxState &aux, double prev_objective,
                                     const AscentConfig &cfg = {})
{
    const SystemParams &p = scenario.params;
    const RVector noise = p.noise_vector();
    const int N = state.layout.size();
    const int K = scenario.num_users();
    const double lambda = p.wavelength_m;

    AscentResult res;
    res.state = state;
    res.beamformer = F;
    res.objective = prev_objective;

    const RVector grad = objective_gradient(state.layout, scenario, F, aux.alpha, aux.beta);
    const double gnorm = grad.norm();
    double kappa = state.kappa > 0.0 ? state.kappa : cfg.initial_step_wavelengths * lambda / (gnorm + 1e-300);
    const double kappa_min = state.kappa_min > 0.0 ? state.kappa_min
                                                   : cfg.min_step_wavelengths * lambda / (gnorm + 1e-300);
    res.state.kappa_min = kappa_min;
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) {
        res.stalled = true;
        res.state.kappa = kappa;
        return res;
    }

    std::vector<int> order(static_cast<std::size_t>(N));
    while (kappa >= kappa_min) {
        const RVector trial = state.layout.positions + kappa * grad;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return trial[a] < trial[b]; });
        AntennaLayout proposal{RVector(N)};
        Beamformer Fp{CMatrix(N, K + 1)};
        for (int i = 0; i < N; ++i) {
            proposal.positions[i] = trial[order[static_cast<std::size_t>(i)]];
            Fp.matrix.row(i) = F.matrix.row(order[static_cast<std::size_t>(i)]);
        }

        bool ok = proposal.is_feasible(p);
        double value = -std::numeric_limits<double>::infinity();
        if (ok) {
            const CMatrix H = channel_matrix(proposal, scenario);
            for (int k = 0; k < K && ok; ++k)
                ok = common_constraint_surplus(H, noise, Fp, r_c, aux.mu, aux.eta, k) >= 0.0;
            if (ok) {
                value = reformulated_objective(H, noise, Fp, r_c, aux.alpha, aux.beta).value;
                ok = value > prev_objective;
            }
        }
        res.steps.push_back({kappa, ok, value});
        if (ok) {
            res.state.layout = std::move(proposal);
            res.state.kappa = kappa;
            res.beamformer = std::move(Fp);
            res.objective = value;
            return res;
        }
        ++res.rejections;
        kappa /= cfg.shrink;
    }
    res.state.kappa = kappa;
    res.stalled = true;
    return res;
}

} // namespace marsma

#endif
