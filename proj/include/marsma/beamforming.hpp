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

#ifndef MARSMA_BEAMFORMING_HPP
#define MARSMA_BEAMFORMING_HPP

#include "marsma/channel_model.hpp"
#include "marsma/fp_updates.hpp"
#include "marsma/subproblem_solver.hpp"

#include <Eigen/SVD>

namespace marsma {

// MRT private precoders and a common precoder along the dominant left
// singular vector of H; every column carries P_0 / (K+1).
inline Beamformer init_beamformer(const CMatrix &H, double power_budget)
{
    const Eigen::Index N = H.rows();
    const Eigen::Index K = H.cols();
    if (H.norm() == 0.0)
        throw std::invalid_argument("init_beamformer: zero channel matrix.");
    const double column_norm = std::sqrt(power_budget / static_cast<double>(K + 1));
    Beamformer F(static_cast<int>(N), static_cast<int>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
        const double n = H.col(k).norm();
        if (n > 0.0)
            F.matrix.col(k) = H.col(k) * (column_norm / n);
    }
    Eigen::JacobiSVD<CMatrix> svd(H, Eigen::ComputeThinU);
    CVector u = svd.matrixU().col(0);
    // Fix the phase so the first significant entry is real positive.
    Eigen::Index pivot = 0;
    u.cwiseAbs().maxCoeff(&pivot);
    u *= std::conj(u[pivot]) / std::abs(u[pivot]);
    F.common_stream() = u * column_norm;
    return F;
}

// One point of the alternating optimization at a fixed layout. `objective`
// is the surrogate at tight auxiliaries, which equals the achieved sum rate.
struct IterateState {
    AntennaLayout layout;
    CMatrix channels;
    Beamformer beamformer;
    RateAllocation rates;
    AuxState aux;
    double objective = 0.0;
};

inline double tight_objective(const IterateState &s, const RVector &noise)
{
    return reformulated_objective(s.channels, noise, s.beamformer, s.rates, s.aux.alpha, s.aux.beta).value;
}

// Cold start: init_beamformer, r_c = 0, auxiliaries from their closed forms.
// F is halved until every common-rate surplus is nonnegative.
inline IterateState cold_start(const ChannelScenario &scenario, const AntennaLayout &layout)
{
    const RVector noise = scenario.params.noise_vector();
    const int K = scenario.num_users();
    IterateState s;
    s.layout = layout;
    s.channels = channel_matrix(layout, scenario);
    s.beamformer = init_beamformer(s.channels, scenario.params.tx_power_w);
    s.rates = RVector::Zero(K);
    s.aux = refresh_aux(s.channels, noise, s.beamformer);

    auto surplus_ok = [&] {
        for (int k = 0; k < K; ++k)
            if (common_constraint_surplus(s.channels, noise, s.beamformer, s.rates, s.aux.mu, s.aux.eta, k) < 0.0)
                return false;
        return true;
    };
    for (int halvings = 0; !surplus_ok(); ++halvings) {
        if (halvings == 30) {
            s.aux = refresh_aux(s.channels, noise, s.beamformer);
            if (!surplus_ok())
                throw SolverError(SolverErrorKind::InfeasibleStart, "cold_start: no feasible scaling found.");
            break;
        }
        s.beamformer.matrix *= 0.5;
    }
    s.objective = tight_objective(s, noise);
    return s;
}

// One FP pass: solve the beamformer/rate subproblem, then refresh the
// auxiliaries at the new beamformer. Returns the Newton iteration count.
inline int fp_pass(IterateState &s, const ChannelScenario &scenario, const SolverConfig &cfg)
{
    const RVector noise = scenario.params.noise_vector();
    SubproblemSpec spec{s.channels, s.aux, noise, scenario.params.tx_power_w, s.beamformer, s.rates};
    SubproblemResult res = solve(spec, cfg);
    s.beamformer = std::move(res.beamformer);
    s.rates = std::move(res.rates);
    s.aux = refresh_aux(s.channels, noise, s.beamformer);
    s.objective = tight_objective(s, noise);
    return res.newton_iters;
}

} // namespace marsma

#endif
