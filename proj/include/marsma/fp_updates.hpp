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

#ifndef MARSMA_FP_UPDATES_HPP
#define MARSMA_FP_UPDATES_HPP

#include "marsma/rsma_metrics.hpp"

namespace marsma {

// Closed-form maximizers of the quadratic-transform surrogates. Each one is a
// coordinate-ascent step with the remaining variables held fixed.

inline RVector update_alpha(const CMatrix &H, const RVector &noise, const Beamformer &F)
{
    RVector a(H.cols());
    for (Eigen::Index k = 0; k < H.cols(); ++k)
        a[k] = sinr_private(H.col(k), F, noise[k], static_cast<int>(k));
    return a;
}

inline RVector update_mu(const CMatrix &H, const RVector &noise, const Beamformer &F)
{
    RVector m(H.cols());
    for (Eigen::Index k = 0; k < H.cols(); ++k)
        m[k] = sinr_common(H.col(k), F, noise[k]);
    return m;
}

inline CVector update_beta(const CMatrix &H, const RVector &noise, const Beamformer &F, const RVector &alpha)
{
    CVector b(H.cols());
    for (Eigen::Index k = 0; k < H.cols(); ++k) {
        const CVector h = H.col(k);
        const double denom = detail::private_power(h, F) + noise[k];
        b[k] = std::sqrt(1.0 + alpha[k]) * h.dot(F.private_stream(static_cast<int>(k))) / denom;
    }
    return b;
}

inline CVector update_eta(const CMatrix &H, const RVector &noise, const Beamformer &F, const RVector &mu)
{
    CVector e(H.cols());
    for (Eigen::Index k = 0; k < H.cols(); ++k) {
        const CVector h = H.col(k);
        const cplx hc = h.dot(F.common_stream());
        const double denom = detail::private_power(h, F) + std::norm(hc) + noise[k];
        e[k] = std::sqrt(1.0 + mu[k]) * hc / denom;
    }
    return e;
}

// alpha and mu first, then beta and eta from them. The surrogates are tight
// at F afterwards.
inline AuxState refresh_aux(const CMatrix &H, const RVector &noise, const Beamformer &F)
{
    AuxState s;
    s.alpha = update_alpha(H, noise, F);
    s.mu = update_mu(H, noise, F);
    s.beta = update_beta(H, noise, F, s.alpha);
    s.eta = update_eta(H, noise, F, s.mu);
    return s;
}

inline RVector update_alpha(const ChannelScenario &sc, const AntennaLayout &x, const Beamformer &F)
{
    return update_alpha(channel_matrix(x, sc), sc.params.noise_vector(), F);
}
inline RVector update_mu(const ChannelScenario &sc, const AntennaLayout &x, const Beamformer &F)
{
    return update_mu(channel_matrix(x, sc), sc.params.noise_vector(), F);
}
inline CVector update_beta(const ChannelScenario &sc, const AntennaLayout &x, const Beamformer &F, const RVector &alpha)
{
    return update_beta(channel_matrix(x, sc), sc.params.noise_vector(), F, alpha);
}
inline CVector update_eta(const ChannelScenario &sc, const AntennaLayout &x, const Beamformer &F, const RVector &mu)
{
    return update_eta(channel_matrix(x, sc), sc.params.noise_vector(), F, mu);
}
inline AuxState refresh_aux(const ChannelScenario &sc, const AntennaLayout &x, const Beamformer &F)
{
    return refresh_aux(channel_matrix(x, sc), sc.params.noise_vector(), F);
}

} // namespace marsma

#endif
