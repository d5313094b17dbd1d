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

#ifndef MARSMA_TESTS_FIXTURES_HPP
#define MARSMA_TESTS_FIXTURES_HPP

#include "marsma/ao_driver.hpp"

#include <random>

namespace fixture {

using namespace marsma;

inline SystemParams small_params(int n, int k, int l, double aperture_wavelengths = 4.0)
{
    SystemParams p;
    p.num_tx_antennas = n;
    p.num_users = k;
    p.num_paths = l;
    p.x_max_m = aperture_wavelengths * p.wavelength_m;
    p.noise_power_w.assign(static_cast<std::size_t>(k), 1e-12);
    return p;
}

inline CMatrix random_cmatrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    CMatrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            M(i, j) = cplx(n(rng), n(rng));
    return M;
}

// Random sorted layout with spacing >= D_0 inside the region.
inline AntennaLayout random_layout(std::mt19937_64 &rng, const SystemParams &p)
{
    const int n = p.num_tx_antennas;
    const double slack = (p.x_max_m - p.x_min_m) - (n - 1) * p.min_spacing_m;
    std::uniform_real_distribution<double> u(0.0, slack);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (auto &v : g)
        v = u(rng);
    std::sort(g.begin(), g.end());
    RVector x(n);
    for (int i = 0; i < n; ++i)
        x[i] = p.x_min_m + g[static_cast<std::size_t>(i)] + i * p.min_spacing_m;
    return AntennaLayout(x);
}

// Beamformer scaled to use `fraction` of the power budget.
inline Beamformer random_beamformer(std::mt19937_64 &rng, int n, int k, double power, double fraction = 1.0)
{
    Beamformer F(random_cmatrix(rng, n, k + 1));
    F.matrix *= std::sqrt(fraction * power / F.power());
    return F;
}

// Noise-normalized problem: unit noise, channels of order one.
struct Instance {
    CMatrix H;
    RVector noise;
    Beamformer F;
    RateAllocation r;
};

inline Instance random_instance(std::mt19937_64 &rng, int n, int k, double power = 1.0)
{
    Instance in;
    in.H = random_cmatrix(rng, n, k, 1.0 / std::sqrt(2.0));
    in.noise = RVector::Ones(k);
    in.F = random_beamformer(rng, n, k, power);
    in.r = RVector::Zero(k);
    return in;
}

} // namespace fixture

#endif
