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

#ifndef MARSMA_CHANNEL_MODEL_HPP
#define MARSMA_CHANNEL_MODEL_HPP

#include "marsma/types.hpp"

#include <nlohmann/json.hpp>

#include <random>

namespace marsma {

// Far-field response of one antenna at position x over a set of path angles:
// entry l = exp(j 2pi/lambda x cos(theta_l)).
inline CVector field_response_vector(double x, const RVector &angles, double wavelength)
{
    if (!(wavelength > 0.0) || !std::isfinite(wavelength) || !std::isfinite(x))
        throw std::invalid_argument("field_response_vector: invalid position or wavelength.");
    const double k0 = 2.0 * kPi / wavelength;
    CVector a(angles.size());
    for (Eigen::Index l = 0; l < angles.size(); ++l) {
        if (!std::isfinite(angles[l]))
            throw std::invalid_argument("field_response_vector: non-finite angle.");
        a[l] = std::polar(1.0, k0 * x * std::cos(angles[l]));
    }
    return a;
}

// L_p x N_T matrix whose i-th column is the response of antenna i.
inline CMatrix field_response_matrix(const AntennaLayout &layout, const RVector &angles, double wavelength)
{
    CMatrix A(angles.size(), layout.size());
    for (int i = 0; i < layout.size(); ++i)
        A.col(i) = field_response_vector(layout.positions[i], angles, wavelength);
    return A;
}

// h_k = A^H(x) Sigma_k 1, k is zero-based.
inline CVector user_channel(const AntennaLayout &layout, const ChannelScenario &scenario, int k)
{
    if (k < 0 || k >= scenario.num_users())
        throw std::out_of_range("user_channel: user index out of range.");
    if (layout.size() != scenario.params.num_tx_antennas)
        throw std::invalid_argument("user_channel: layout size does not match N_T.");
    const RVector angles = scenario.aod_rad.row(k).transpose();
    const CMatrix A = field_response_matrix(layout, angles, scenario.params.wavelength_m);
    return A.adjoint() * scenario.path_gain.row(k).transpose();
}

// N_T x K channel matrix H = [h_1 ... h_K].
inline CMatrix channel_matrix(const AntennaLayout &layout, const ChannelScenario &scenario)
{
    CMatrix H(layout.size(), scenario.num_users());
    for (int k = 0; k < scenario.num_users(); ++k)
        H.col(k) = user_channel(layout, scenario, k);
    return H;
}

// Elementwise derivative dh_{k,i}/dx_i, returned as an N_T x K matrix.
inline CMatrix channel_position_derivative(const AntennaLayout &layout, const ChannelScenario &scenario)
{
    const int N = layout.size();
    const int K = scenario.num_users();
    const double k0 = 2.0 * kPi / scenario.params.wavelength_m;
    CMatrix D = CMatrix::Zero(N, K);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < N; ++i) {
            cplx acc = 0.0;
            for (int l = 0; l < scenario.num_paths(); ++l) {
                const double c = std::cos(scenario.aod_rad(k, l));
                acc += scenario.path_gain(k, l) * cplx(0.0, -k0 * c) * std::polar(1.0, -k0 * layout.positions[i] * c);
            }
            D(i, k) = acc;
        }
    return D;
}

// Draws user distances uniformly in [d_min, d_max], path AoDs i.i.d. uniform
// in [-pi/2, pi/2] and path gains CN(0, C_0 D_k^-tau / L_p).
inline ChannelScenario generate_scenario(const SystemParams &params, std::uint64_t seed)
{
    params.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(params.distance_min_m, params.distance_max_m);
    std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int K = params.num_users;
    const int L = params.num_paths;
    ChannelScenario s;
    s.params = params;
    s.seed = seed;
    s.distance_m.resize(K);
    s.aod_rad.resize(K, L);
    s.path_gain.resize(K, L);
    for (int k = 0; k < K; ++k) {
        const double d = dist(rng);
        s.distance_m[k] = d;
        const double variance = params.reference_gain() * std::pow(d, -params.path_loss_exponent) / L;
        const double sd = std::sqrt(variance / 2.0);
        for (int l = 0; l < L; ++l) {
            s.aod_rad(k, l) = angle(rng);
            const double re = normal(rng);
            const double im = normal(rng);
            s.path_gain(k, l) = cplx(sd * re, sd * im);
        }
    }
    return s;
}

// ---------- JSON ----------

inline nlohmann::json to_json(const SystemParams &p)
{
    nlohmann::json j = {
        {"num_tx_antennas", p.num_tx_antennas},
        {"num_users", p.num_users},
        {"num_paths", p.num_paths},
        {"wavelength_m", p.wavelength_m},
        {"tx_power_w", p.tx_power_w},
        {"noise_power_w", p.noise_power_w},
        {"x_min_m", p.x_min_m},
        {"x_max_m", p.x_max_m},
        {"min_spacing_m", p.min_spacing_m},
        {"path_loss_exponent", p.path_loss_exponent},
        {"reference_gain", p.reference_gain()},
        {"distance_min_m", p.distance_min_m},
        {"distance_max_m", p.distance_max_m},
    };
    return j;
}

inline SystemParams system_params_from_json(const nlohmann::json &j)
{
    SystemParams p;
    p.num_tx_antennas = j.at("num_tx_antennas").get<int>();
    p.num_users = j.at("num_users").get<int>();
    p.num_paths = j.at("num_paths").get<int>();
    p.wavelength_m = j.at("wavelength_m").get<double>();
    p.tx_power_w = j.at("tx_power_w").get<double>();
    p.noise_power_w = j.at("noise_power_w").get<std::vector<double>>();
    p.x_min_m = j.at("x_min_m").get<double>();
    p.x_max_m = j.at("x_max_m").get<double>();
    p.min_spacing_m = j.at("min_spacing_m").get<double>();
    p.path_loss_exponent = j.value("path_loss_exponent", 2.8);
    if (j.contains("reference_gain"))
        p.reference_gain_override = j.at("reference_gain").get<double>();
    p.distance_min_m = j.value("distance_min_m", 20.0);
    p.distance_max_m = j.value("distance_max_m", 100.0);
    p.validate();
    return p;
}

// Gains are stored as [re, im] pairs.
inline nlohmann::json to_json(const ChannelScenario &s)
{
    nlohmann::json aod = nlohmann::json::array();
    nlohmann::json gain = nlohmann::json::array();
    for (int k = 0; k < s.num_users(); ++k) {
        nlohmann::json arow = nlohmann::json::array();
        nlohmann::json grow = nlohmann::json::array();
        for (int l = 0; l < s.num_paths(); ++l) {
            arow.push_back(s.aod_rad(k, l));
            grow.push_back({s.path_gain(k, l).real(), s.path_gain(k, l).imag()});
        }
        aod.push_back(std::move(arow));
        gain.push_back(std::move(grow));
    }
    std::vector<double> dist(s.distance_m.data(), s.distance_m.data() + s.distance_m.size());
    return {{"seed", s.seed}, {"params", to_json(s.params)}, {"aod_rad", aod}, {"path_gain", gain}, {"distance_m", dist}};
}

inline ChannelScenario scenario_from_json(const nlohmann::json &j)
{
    ChannelScenario s;
    s.params = system_params_from_json(j.at("params"));
    s.seed = j.value("seed", std::uint64_t{0});
    const int K = s.params.num_users;
    const int L = s.params.num_paths;
    s.aod_rad.resize(K, L);
    s.path_gain.resize(K, L);
    s.distance_m.resize(K);
    const auto &aod = j.at("aod_rad");
    const auto &gain = j.at("path_gain");
    const auto &dist = j.at("distance_m");
    if (aod.size() != static_cast<std::size_t>(K) || gain.size() != static_cast<std::size_t>(K) ||
        dist.size() != static_cast<std::size_t>(K))
        throw std::invalid_argument("scenario JSON: user dimension mismatch.");
    for (int k = 0; k < K; ++k) {
        if (aod[k].size() != static_cast<std::size_t>(L) || gain[k].size() != static_cast<std::size_t>(L))
            throw std::invalid_argument("scenario JSON: path dimension mismatch.");
        s.distance_m[k] = dist[k].get<double>();
        for (int l = 0; l < L; ++l) {
            s.aod_rad(k, l) = aod[k][l].get<double>();
            s.path_gain(k, l) = cplx(gain[k][l].at(0).get<double>(), gain[k][l].at(1).get<double>());
        }
    }
    s.validate();
    return s;
}

} // namespace marsma

#endif
