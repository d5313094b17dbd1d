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

#ifndef MARSMA_TYPES_HPP
#define MARSMA_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace marsma {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;

// Absolute slack (meters) accepted on box and spacing checks.
inline constexpr double kGeometryTol = 1e-9;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Physical and geometric parameters of one downlink system.
// Positions and lengths are in meters, powers in watts.
struct SystemParams {
    int num_tx_antennas = 4;
    int num_users = 4;
    int num_paths = 8;
    double wavelength_m = 0.1;
    double tx_power_w = 1.0;
    std::vector<double> noise_power_w = std::vector<double>(4, 1e-12);
    double x_min_m = 0.0;
    double x_max_m = 0.8;
    double min_spacing_m = 0.05;

    // Large-scale fading used by scenario generation.
    double path_loss_exponent = 2.8;
    std::optional<double> reference_gain_override;
    double distance_min_m = 20.0;
    double distance_max_m = 100.0;

    // Channel power gain at 1 m. Defaults to (lambda / (4 pi^2))^2.
    double reference_gain() const
    {
        if (reference_gain_override)
            return *reference_gain_override;
        const double r = wavelength_m / (4.0 * kPi * kPi);
        return r * r;
    }

    double noise(int k) const { return noise_power_w.at(static_cast<std::size_t>(k)); }

    RVector noise_vector() const
    {
        RVector n(num_users);
        for (int k = 0; k < num_users; ++k)
            n[k] = noise(k);
        return n;
    }

    void validate() const
    {
        if (num_tx_antennas < 1)
            throw std::invalid_argument("num_tx_antennas must be at least 1.");
        if (num_users < 1)
            throw std::invalid_argument("num_users must be at least 1.");
        if (num_paths < 1)
            throw std::invalid_argument("num_paths must be at least 1.");
        if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
            throw std::invalid_argument("wavelength must be positive.");
        if (!(tx_power_w > 0.0) || !std::isfinite(tx_power_w))
            throw std::invalid_argument("transmit power budget must be positive.");
        if (noise_power_w.size() != static_cast<std::size_t>(num_users))
            throw std::invalid_argument("noise_power_w must have one entry per user.");
        for (double n : noise_power_w)
            if (!(n > 0.0) || !std::isfinite(n))
                throw std::invalid_argument("noise powers must be positive.");
        if (!std::isfinite(x_min_m) || !std::isfinite(x_max_m) || x_max_m < x_min_m)
            throw std::invalid_argument("invalid antenna region bounds.");
        if (!(min_spacing_m >= 0.0))
            throw std::invalid_argument("min_spacing must be nonnegative.");
        if (x_max_m - x_min_m + kGeometryTol < (num_tx_antennas - 1) * min_spacing_m)
            throw std::invalid_argument("antenna region too small for the requested spacing.");
        if (!(distance_min_m > 0.0) || distance_max_m < distance_min_m)
            throw std::invalid_argument("invalid user distance range.");
        if (!(reference_gain() > 0.0))
            throw std::invalid_argument("reference gain must be positive.");
    }
};

// Per-user multipath description; the ground truth every channel is derived from.
struct ChannelScenario {
    RMatrix aod_rad;      // K x L_p, angles of departure in [-pi/2, pi/2]
    CMatrix path_gain;    // K x L_p
    RVector distance_m;   // K
    SystemParams params;
    std::uint64_t seed = 0;

    int num_users() const { return static_cast<int>(aod_rad.rows()); }
    int num_paths() const { return static_cast<int>(aod_rad.cols()); }

    void validate() const
    {
        params.validate();
        if (aod_rad.rows() != params.num_users || aod_rad.cols() != params.num_paths ||
            path_gain.rows() != params.num_users || path_gain.cols() != params.num_paths ||
            distance_m.size() != params.num_users)
            throw std::invalid_argument("scenario dimensions do not match its parameters.");
        for (Eigen::Index i = 0; i < aod_rad.size(); ++i) {
            const double a = aod_rad.data()[i];
            if (!std::isfinite(a) || std::abs(a) > kPi / 2 + 1e-12)
                throw std::invalid_argument("angle of departure outside [-pi/2, pi/2].");
            const cplx g = path_gain.data()[i];
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
                throw std::invalid_argument("non-finite path gain.");
        }
    }
};

// Ordered antenna positions in meters.
struct AntennaLayout {
    RVector positions;

    AntennaLayout() = default;
    explicit AntennaLayout(RVector x) : positions(std::move(x)) {}
    AntennaLayout(std::initializer_list<double> x) : positions(static_cast<Eigen::Index>(x.size()))
    {
        Eigen::Index i = 0;
        for (double v : x)
            positions[i++] = v;
    }

    int size() const { return static_cast<int>(positions.size()); }

    bool is_sorted() const
    {
        for (Eigen::Index i = 1; i < positions.size(); ++i)
            if (positions[i] < positions[i - 1])
                return false;
        return true;
    }

    // Box and adjacent-spacing constraints; assumes ascending order.
    bool is_feasible(const SystemParams &p, double tol = kGeometryTol) const
    {
        if (positions.size() != p.num_tx_antennas || !is_sorted())
            return false;
        for (Eigen::Index i = 0; i < positions.size(); ++i) {
            if (!std::isfinite(positions[i]) || positions[i] < p.x_min_m - tol || positions[i] > p.x_max_m + tol)
                return false;
            if (i > 0 && positions[i] - positions[i - 1] < p.min_spacing_m - tol)
                return false;
        }
        return true;
    }

    // Uniform array anchored at x_min.
    static AntennaLayout equispaced(int n, double x0, double spacing)
    {
        RVector x(n);
        for (int i = 0; i < n; ++i)
            x[i] = x0 + i * spacing;
        return AntennaLayout(std::move(x));
    }
};

// N_T x (K+1) precoder. Columns 0..K-1 are private streams, column K is the common stream.
struct Beamformer {
    CMatrix matrix;

    Beamformer() = default;
    explicit Beamformer(CMatrix m) : matrix(std::move(m)) {}
    Beamformer(int num_tx, int num_users) : matrix(CMatrix::Zero(num_tx, num_users + 1)) {}

    int num_users() const { return static_cast<int>(matrix.cols()) - 1; }
    int num_tx() const { return static_cast<int>(matrix.rows()); }
    auto private_stream(int k) const { return matrix.col(k); }
    auto private_stream(int k) { return matrix.col(k); }
    auto common_stream() const { return matrix.col(matrix.cols() - 1); }
    auto common_stream() { return matrix.col(matrix.cols() - 1); }
    double power() const { return matrix.squaredNorm(); }
};

// Common-rate split r_c in bits/s/Hz.
using RateAllocation = RVector;

// Fractional-programming auxiliary variables.
struct AuxState {
    RVector alpha; // private SINR surrogates
    CVector beta;
    RVector mu;    // common SINR surrogates
    CVector eta;
};

} // namespace marsma

#endif
