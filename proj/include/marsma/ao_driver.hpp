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

#ifndef MARSMA_AO_DRIVER_HPP
#define MARSMA_AO_DRIVER_HPP

#include "marsma/beamforming.hpp"
#include "marsma/position_optimizer.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <sstream>

namespace marsma {

enum class Scheme { CFGS_MA, GA_MA, FPA };

inline std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::CFGS_MA: return "CFGS_MA";
    case Scheme::GA_MA: return "GA_MA";
    case Scheme::FPA: return "FPA";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string &s)
{
    if (s == "CFGS_MA")
        return Scheme::CFGS_MA;
    if (s == "GA_MA")
        return Scheme::GA_MA;
    if (s == "FPA")
        return Scheme::FPA;
    throw std::invalid_argument("unknown scheme '" + s + "'.");
}

struct OptimizerConfig {
    Scheme scheme = Scheme::CFGS_MA;
    double inner_tol = 1e-4;  // relative change of the objective
    int inner_max_iters = 50;
    double outer_tol = 1e-4;
    int outer_max_iters = 30;
    double coarse_spacing_wavelengths = 1.0;
    int stall_limit = 2;      // consecutive stalled ascents that end the outer loop
    AscentConfig ascent;
    SolverConfig solver;

    void validate() const
    {
        if (!(inner_tol > 0.0) || !(outer_tol > 0.0))
            throw std::invalid_argument("optimizer tolerances must be positive.");
        if (inner_max_iters < 1 || outer_max_iters < 1 || stall_limit < 1)
            throw std::invalid_argument("optimizer iteration caps must be at least 1.");
        if (!(coarse_spacing_wavelengths > 0.0))
            throw std::invalid_argument("coarse spacing must be positive.");
        solver.validate();
    }
};

struct TraceEntry {
    double objective = 0.0;
    int inner_iters = 0;
    int rejections = 0;
    bool stalled = false;
    double wall_ms = 0.0;
};

struct SolveResult {
    Scheme scheme = Scheme::CFGS_MA;
    double sum_rate = 0.0;
    double coarse_score = std::numeric_limits<double>::quiet_NaN();
    AntennaLayout layout;
    Beamformer beamformer;
    RateAllocation rates;
    AuxState aux;
    RateReport report;
    std::vector<TraceEntry> trace; // entry 0 is the starting point
    int outer_iters = 0;
    int subproblem_solves = 0;
    double wall_ms = 0.0;
};

// Carries whatever was computed before the failure.
class RunError : public std::runtime_error {
public:
    RunError(const std::string &what, SolveResult partial) : std::runtime_error(what), partial_(std::move(partial)) {}
    const SolveResult &partial() const { return partial_; }

private:
    SolveResult partial_;
};

// Repeats {solve subproblem; refresh auxiliaries} until the relative change
// of the objective drops below inner_tol. Returns the number of passes.
inline int inner_converge(IterateState &s, const ChannelScenario &scenario, const OptimizerConfig &cfg,
                          int *solves = nullptr)
{
    int it = 0;
    while (it < cfg.inner_max_iters) {
        const double before = s.objective;
        fp_pass(s, scenario, cfg.solver);
        ++it;
        if (solves)
            ++*solves;
        if (std::abs(s.objective - before) <= cfg.inner_tol * std::max(std::abs(before), 1e-12))
            break;
    }
    return it;
}

// Fixed half-wavelength array anchored at x_min.
inline AntennaLayout fixed_layout(const SystemParams &p)
{
    const double spacing = p.wavelength_m / 2.0;
    if ((p.num_tx_antennas - 1) * spacing > p.x_max_m - p.x_min_m + kGeometryTol)
        throw std::invalid_argument("fixed_layout: half-wavelength array does not fit the region.");
    if (spacing + kGeometryTol < p.min_spacing_m)
        throw std::invalid_argument("fixed_layout: half-wavelength spacing violates the minimum spacing.");
    return AntennaLayout::equispaced(p.num_tx_antennas, p.x_min_m, spacing);
}

// One-wavelength array anchored at x_min, squeezed to fit tight regions.
inline AntennaLayout gradient_start_layout(const SystemParams &p)
{
    double spacing = p.wavelength_m;
    if (p.num_tx_antennas > 1)
        spacing = std::min(spacing, (p.x_max_m - p.x_min_m) / (p.num_tx_antennas - 1));
    return AntennaLayout::equispaced(p.num_tx_antennas, p.x_min_m, spacing);
}

// `observer`, when set, sees the starting point and the state after every
// outer iteration.
inline SolveResult run(const ChannelScenario &scenario, const OptimizerConfig &cfg,
                       const std::function<void(const IterateState &)> &observer = {})
{
    using clock = std::chrono::steady_clock;
    cfg.validate();
    scenario.validate();
    const auto t_start = clock::now();
    auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(clock::now() - t_start).count(); };
    const RVector noise = scenario.params.noise_vector();

    SolveResult out;
    out.scheme = cfg.scheme;
    IterateState s;
    auto snapshot = [&] {
        out.layout = s.layout;
        out.beamformer = s.beamformer;
        out.rates = s.rates;
        out.aux = s.aux;
        out.sum_rate = s.objective;
        out.wall_ms = elapsed_ms();
    };

    try {
        switch (cfg.scheme) {
        case Scheme::CFGS_MA: {
            const auto grid = enumerate_coarse_grid(scenario.params,
                                                    cfg.coarse_spacing_wavelengths * scenario.params.wavelength_m);
            CoarseSelection sel = coarse_select(grid, scenario, cfg.solver);
            out.subproblem_solves += static_cast<int>(grid.size() - sel.failures);
            s = std::move(sel.state);
            out.coarse_score = s.objective;
            break;
        }
        case Scheme::GA_MA:
            s = cold_start(scenario, gradient_start_layout(scenario.params));
            break;
        case Scheme::FPA:
            s = cold_start(scenario, fixed_layout(scenario.params));
            break;
        }
        out.trace.push_back({s.objective, 0, 0, false, elapsed_ms()});
        snapshot();
        if (observer)
            observer(s);

        int stalls = 0;
        for (int outer = 0; outer < cfg.outer_max_iters; ++outer) {
            const double before = s.objective;
            TraceEntry e;
            e.inner_iters = inner_converge(s, scenario, cfg, &out.subproblem_solves);

            if (cfg.scheme != Scheme::FPA) {
                AscentState st;
                st.layout = s.layout;
                AscentResult step = ascend_positions(st, scenario, s.beamformer, s.rates, s.aux, s.objective,
                                                     cfg.ascent);
                e.rejections = step.rejections;
                e.stalled = step.stalled;
                if (!step.stalled) {
                    s.layout = std::move(step.state.layout);
                    s.beamformer = std::move(step.beamformer);
                    s.channels = channel_matrix(s.layout, scenario);
                    s.aux = refresh_aux(s.channels, noise, s.beamformer);
                    s.objective = tight_objective(s, noise);
                }
                stalls = step.stalled ? stalls + 1 : 0;
            }
            e.objective = s.objective;
            e.wall_ms = elapsed_ms();
            out.trace.push_back(e);
            out.outer_iters = outer + 1;
            snapshot();
            if (observer)
                observer(s);

            if (cfg.scheme == Scheme::FPA)
                break;
            if (stalls >= cfg.stall_limit)
                break;
            if (std::abs(s.objective - before) <= cfg.outer_tol * std::max(std::abs(before), 1e-12))
                break;
        }
    } catch (const std::exception &ex) {
        out.wall_ms = elapsed_ms();
        throw RunError(std::string("run(") + to_string(cfg.scheme) + "): " + ex.what(), std::move(out));
    }

    out.report = achieved_sum_rate(s.channels, noise, s.beamformer, s.rates);
    out.sum_rate = out.report.sum_rate;
    out.wall_ms = elapsed_ms();
    return out;
}

// ---------- Serialization ----------

namespace detail {

inline nlohmann::json to_json_vec(const RVector &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json_cvec(const CVector &v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back({v[i].real(), v[i].imag()});
    return a;
}

} // namespace detail

inline nlohmann::json to_json(const SolveResult &r)
{
    nlohmann::json F = nlohmann::json::array();
    for (Eigen::Index j = 0; j < r.beamformer.matrix.cols(); ++j)
        F.push_back(detail::to_json_cvec(r.beamformer.matrix.col(j)));
    nlohmann::json trace = nlohmann::json::array();
    for (const auto &e : r.trace)
        trace.push_back({{"objective", e.objective},
                         {"inner_iters", e.inner_iters},
                         {"rejections", e.rejections},
                         {"stalled", e.stalled},
                         {"wall_ms", e.wall_ms}});
    nlohmann::json j = {
        {"scheme", to_string(r.scheme)},
        {"sum_rate_bps_hz", r.sum_rate},
        {"positions_m", detail::to_json_vec(r.layout.positions)},
        {"beamformer_columns", F},
        {"common_rates", detail::to_json_vec(r.rates)},
        {"aux",
         {{"alpha", detail::to_json_vec(r.aux.alpha)},
          {"beta", detail::to_json_cvec(r.aux.beta)},
          {"mu", detail::to_json_vec(r.aux.mu)},
          {"eta", detail::to_json_cvec(r.aux.eta)}}},
        {"outer_iters", r.outer_iters},
        {"subproblem_solves", r.subproblem_solves},
        {"wall_ms", r.wall_ms},
        {"trace", trace},
    };
    if (std::isfinite(r.coarse_score))
        j["coarse_score"] = r.coarse_score;
    return j;
}

inline std::string csv_summary_header() { return "scheme,sum_rate_bps_hz,outer_iters,subproblem_solves,wall_ms"; }

inline std::string csv_summary(const SolveResult &r)
{
    std::ostringstream os;
    os.precision(17);
    os << to_string(r.scheme) << ',' << r.sum_rate << ',' << r.outer_iters << ',' << r.subproblem_solves << ','
       << r.wall_ms;
    return os.str();
}

} // namespace marsma

#endif
