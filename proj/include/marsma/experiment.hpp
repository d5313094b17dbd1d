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

#ifndef MARSMA_EXPERIMENT_HPP
#define MARSMA_EXPERIMENT_HPP

#include "marsma/ao_driver.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace marsma {

// ---------- Configuration ----------

enum class SweepAxis { PowerDbm, ApertureWavelengths };

inline std::string to_string(SweepAxis a) { return a == SweepAxis::PowerDbm ? "power_dbm" : "aperture_wavelengths"; }

inline SweepAxis sweep_axis_from_string(const std::string &s)
{
    if (s == "power_dbm")
        return SweepAxis::PowerDbm;
    if (s == "aperture_wavelengths")
        return SweepAxis::ApertureWavelengths;
    throw std::invalid_argument("unknown sweep axis '" + s + "'.");
}

// System description as written in config files; every key carries its unit.
struct SystemConfig {
    int num_tx_antennas = 4;
    int num_users = 4;
    int num_paths = 8;
    double wavelength_m = 0.1;
    double power_dbm = 30.0;
    double noise_dbm = -90.0;
    double x_min_wavelengths = 0.0;
    double aperture_wavelengths = 8.0; // X_max - X_min
    double min_spacing_wavelengths = 0.5;
    double path_loss_exponent = 2.8;
    std::optional<double> reference_gain;
    double distance_min_m = 20.0;
    double distance_max_m = 100.0;

    SystemParams to_params() const
    {
        SystemParams p;
        p.num_tx_antennas = num_tx_antennas;
        p.num_users = num_users;
        p.num_paths = num_paths;
        p.wavelength_m = wavelength_m;
        p.tx_power_w = dbm_to_watts(power_dbm);
        p.noise_power_w.assign(static_cast<std::size_t>(std::max(num_users, 0)), dbm_to_watts(noise_dbm));
        p.x_min_m = x_min_wavelengths * wavelength_m;
        p.x_max_m = (x_min_wavelengths + aperture_wavelengths) * wavelength_m;
        p.min_spacing_m = min_spacing_wavelengths * wavelength_m;
        p.path_loss_exponent = path_loss_exponent;
        p.reference_gain_override = reference_gain;
        p.distance_min_m = distance_min_m;
        p.distance_max_m = distance_max_m;
        return p;
    }
};

inline void apply_system_json(SystemConfig &s, const nlohmann::json &j)
{
    static const std::vector<std::string> known = {
        "num_tx_antennas", "num_users",           "num_paths",          "wavelength_m",
        "power_dbm",       "noise_dbm",           "x_min_wavelengths",  "aperture_wavelengths",
        "min_spacing_wavelengths", "path_loss_exponent", "reference_gain", "distance_min_m",
        "distance_max_m"};
    for (const auto &[key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("unknown system key '" + key + "'.");
    s.num_tx_antennas = j.value("num_tx_antennas", s.num_tx_antennas);
    s.num_users = j.value("num_users", s.num_users);
    s.num_paths = j.value("num_paths", s.num_paths);
    s.wavelength_m = j.value("wavelength_m", s.wavelength_m);
    s.power_dbm = j.value("power_dbm", s.power_dbm);
    s.noise_dbm = j.value("noise_dbm", s.noise_dbm);
    s.x_min_wavelengths = j.value("x_min_wavelengths", s.x_min_wavelengths);
    s.aperture_wavelengths = j.value("aperture_wavelengths", s.aperture_wavelengths);
    s.min_spacing_wavelengths = j.value("min_spacing_wavelengths", s.min_spacing_wavelengths);
    s.path_loss_exponent = j.value("path_loss_exponent", s.path_loss_exponent);
    if (j.contains("reference_gain") && !j.at("reference_gain").is_null())
        s.reference_gain = j.at("reference_gain").get<double>();
    s.distance_min_m = j.value("distance_min_m", s.distance_min_m);
    s.distance_max_m = j.value("distance_max_m", s.distance_max_m);
}

inline nlohmann::json to_json(const SystemConfig &s)
{
    nlohmann::json j = {{"num_tx_antennas", s.num_tx_antennas},
                        {"num_users", s.num_users},
                        {"num_paths", s.num_paths},
                        {"wavelength_m", s.wavelength_m},
                        {"power_dbm", s.power_dbm},
                        {"noise_dbm", s.noise_dbm},
                        {"x_min_wavelengths", s.x_min_wavelengths},
                        {"aperture_wavelengths", s.aperture_wavelengths},
                        {"min_spacing_wavelengths", s.min_spacing_wavelengths},
                        {"path_loss_exponent", s.path_loss_exponent},
                        {"distance_min_m", s.distance_min_m},
                        {"distance_max_m", s.distance_max_m}};
    j["reference_gain"] = s.reference_gain ? nlohmann::json(*s.reference_gain) : nlohmann::json(nullptr);
    return j;
}

struct ExperimentConfig {
    std::string name = "experiment";
    SweepAxis axis = SweepAxis::PowerDbm;
    std::vector<double> values;
    SystemConfig system;
    std::vector<nlohmann::json> overrides; // empty, or one object per axis value
    std::vector<Scheme> schemes = {Scheme::FPA, Scheme::GA_MA, Scheme::CFGS_MA};
    int num_trials = 50;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    OptimizerConfig optimizer;

    // Parameters at sweep point i.
    SystemParams point_params(std::size_t i) const
    {
        SystemConfig s = system;
        if (!overrides.empty())
            apply_system_json(s, overrides.at(i));
        if (axis == SweepAxis::PowerDbm)
            s.power_dbm = values.at(i);
        else
            s.aperture_wavelengths = values.at(i);
        return s.to_params();
    }

    void validate() const
    {
        if (values.empty())
            throw std::invalid_argument("sweep needs at least one value.");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1]))
                throw std::invalid_argument("sweep values must be strictly increasing.");
        if (!overrides.empty() && overrides.size() != values.size())
            throw std::invalid_argument("overrides must have one entry per sweep value.");
        if (num_trials < 1)
            throw std::invalid_argument("num_trials must be at least 1.");
        if (schemes.empty())
            throw std::invalid_argument("at least one scheme is required.");
        optimizer.validate();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const SystemParams p = point_params(i);
            p.validate();
            for (Scheme s : schemes) {
                if (s == Scheme::FPA)
                    fixed_layout(p);
                if (s == Scheme::CFGS_MA)
                    enumerate_coarse_grid(p, optimizer.coarse_spacing_wavelengths * p.wavelength_m, 5'000'000);
            }
        }
    }
};

inline nlohmann::json to_json(const ExperimentConfig &c)
{
    nlohmann::json schemes = nlohmann::json::array();
    for (Scheme s : c.schemes)
        schemes.push_back(to_string(s));
    nlohmann::json j = {
        {"name", c.name},
        {"sweep", {{"axis", to_string(c.axis)}, {"values", c.values}}},
        {"system", to_json(c.system)},
        {"schemes", schemes},
        {"num_trials", c.num_trials},
        {"base_seed", c.base_seed},
        {"output_dir", c.output_dir},
        {"optimizer",
         {{"inner_tol", c.optimizer.inner_tol},
          {"inner_max_iters", c.optimizer.inner_max_iters},
          {"outer_tol", c.optimizer.outer_tol},
          {"outer_max_iters", c.optimizer.outer_max_iters},
          {"coarse_spacing_wavelengths", c.optimizer.coarse_spacing_wavelengths},
          {"stall_limit", c.optimizer.stall_limit},
          {"initial_step_wavelengths", c.optimizer.ascent.initial_step_wavelengths},
          {"min_step_wavelengths", c.optimizer.ascent.min_step_wavelengths}}},
    };
    if (!c.overrides.empty())
        j["overrides"] = c.overrides;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json &j)
{
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    const auto &sweep = j.at("sweep");
    c.axis = sweep_axis_from_string(sweep.at("axis").get<std::string>());
    c.values = sweep.at("values").get<std::vector<double>>();
    if (j.contains("system"))
        apply_system_json(c.system, j.at("system"));
    if (j.contains("overrides"))
        c.overrides = j.at("overrides").get<std::vector<nlohmann::json>>();
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto &s : j.at("schemes"))
            c.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    c.num_trials = j.value("num_trials", c.num_trials);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("optimizer")) {
        const auto &o = j.at("optimizer");
        OptimizerConfig &oc = c.optimizer;
        oc.inner_tol = o.value("inner_tol", oc.inner_tol);
        oc.inner_max_iters = o.value("inner_max_iters", oc.inner_max_iters);
        oc.outer_tol = o.value("outer_tol", oc.outer_tol);
        oc.outer_max_iters = o.value("outer_max_iters", oc.outer_max_iters);
        oc.coarse_spacing_wavelengths = o.value("coarse_spacing_wavelengths", oc.coarse_spacing_wavelengths);
        oc.stall_limit = o.value("stall_limit", oc.stall_limit);
        oc.ascent.initial_step_wavelengths = o.value("initial_step_wavelengths", oc.ascent.initial_step_wavelengths);
        oc.ascent.min_step_wavelengths = o.value("min_step_wavelengths", oc.ascent.min_step_wavelengths);
    }
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path.string() + "'.");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(j);
}

// ---------- Seeds ----------

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Scenario seed of one trial. Independent of scheme and sweep point: every
// scheme and every point of a sweep see the same channel draw for a trial.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int trial)
{
    return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(trial) + 1));
}

// ---------- Rows and summaries ----------

struct SweepRow {
    Scheme scheme = Scheme::FPA;
    double axis_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double sum_rate = 0.0;
    int outer_iters = 0;
    double wall_ms = 0.0;
};

struct FailureRow {
    Scheme scheme = Scheme::FPA;
    double axis_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string error;
};

inline const char *rows_csv_header() { return "scheme,axis,trial,seed,sum_rate_bps_hz,outer_iters,wall_ms"; }

namespace detail {

inline std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string &line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline void write_rows_csv(std::ostream &os, const std::vector<SweepRow> &rows)
{
    os << rows_csv_header() << '\n';
    for (const auto &r : rows)
        os << to_string(r.scheme) << ',' << detail::format_double(r.axis_value) << ',' << r.trial << ',' << r.seed
           << ',' << detail::format_double(r.sum_rate) << ',' << r.outer_iters << ','
           << detail::format_double(r.wall_ms) << '\n';
}

inline std::vector<SweepRow> read_rows_csv(std::istream &in)
{
    std::string line;
    if (!std::getline(in, line) || detail::split_csv(line) != detail::split_csv(rows_csv_header()))
        throw std::invalid_argument("rows CSV: unexpected header.");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r")
            continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 7)
            throw std::invalid_argument("rows CSV: expected 7 fields, got " + std::to_string(f.size()) + ".");
        SweepRow r;
        r.scheme = scheme_from_string(f[0]);
        r.axis_value = std::stod(f[1]);
        r.trial = std::stoi(f[2]);
        r.seed = std::stoull(f[3]);
        r.sum_rate = std::stod(f[4]);
        r.outer_iters = std::stoi(f[5]);
        r.wall_ms = std::stod(f[6]);
        rows.push_back(r);
    }
    return rows;
}

inline void write_failures_csv(std::ostream &os, const std::vector<FailureRow> &rows)
{
    os << "scheme,axis,trial,seed,error\n";
    for (const auto &r : rows) {
        std::string msg = r.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << to_string(r.scheme) << ',' << detail::format_double(r.axis_value) << ',' << r.trial << ',' << r.seed
           << ',' << msg << '\n';
    }
}

inline std::vector<FailureRow> read_failures_csv(std::istream &in)
{
    std::string line;
    std::getline(in, line);
    std::vector<FailureRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = detail::split_csv(line);
        if (f.size() < 5)
            throw std::invalid_argument("failures CSV: malformed line.");
        rows.push_back({scheme_from_string(f[0]), std::stod(f[1]), std::stoi(f[2]), std::stoull(f[3]), f[4]});
    }
    return rows;
}

struct SummaryRow {
    Scheme scheme = Scheme::FPA;
    double axis_value = 0.0;
    int count = 0;
    int failures = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    std::optional<double> gain_pct; // vs FPA at the same point
};

// Per (scheme, point): mean, sample standard error and percent gain over the
// FPA mean at that point. Rows are grouped in ascending axis order, schemes in
// first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<SweepRow> &rows, const std::vector<FailureRow> &failures = {})
{
    if (rows.empty())
        throw std::invalid_argument("summarize: no rows.");
    std::vector<Scheme> scheme_order;
    for (const auto &r : rows)
        if (std::find(scheme_order.begin(), scheme_order.end(), r.scheme) == scheme_order.end())
            scheme_order.push_back(r.scheme);
    std::map<double, std::map<int, std::vector<double>>> groups; // axis -> scheme -> values
    std::map<double, std::map<int, int>> failed;
    for (const auto &r : rows)
        groups[r.axis_value][static_cast<int>(r.scheme)].push_back(r.sum_rate);
    for (const auto &f : failures)
        ++failed[f.axis_value][static_cast<int>(f.scheme)];

    std::vector<SummaryRow> out;
    for (const auto &[axis, by_scheme] : groups) {
        std::optional<double> fpa_mean;
        std::vector<SummaryRow> point;
        for (Scheme s : scheme_order) {
            auto it = by_scheme.find(static_cast<int>(s));
            if (it == by_scheme.end())
                continue;
            const auto &v = it->second;
            SummaryRow row;
            row.scheme = s;
            row.axis_value = axis;
            row.count = static_cast<int>(v.size());
            row.failures = failed[axis][static_cast<int>(s)];
            double sum = 0.0;
            for (double x : v)
                sum += x;
            row.mean = sum / static_cast<double>(v.size());
            if (v.size() > 1) {
                double ss = 0.0;
                for (double x : v)
                    ss += (x - row.mean) * (x - row.mean);
                row.stderr_mean = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
            }
            if (s == Scheme::FPA)
                fpa_mean = row.mean;
            point.push_back(row);
        }
        for (auto &row : point) {
            if (fpa_mean && *fpa_mean != 0.0)
                row.gain_pct = 100.0 * (row.mean - *fpa_mean) / *fpa_mean;
            out.push_back(row);
        }
    }
    return out;
}

inline void write_summary_csv(std::ostream &os, const std::vector<SummaryRow> &rows)
{
    os << "scheme,axis,n,failures,mean_bps_hz,stderr_bps_hz,gain_pct_vs_fpa\n";
    for (const auto &r : rows)
        os << to_string(r.scheme) << ',' << detail::format_double(r.axis_value) << ',' << r.count << ',' << r.failures
           << ',' << detail::format_double(r.mean) << ',' << detail::format_double(r.stderr_mean) << ','
           << (r.gain_pct ? detail::format_double(*r.gain_pct) : std::string("undefined")) << '\n';
}

// ---------- Runner ----------

inline void configure_logging_from_env()
{
    const char *level = std::getenv("MA_RSMA_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

struct ExperimentResults {
    std::vector<SweepRow> rows;
    std::vector<FailureRow> failures;
    std::vector<SummaryRow> summary;
};

// Called once per successful run, serialized across workers.
using RunObserver = std::function<void(const SweepRow &, const SolveResult &)>;

// Runs every (point, trial) with all schemes on a shared scenario. Work is
// spread over `workers` threads; rows come back in (point, trial, scheme)
// order regardless of completion order.
inline ExperimentResults run_sweep(const ExperimentConfig &cfg, int workers = 1, const RunObserver &observer = {})
{
    cfg.validate();
    const std::size_t points = cfg.values.size();
    const std::size_t trials = static_cast<std::size_t>(cfg.num_trials);
    const std::size_t tasks = points * trials;

    struct TaskOutput {
        std::vector<SweepRow> rows;
        std::vector<FailureRow> failures;
    };
    std::vector<TaskOutput> outputs(tasks);
    std::atomic<std::size_t> next{0};
    std::mutex observer_mutex;

    auto worker = [&] {
        for (std::size_t task = next++; task < tasks; task = next++) {
            const std::size_t pi = task / trials;
            const int trial = static_cast<int>(task % trials);
            const std::uint64_t seed = trial_seed(cfg.base_seed, trial);
            const double axis = cfg.values[pi];
            const ChannelScenario scenario = generate_scenario(cfg.point_params(pi), seed);
            for (Scheme s : cfg.schemes) {
                OptimizerConfig oc = cfg.optimizer;
                oc.scheme = s;
                try {
                    const SolveResult r = run(scenario, oc);
                    outputs[task].rows.push_back({s, axis, trial, seed, r.sum_rate, r.outer_iters, r.wall_ms});
                    if (observer) {
                        std::lock_guard<std::mutex> lock(observer_mutex);
                        observer(outputs[task].rows.back(), r);
                    }
                    spdlog::debug("{} {}={} trial {}: {:.6f} bits/s/Hz", to_string(s), to_string(cfg.axis), axis,
                                  trial, r.sum_rate);
                } catch (const std::exception &e) {
                    outputs[task].failures.push_back({s, axis, trial, seed, e.what()});
                    spdlog::warn("{} {}={} trial {} failed: {}", to_string(s), to_string(cfg.axis), axis, trial,
                                 e.what());
                }
            }
        }
    };

    const int n = std::max(1, workers);
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();

    ExperimentResults res;
    for (auto &o : outputs) {
        res.rows.insert(res.rows.end(), o.rows.begin(), o.rows.end());
        res.failures.insert(res.failures.end(), o.failures.begin(), o.failures.end());
    }
    if (!res.rows.empty())
        res.summary = summarize(res.rows, res.failures);
    return res;
}

// Writes rows.csv, summary.csv, failures.csv and config.echo.json into `out_dir`.
inline ExperimentResults run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                                        int workers = 1, const RunObserver &observer = {})
{
    ExperimentResults res = run_sweep(cfg, workers, observer);
    std::filesystem::create_directories(out_dir);
    auto open = [&](const char *name) {
        std::ofstream f(out_dir / name);
        if (!f)
            throw std::runtime_error("cannot write '" + (out_dir / name).string() + "'.");
        return f;
    };
    {
        auto f = open("rows.csv");
        write_rows_csv(f, res.rows);
    }
    {
        auto f = open("failures.csv");
        write_failures_csv(f, res.failures);
    }
    {
        auto f = open("summary.csv");
        if (!res.summary.empty())
            write_summary_csv(f, res.summary);
    }
    {
        auto f = open("config.echo.json");
        f << to_json(cfg).dump(2) << '\n';
    }
    spdlog::info("{}: {} rows, {} failures written to {}", cfg.name, res.rows.size(), res.failures.size(),
                 out_dir.string());
    return res;
}

} // namespace marsma

#endif
