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

// One PASS/FAIL line per acceptance criterion; exit status is nonzero when any fails.

#include "marsma/experiment.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace marsma;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
    int id;
    bool pass;
    std::string line;
};

std::vector<Outcome> g_outcomes;

// Progress goes to stderr as criteria finish; the final table is printed in order.
void report(int id, const std::string &name, bool pass, const std::string &detail)
{
    char head[128];
    std::snprintf(head, sizeof head, "[%s] %d %s: ", pass ? "PASS" : "FAIL", id, name.c_str());
    const std::string line = head + detail;
    std::fprintf(stderr, "%s\n", line.c_str());
    g_outcomes.push_back({id, pass, line});
}

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SystemParams default_params(int n, int k, int l, double aperture_wavelengths = 8.0, double power_dbm = 30.0)
{
    SystemParams p;
    p.num_tx_antennas = n;
    p.num_users = k;
    p.num_paths = l;
    p.tx_power_w = dbm_to_watts(power_dbm);
    p.noise_power_w.assign(static_cast<std::size_t>(k), dbm_to_watts(-90.0));
    p.x_max_m = aperture_wavelengths * p.wavelength_m;
    return p;
}

// Traces of every CFGS run performed here, for the monotonicity criterion.
struct TraceLog {
    int runs = 0;
    double worst_drop = 0.0; // most negative step, reported as a positive number
    void add(const SolveResult &r)
    {
        if (r.scheme != Scheme::CFGS_MA)
            return;
        ++runs;
        for (std::size_t i = 1; i < r.trace.size(); ++i)
            worst_drop = std::max(worst_drop, r.trace[i - 1].objective - r.trace[i].objective);
    }
} g_traces;

// ---------- 1 ----------
void criterion_fp_tightness()
{
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(20240601);
    double worst_g = 0.0, worst_t = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const int n = 1 + static_cast<int>(rng() % 6), k = 1 + static_cast<int>(rng() % 4),
                  l = 1 + static_cast<int>(rng() % 8);
        const SystemParams p = default_params(n, k, l, 8.0, 20.0 + static_cast<double>(rng() % 21));
        const ChannelScenario s = generate_scenario(p, rng());
        const AntennaLayout x = fixture::random_layout(rng, p);
        const CMatrix H = channel_matrix(x, s);
        const RVector noise = p.noise_vector();
        const Beamformer F = fixture::random_beamformer(rng, n, k, p.tx_power_w, 0.5 + 0.5 * (rng() % 1000) / 1000.0);
        const double cap = achieved_sum_rate(H, noise, F, RVector::Zero(k)).common_cap;
        RVector r(k);
        for (int j = 0; j < k; ++j)
            r[j] = static_cast<double>(rng() % 1000) / 1000.0;
        r *= cap * (static_cast<double>(rng() % 1000) / 1000.0) / std::max(r.sum(), 1e-300);

        const AuxState aux = refresh_aux(H, noise, F);
        const double g = reformulated_objective(H, noise, F, r, aux.alpha, aux.beta).value;
        worst_g = std::max(worst_g, std::abs(g - achieved_sum_rate(H, noise, F, r).sum_rate));
        for (int j = 0; j < k; ++j) {
            const double t = common_surrogate(H.col(j), noise[j], F, aux.mu[j], aux.eta[j]);
            worst_t = std::max(worst_t, std::abs(t - std::log1p(sinr_common(H.col(j), F, noise[j]))));
        }
    }
    const double secs = seconds_since(t0);
    report(1, "FP tightness", worst_g <= 1e-8 && worst_t <= 1e-10 && secs < 10.0,
           fmt("200 instances, max |Ghat - sum rate| = %.3e (<= 1e-8), max |t_k - ln(1+SINR_c)| = %.3e (<= 1e-10), "
               "%.2f s (< 10 s)",
               worst_g, worst_t, secs));
}

// ---------- 2 ----------
void criterion_gradient()
{
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(20240602);
    int checked = 0, skipped = 0;
    double worst = 0.0;
    while (checked < 120) {
        const int n = 1 + static_cast<int>(rng() % 4), k = 1 + static_cast<int>(rng() % 3),
                  l = 1 + static_cast<int>(rng() % 4);
        const SystemParams p = default_params(n, k, l, 6.0);
        const ChannelScenario s = generate_scenario(p, rng());
        IterateState st;
        try {
            st = cold_start(s, fixture::random_layout(rng, p));
            fp_pass(st, s, SolverConfig{});
        } catch (const std::exception &) {
            ++skipped;
            continue;
        }
        const RVector g = objective_gradient(st.layout, s, st.beamformer, st.aux.alpha, st.aux.beta);
        if (!(g.norm() > 1e-8)) {
            ++skipped;
            continue;
        }
        const double h = 1e-6 * p.wavelength_m;
        RVector fd(n);
        for (int i = 0; i < n; ++i) {
            auto f = [&](double xi) {
                AntennaLayout y = st.layout;
                y.positions[i] = xi;
                return reformulated_objective(st.beamformer, st.rates, y, st.aux, s).value;
            };
            fd[i] = oracle::central_difference(f, st.layout.positions[i], h);
        }
        worst = std::max(worst, (g - fd).norm() / g.norm());
        ++checked;
    }
    const double secs = seconds_since(t0);
    report(2, "gradient vs central differences", worst <= 1e-4 && secs < 30.0,
           fmt("%d instances (%d degenerate skipped), max relative error = %.3e (<= 1e-4), %.2f s (< 30 s)", checked,
               skipped, worst, secs));
}

// ---------- 3 ----------
void criterion_subproblem()
{
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(20240603);
    double worst_rel = 0.0, worst_violation = 0.0, worst_above = 0.0;
    int done = 0;
    while (done < 50) {
        const SystemParams p = default_params(2, 2, 1 + static_cast<int>(rng() % 8), 4.0);
        const ChannelScenario s = generate_scenario(p, rng());
        IterateState st;
        try {
            st = cold_start(s, fixture::random_layout(rng, p));
            if (done % 2 == 1)
                fp_pass(st, s, SolverConfig{}); // warm start with nonzero common rates
        } catch (const std::exception &) {
            continue;
        }
        const SubproblemSpec spec{st.channels, st.aux, p.noise_vector(), p.tx_power_w, st.beamformer, st.rates};
        const SubproblemResult res = solve(spec);
        const oracle::DualResult dual = oracle::solve_dual(
            {spec.channels, spec.noise, spec.aux.alpha, spec.aux.mu, spec.aux.beta, spec.aux.eta, spec.power_budget});
        const double scale = std::max(std::abs(dual.value), 1e-12);
        worst_rel = std::max(worst_rel, std::abs(res.objective - dual.value) / scale);
        worst_above = std::max(worst_above, (res.objective - dual.value) / scale);
        worst_violation = std::max(worst_violation, subproblem_violation(spec, res.beamformer, res.rates));
        ++done;
    }
    const double secs = seconds_since(t0);
    report(3, "subproblem solver vs dual projected-gradient oracle",
           worst_rel <= 1e-4 && worst_violation <= 1e-7 && secs < 120.0,
           fmt("50 instances (N_T = 2, K = 2), max relative gap = %.3e (<= 1e-4), max excess over dual bound = %.3e, "
               "max violation = %.3e (<= 1e-7), %.2f s (< 120 s)",
               worst_rel, worst_above, worst_violation, secs));
}

ExperimentConfig sweep_config(const std::string &name, SweepAxis axis, std::vector<double> values,
                              std::vector<Scheme> schemes, int trials)
{
    ExperimentConfig c;
    c.name = name;
    c.axis = axis;
    c.values = std::move(values);
    c.schemes = std::move(schemes);
    c.num_trials = trials;
    c.base_seed = 2024;
    c.system.aperture_wavelengths = 8.0;
    c.system.power_dbm = 30.0;
    return c;
}

double mean_of(const std::vector<SummaryRow> &s, Scheme scheme, double axis, int *n = nullptr, int *fails = nullptr)
{
    for (const auto &r : s)
        if (r.scheme == scheme && r.axis_value == axis) {
            if (n)
                *n = r.count;
            if (fails)
                *fails = r.failures;
            return r.mean;
        }
    return std::numeric_limits<double>::quiet_NaN();
}

ExperimentResults run_logged(const ExperimentConfig &c, const std::filesystem::path &dir, int workers)
{
    return run_experiment(c, dir / c.name, workers, [](const SweepRow &, const SolveResult &r) { g_traces.add(r); });
}

// ---------- 5 ----------
void criterion_ordering(const std::filesystem::path &dir, int workers)
{
    const auto t0 = clock_type::now();
    const auto c = sweep_config("ordering", SweepAxis::PowerDbm, {30.0}, {Scheme::FPA, Scheme::GA_MA, Scheme::CFGS_MA}, 50);
    const auto res = run_logged(c, dir, workers);
    int n_f = 0, n_g = 0, n_c = 0, fails = 0;
    const double fpa = mean_of(res.summary, Scheme::FPA, 30.0, &n_f);
    const double ga = mean_of(res.summary, Scheme::GA_MA, 30.0, &n_g);
    const double cfgs = mean_of(res.summary, Scheme::CFGS_MA, 30.0, &n_c);
    fails = static_cast<int>(res.failures.size());
    const double gain = 100.0 * (cfgs - fpa) / fpa;
    const double secs = seconds_since(t0);
    report(5, "scheme ordering at 30 dBm, 8 lambda",
           cfgs >= ga && ga >= fpa && gain >= 5.0 && secs < 1800.0,
           fmt("means CFGS_MA %.4f >= GA_MA %.4f >= FPA %.4f bits/s/Hz, CFGS gain %.2f%% (>= 5%%), "
               "runs %d/%d/%d, failures %d, %.1f s (< 1800 s)",
               cfgs, ga, fpa, gain, n_c, n_g, n_f, fails, secs));
}

// ---------- 6 ----------
void criterion_aperture(const std::filesystem::path &dir, int workers)
{
    const auto t0 = clock_type::now();
    const auto c = sweep_config("aperture", SweepAxis::ApertureWavelengths, {6.0, 10.0}, {Scheme::CFGS_MA}, 50);
    const auto res = run_logged(c, dir, workers);
    int n6 = 0, n10 = 0;
    const double m6 = mean_of(res.summary, Scheme::CFGS_MA, 6.0, &n6);
    const double m10 = mean_of(res.summary, Scheme::CFGS_MA, 10.0, &n10);
    const double secs = seconds_since(t0);
    report(6, "CFGS_MA aperture monotonicity", m10 >= m6 && secs < 1800.0,
           fmt("mean at 10 lambda %.4f >= mean at 6 lambda %.4f bits/s/Hz (runs %d/%d, failures %zu), %.1f s (< 1800 s)",
               m10, m6, n10, n6, res.failures.size(), secs));
}

// ---------- 7 ----------
void criterion_power(const std::filesystem::path &dir, int workers)
{
    const auto t0 = clock_type::now();
    const auto c = sweep_config("power", SweepAxis::PowerDbm, {20.0, 30.0, 40.0},
                                {Scheme::FPA, Scheme::GA_MA, Scheme::CFGS_MA}, 30);
    const auto res = run_logged(c, dir, workers);
    bool ok = true;
    std::ostringstream detail;
    for (Scheme s : c.schemes) {
        detail << to_string(s) << ' ';
        double prev = -INFINITY;
        for (double v : c.values) {
            const double m = mean_of(res.summary, s, v);
            ok = ok && m >= prev;
            prev = m;
            detail << fmt("%.4f", m) << (v == c.values.back() ? "; " : " <= ");
        }
    }
    detail << "failures " << res.failures.size() << ", " << fmt("%.1f s", seconds_since(t0));
    report(7, "power monotonicity over 20/30/40 dBm", ok, detail.str());
}

// ---------- 4 ----------
void criterion_monotone_ao()
{
    report(4, "monotone AO trace", g_traces.runs > 0 && g_traces.worst_drop <= 1e-9,
           fmt("%d CFGS_MA runs, largest decrease between outer iterations = %.3e (<= 1e-9)", g_traces.runs,
               g_traces.worst_drop));
}

// ---------- 8 ----------
std::string rows_without_wall_time(const std::filesystem::path &p)
{
    std::ifstream in(p);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        out << line.substr(0, line.rfind(',')) << '\n';
    return out.str();
}

void criterion_determinism(const std::filesystem::path &dir, int workers)
{
    const auto t0 = clock_type::now();
    auto c = sweep_config("determinism", SweepAxis::ApertureWavelengths, {6.0, 8.0},
                          {Scheme::FPA, Scheme::GA_MA, Scheme::CFGS_MA}, 3);
    run_experiment(c, dir / "determinism_a", 1, [](const SweepRow &, const SolveResult &r) { g_traces.add(r); });
    run_experiment(c, dir / "determinism_b", std::max(2, workers));
    const std::string a = rows_without_wall_time(dir / "determinism_a" / "rows.csv");
    const std::string b = rows_without_wall_time(dir / "determinism_b" / "rows.csv");
    const auto lines = std::count(a.begin(), a.end(), '\n');
    report(8, "determinism", !a.empty() && a == b,
           fmt("two invocations (1 and %d workers), %ld rows.csv lines, identical modulo wall_ms: %s, %.1f s",
               std::max(2, workers), static_cast<long>(lines), a == b ? "yes" : "no", seconds_since(t0)));
}

} // namespace

int main(int argc, char **argv)
{
    configure_logging_from_env();
    CLI::App app{"acceptance criteria"};
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string scratch = "acceptance_out";
    std::vector<int> only;
    app.add_option("--workers", workers, "worker threads for the Monte Carlo criteria")->check(CLI::PositiveNumber);
    app.add_option("--scratch", scratch, "directory for sweep outputs");
    app.add_option("--only", only, "run a subset of criteria");
    CLI11_PARSE(app, argc, argv);

    const std::set<int> selected(only.begin(), only.end());
    auto want = [&](int id) { return selected.empty() || selected.count(id); };
    const std::filesystem::path dir(scratch);
    std::filesystem::create_directories(dir);

    try {
        if (want(1))
            criterion_fp_tightness();
        if (want(2))
            criterion_gradient();
        if (want(3))
            criterion_subproblem();
        if (want(5) || want(4))
            criterion_ordering(dir, workers);
        if (want(6) || want(4))
            criterion_aperture(dir, workers);
        if (want(7) || want(4))
            criterion_power(dir, workers);
        if (want(8) || want(4))
            criterion_determinism(dir, workers);
        if (want(4))
            criterion_monotone_ao();
    } catch (const std::exception &e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 2;
    }

    std::sort(g_outcomes.begin(), g_outcomes.end(), [](const Outcome &a, const Outcome &b) { return a.id < b.id; });
    int failed = 0;
    for (const auto &o : g_outcomes) {
        std::printf("%s\n", o.line.c_str());
        failed += o.pass ? 0 : 1;
    }
    std::printf("%zu criteria checked, %d failed\n", g_outcomes.size(), failed);
    return failed == 0 ? 0 : 1;
}
