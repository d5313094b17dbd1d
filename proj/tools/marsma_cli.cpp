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

#include "marsma/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    marsma::configure_logging_from_env();

    CLI::App app{"Monte Carlo sum-rate sweeps for movable-antenna RSMA"};
    app.require_subcommand(1);

    std::string config_path, out_dir, csv_path;
    int workers = 1;
    std::optional<int> trials;

    auto *run = app.add_subcommand("run", "run a sweep and write rows.csv, summary.csv, failures.csv");
    run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (defaults to the config's output_dir)");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--trials", trials, "override num_trials")->check(CLI::PositiveNumber);

    auto *summarize = app.add_subcommand("summarize", "summarize a rows.csv file");
    summarize->add_option("--in", csv_path, "rows.csv to summarize")->required()->check(CLI::ExistingFile);

    auto *validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            marsma::ExperimentConfig cfg = marsma::load_experiment_config(config_path);
            if (trials)
                cfg.num_trials = *trials;
            const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
            const auto res = marsma::run_experiment(cfg, dir, workers);
            marsma::write_summary_csv(std::cout, res.summary);
            if (!res.failures.empty())
                std::cerr << res.failures.size() << " run(s) failed; see " << dir << "/failures.csv\n";
        } else if (summarize->parsed()) {
            std::ifstream in(csv_path);
            const auto rows = marsma::read_rows_csv(in);
            std::vector<marsma::FailureRow> failures;
            const auto fpath = std::filesystem::path(csv_path).parent_path() / "failures.csv";
            if (std::filesystem::exists(fpath)) {
                std::ifstream fin(fpath);
                failures = marsma::read_failures_csv(fin);
            }
            marsma::write_summary_csv(std::cout, marsma::summarize(rows, failures));
        } else if (validate->parsed()) {
            const marsma::ExperimentConfig cfg = marsma::load_experiment_config(config_path);
            cfg.validate();
            std::cout << "ok: " << cfg.name << ", " << cfg.values.size() << " point(s) x " << cfg.num_trials
                      << " trial(s) x " << cfg.schemes.size() << " scheme(s)\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
