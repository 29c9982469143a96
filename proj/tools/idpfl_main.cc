// Copyright 2026 The IDP-FL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end.
//
//   idpfl run <config.json> [--out DIR] [--jobs K]
//   idpfl plan <config.json>
//   idpfl plot <csv...> --out FILE.svg
//   idpfl export-data <config.json> --seed S --out DIR
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 planner
// infeasible.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idpfl/config.h"
#include "idpfl/errors.h"
#include "idpfl/experiment.h"
#include "idpfl/fed_data.h"
#include "idpfl/plot.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

void print_summary(const idpfl::harness::ExperimentResult& result) {
  for (const auto& [name, cell] : result.summary) {
    std::cout << name << ": final " << cell.final_mean << " +- "
              << cell.final_std << ", best " << cell.best_mean << " +- "
              << cell.best_std << " over " << cell.seeds.size() << " seeds\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning with individualized differential privacy"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run every distribution and seed");
  run->add_option("config", config_path, "experiment JSON")->required();
  run->add_option("--out", out,
                  "output directory (default: config, then $" +
                      std::string(idpfl::harness::kOutputDirEnv) +
                      ", then ./results)");
  run->add_option("--jobs", jobs, "concurrent runs")
      ->check(CLI::PositiveNumber);

  auto* plan = app.add_subcommand("plan", "print the sampling plans as JSON");
  plan->add_option("config", config_path, "experiment JSON")->required();

  std::vector<std::string> csvs;
  std::string svg;
  auto* plot = app.add_subcommand("plot", "plot accuracy curves to SVG");
  plot->add_option("csv", csvs, "per-round metrics CSVs")->required();
  plot->add_option("--out", svg, "output SVG")->required();

  uint64_t seed = 1;
  auto* exp = app.add_subcommand("export-data",
                                 "write the synthetic data as JSON lines");
  exp->add_option("config", config_path, "experiment JSON")->required();
  exp->add_option("--seed", seed, "data seed");
  exp->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = idpfl::harness::load_config(config_path);
      const std::string dir = idpfl::harness::resolve_output_dir(cfg, out);
      const auto result = idpfl::harness::run_experiment(cfg, dir, jobs);
      print_summary(result);
      std::cout << "wrote " << dir << "\n";
    } else if (*plan) {
      const auto cfg = idpfl::harness::load_config(config_path);
      std::cout << idpfl::harness::plans_json(cfg).dump(2) << "\n";
    } else if (*plot) {
      idpfl::harness::emit_curve_plot(csvs, svg);
    } else if (*exp) {
      const auto cfg = idpfl::harness::load_config(config_path);
      const auto fed = idpfl::harness::build_federated_data(
          cfg, idpfl::harness::default_distributions().front(), seed);
      idpfl::Dataset train;
      train.dim = fed.test_set.dim;
      train.num_classes = fed.num_classes;
      for (const auto& shard : fed.shards) {
        for (size_t i = 0; i < shard.examples.size(); ++i) {
          train.push_back(shard.examples.row(i), shard.examples.labels[i]);
        }
      }
      std::filesystem::create_directories(out);
      idpfl::data::write_jsonl_file(train, out + "/train.jsonl");
      idpfl::data::write_jsonl_file(fed.test_set, out + "/test.jsonl");
    }
  } catch (const idpfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const idpfl::InfeasibleBudgetError& e) {
    std::cerr << "planner infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
