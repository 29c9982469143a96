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

#ifndef IDPFL_EXPERIMENT_H_
#define IDPFL_EXPERIMENT_H_

// Builds data, privacy plans and engine runs from an ExperimentConfig and
// writes per-round CSVs plus a summary.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "idpfl/config.h"
#include "idpfl/engine.h"
#include "idpfl/planner.h"
#include "json.hpp"

namespace idpfl::harness {

inline constexpr const char* kCsvHeader =
    "round,sampled,clip_norm,noise_std,train_loss,eval_loss,eval_acc";
inline constexpr const char* kOutputDirEnv = "IDPFL_OUTPUT_DIR";

// Privacy setup of one distribution; independent of the seed.
struct PreparedDistribution {
  Distribution distribution;
  engine::Mode mode = engine::Mode::kIdpSample;
  engine::TrainingPlan plan;
  std::vector<int> tier_sizes;  // clients per epsilon tier
  // Plan group index for each tier (-1 for an empty tier).
  std::vector<int> tier_to_group;
};

// Throws InfeasibleBudgetError when planning fails.
PreparedDistribution prepare_distribution(const ExperimentConfig& config,
                                          const Distribution& dist);

// Synthetic data for `seed`, partitioned and with privacy tiers assigned
// (group_index holds the tier until bind_plan maps it to plan groups).
data::FederatedDataset build_federated_data(const ExperimentConfig& config,
                                            const Distribution& dist,
                                            uint64_t seed);

// Maps tiers to plan groups and fills sampling rates.
void bind_plan(const PreparedDistribution& prepared,
               data::FederatedDataset& data);

engine::TrainingResult run_cell(const ExperimentConfig& config,
                                const PreparedDistribution& prepared,
                                uint64_t seed);

struct CellSummary {
  std::vector<uint64_t> seeds;
  std::vector<double> final_accuracy;
  std::vector<double> best_accuracy;
  double final_mean = 0.0;
  double final_std = 0.0;
  double best_mean = 0.0;
  double best_std = 0.0;
};

struct ExperimentResult {
  // Keyed by distribution name.
  std::map<std::string, CellSummary> summary;
  nlohmann::json summary_json;
};

void write_metrics_csv(const std::vector<engine::RoundMetrics>& metrics,
                       std::ostream& out);
std::string csv_filename(const std::string& distribution, uint64_t seed);

// Runs every (distribution, seed) cell, up to `jobs` at a time, writing
// <out_dir>/<distribution>_seed<k>.csv, plans.json and summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir, int jobs = 1);

// Plan of every distribution, keyed by name.
nlohmann::json plans_json(const ExperimentConfig& config);

// --out flag, then config, then $IDPFL_OUTPUT_DIR, then "results".
std::string resolve_output_dir(const ExperimentConfig& config,
                               const std::string& flag);

double mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace idpfl::harness

#endif  // IDPFL_EXPERIMENT_H_
