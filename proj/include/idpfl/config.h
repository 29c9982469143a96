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

#ifndef IDPFL_CONFIG_H_
#define IDPFL_CONFIG_H_

// Experiment configuration: JSON schema, defaults and validation.
//
//   {
//     "dataset": {"num_classes", "dim", "samples_per_class",
//                 "test_samples_per_class", "class_separation",
//                 "partition": "iid" | "label_skew", "alpha", "num_clients"},
//     "privacy": {"epsilons": [1, 2, 3] (numbers or "inf"),
//                 "distributions": ["strict", {"name", "fractions"}, ...],
//                 "delta"},
//     "engine":  {"mode", "rounds", "cohort", "server_lr", "local_epochs",
//                 "batch_size", "client_lr", "hidden_dims", "eval_interval",
//                 "parallel", "clip": {"enabled", "adaptive", "initial_norm",
//                 "target_quantile", "learning_rate", "count_noise_std"}},
//     "seeds": [1, 2, 3],
//     "output_dir": "results"
//   }
//
// Only "dataset" and "privacy" are required. Unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idpfl/engine.h"
#include "idpfl/fed_data.h"
#include "json.hpp"

namespace idpfl::harness {

enum class Partition { kIid, kLabelSkew };

struct DatasetConfig {
  data::SyntheticSpec synthetic{.num_classes = 4,
                                .dim = 8,
                                .samples_per_class = 500,
                                .class_counts = {},
                                .class_separation = 2.0};
  int test_samples_per_class = 250;
  Partition partition = Partition::kIid;
  double alpha = 0.5;
  int num_clients = 100;
};

// Fractions of clients per privacy tier, aligned with PrivacyConfig::epsilons.
// All-zero fractions denote the non-private run.
struct Distribution {
  std::string name;
  std::vector<double> fractions;
  bool non_private() const;
};

struct PrivacyConfig {
  std::vector<double> epsilons = {1.0, 2.0, 3.0};
  std::vector<Distribution> distributions;
  double delta = 1e-5;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  PrivacyConfig privacy;
  engine::EngineConfig engine;
  int cohort = 10;
  std::vector<int> hidden_dims = {64};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::optional<std::string> output_dir;
};

// Named privacy distributions over three tiers: strict 100-0-0, jensen
// 54-37-9, acquisti 34-43-23, relaxed 0-0-100, nonprivate 0-0-0. Returns
// nullopt for unknown names.
std::optional<Distribution> preset_distribution(std::string_view name);

// The five presets, strictest first.
std::vector<Distribution> default_distributions();

// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

engine::Mode parse_mode(std::string_view name);

}  // namespace idpfl::harness

#endif  // IDPFL_CONFIG_H_
