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

#ifndef IDPFL_ENGINE_H_
#define IDPFL_ENGINE_H_

// Federated averaging with client-level DP and individualized sampling rates.
//
// Each round: Poisson-sample clients by their own rate q_i, run local SGD,
// clip each update to the current clip norm C, sum, add Gaussian noise,
// divide by the expected cohort E = sum_i q_i, apply the result to the global
// model, and move C towards the target quantile of update norms.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "idpfl/fed_data.h"
#include "idpfl/model.h"
#include "idpfl/planner.h"

namespace idpfl::engine {

enum class Mode { kIdpSample, kUniformDp, kScale, kNonPrivate };

const char* mode_name(Mode mode);

struct ClipConfig {
  bool enabled = true;
  bool adaptive = true;
  double initial_norm = 0.1;
  double target_quantile = 0.5;
  double learning_rate = 0.2;
  // Std of the noise on the unclipped-count query, in clients. Unset means
  // the default rule in count_noise_std().
  std::optional<double> count_noise_std;
};

struct ClipState {
  double clip_norm = 0.1;
  double target_quantile = 0.5;
  double clip_lr = 0.2;
  double count_noise_std = 0.0;
};

struct EngineConfig {
  Mode mode = Mode::kIdpSample;
  int rounds = 200;
  double server_lr = 1.0;
  model::SgdConfig client;
  ClipConfig clip;
  int eval_interval = 10;
  uint64_t seed = 1;
  // Run the per-client and per-example loops with OpenMP. Results are
  // bit-identical either way.
  bool parallel = true;
};

struct RoundMetrics {
  int round_index = 0;
  int sampled_count = 0;
  double expected_count = 0.0;
  double clip_norm_used = 0.0;
  double noise_std_applied = 0.0;  // std per coordinate of the averaged update
  double mean_update_norm = 0.0;   // before clipping; NaN on an empty round
  double train_loss = 0.0;         // NaN on an empty round
  double eval_loss = 0.0;          // NaN when not evaluated this round
  double eval_accuracy = 0.0;      // NaN when not evaluated this round
};

// Per-group noise multipliers at a common rate; the SCALE baseline.
struct ScalePlan {
  double rate = 0.0;
  double expected_count = 0.0;
  std::vector<planner::PrivacyGroupSpec> groups;
  std::vector<double> sigmas;  // 0 for non-private groups
};

ScalePlan scale_baseline_plan(std::span<const planner::PrivacyGroupSpec> groups,
                              double delta, int64_t steps, int64_t cohort,
                              int64_t population);

using TrainingPlan = std::variant<planner::SamplingPlan, ScalePlan>;

// Independent Bernoulli(q_i) per client; one uniform is drawn for every
// client whatever its rate.
std::vector<int> sample_clients(std::span<const double> rates,
                                std::mt19937_64& rng);

struct ClipResult {
  model::ParamVector clipped;
  bool was_below = true;  // ||delta|| <= C
};

ClipResult clip_update(std::span<const double> delta, double clip_norm);

double l2_norm(std::span<const double> v);

// (sum_k updates[k] + N(0, (noise_multiplier * clip_norm)^2 I)) /
// expected_count. Exactly updates.front().size() normals are drawn when
// noise_multiplier > 0, independent of how many updates there are. `dim` sizes
// the output when `updates` is empty.
model::ParamVector aggregate_and_noise(
    std::span<const model::ParamVector> updates, size_t dim,
    double noise_multiplier, double clip_norm, double expected_count,
    std::mt19937_64& rng, bool parallel = true);

// b = (below_count + N(0, count_noise_std^2)) / expected_count;
// C' = C * exp(-clip_lr * (b - target_quantile)).
ClipState adapt_clip_norm(const ClipState& state, double below_count,
                          double expected_count, std::mt19937_64& rng);

// Default count-noise std for noise multiplier z and expected cohort E:
// 0 when z == 0, else max(0.05 E, z).
double count_noise_std(double noise_multiplier, double expected_count);

// Share of noise multiplier z left for the update sum once the count query
// takes noise count_std: (z^-2 - (2 count_std)^-2)^(-1/2). Requires
// count_std > z / 2 (or both zero).
double update_noise_multiplier(double noise_multiplier, double count_std);

struct TrainingResult {
  model::ParamVector params;
  std::vector<RoundMetrics> metrics;
  double final_clip_norm = 0.0;
};

// Runs config.rounds rounds. Client rates come from each shard's
// sampling_rate and, in SCALE mode, its noise from the plan entry at the
// shard's group_index. Throws ParameterError when the plan kind does not fit
// the mode.
TrainingResult run_training(const EngineConfig& config, const model::Mlp& mlp,
                            const data::FederatedDataset& data,
                            const TrainingPlan& plan);

// Copies per-group rates of `plan` into shard.sampling_rate via group_index.
void apply_rates(data::FederatedDataset& data, std::span<const double> rates);

}  // namespace idpfl::engine

#endif  // IDPFL_ENGINE_H_
