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

#include "idpfl/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "idpfl/accountant.h"
#include "idpfl/errors.h"
#include "idpfl/kernels.h"
#include "idpfl/rng.h"

namespace idpfl::engine {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Noise settings resolved once per run.
struct NoiseSetup {
  double expected_count = 0.0;
  double count_std = 0.0;
  // Update-noise multiplier per plan group (SCALE) or a single entry.
  std::vector<double> update_multipliers;
  bool per_client = false;
};

NoiseSetup resolve_noise(const EngineConfig& config, const TrainingPlan& plan,
                         double rate_sum, bool adaptive) {
  NoiseSetup setup;
  std::vector<double> multipliers;
  if (config.mode == Mode::kScale) {
    const auto* scale = std::get_if<ScalePlan>(&plan);
    if (scale == nullptr) throw ParameterError("SCALE mode needs a ScalePlan");
    setup.expected_count = scale->expected_count;
    setup.per_client = true;
    multipliers = scale->sigmas;
  } else {
    const auto* sampling = std::get_if<planner::SamplingPlan>(&plan);
    if (sampling == nullptr) {
      throw ParameterError(std::string(mode_name(config.mode)) +
                           " mode needs a SamplingPlan");
    }
    setup.expected_count = rate_sum;
    multipliers = {config.mode == Mode::kNonPrivate ? 0.0
                                                    : sampling->sigma_sample};
  }
  if (!(setup.expected_count > 0.0)) {
    throw ParameterError("expected cohort must be positive");
  }
  const double z_max =
      *std::max_element(multipliers.begin(), multipliers.end());
  if (adaptive) {
    setup.count_std = config.clip.count_noise_std.value_or(
        count_noise_std(z_max, setup.expected_count));
    for (double& z : multipliers)
      z = update_noise_multiplier(z, setup.count_std);
  }
  setup.update_multipliers = std::move(multipliers);
  return setup;
}

void add_gaussian(std::span<double> v, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& x : v) x += normal(rng);
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kIdpSample:
      return "idp_sample";
    case Mode::kUniformDp:
      return "uniform_dp";
    case Mode::kScale:
      return "scale";
    case Mode::kNonPrivate:
      return "non_private";
  }
  return "unknown";
}

ScalePlan scale_baseline_plan(std::span<const planner::PrivacyGroupSpec> groups,
                              double delta, int64_t steps, int64_t cohort,
                              int64_t population) {
  if (groups.empty()) throw ParameterError("no privacy groups");
  if (population < 1 || cohort < 1 || cohort > population) {
    throw ParameterError("need 1 <= cohort <= population");
  }
  ScalePlan plan;
  plan.rate = static_cast<double>(cohort) / static_cast<double>(population);
  plan.expected_count = static_cast<double>(cohort);
  plan.groups.assign(groups.begin(), groups.end());
  int64_t total = 0;
  for (const auto& g : groups) {
    total += g.size;
    plan.sigmas.push_back(
        std::isinf(g.epsilon)
            ? 0.0
            : accountant::get_noise({g.epsilon, delta}, plan.rate, steps));
  }
  if (total != population) {
    throw ParameterError("group sizes must sum to the population");
  }
  return plan;
}

std::vector<int> sample_clients(std::span<const double> rates,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> sampled;
  for (size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0.0 && rates[i] <= 1.0)) {
      throw ParameterError("sampling rates must be in [0, 1]");
    }
    if (unif(rng) < rates[i]) sampled.push_back(static_cast<int>(i));
  }
  return sampled;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

ClipResult clip_update(std::span<const double> delta, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ParameterError("clip norm must be positive");
  ClipResult out;
  out.clipped.assign(delta.begin(), delta.end());
  const double norm = l2_norm(delta);
  out.was_below = norm <= clip_norm;
  if (!out.was_below) {
    const double scale = clip_norm / norm;
    for (double& x : out.clipped) x *= scale;
  }
  return out;
}

model::ParamVector aggregate_and_noise(
    std::span<const model::ParamVector> updates, size_t dim,
    double noise_multiplier, double clip_norm, double expected_count,
    std::mt19937_64& rng, bool parallel) {
  if (!(expected_count > 0.0)) {
    throw ParameterError("expected count must be positive");
  }
  if (noise_multiplier < 0.0) {
    throw ParameterError("noise multiplier must be >= 0");
  }
  model::ParamVector sum(dim, 0.0);
  if (parallel) {
    kernels::sum_updates_omp(updates, sum);
  } else {
    kernels::sum_updates_serial(updates, sum);
  }
  if (noise_multiplier > 0.0) {
    if (!std::isfinite(clip_norm)) {
      throw ParameterError("noise needs a finite clip norm");
    }
    add_gaussian(sum, noise_multiplier * clip_norm, rng);
  }
  for (double& x : sum) x /= expected_count;
  return sum;
}

ClipState adapt_clip_norm(const ClipState& state, double below_count,
                          double expected_count, std::mt19937_64& rng) {
  if (!(expected_count > 0.0)) {
    throw ParameterError("expected count must be positive");
  }
  double noisy = below_count;
  if (state.count_noise_std > 0.0) {
    noisy += std::normal_distribution<double>(0.0, state.count_noise_std)(rng);
  }
  const double fraction = noisy / expected_count;
  ClipState next = state;
  next.clip_norm =
      state.clip_norm *
      std::exp(-state.clip_lr * (fraction - state.target_quantile));
  // exp() underflow is the only way to reach zero.
  next.clip_norm = std::max(next.clip_norm, std::numeric_limits<double>::min());
  return next;
}

double count_noise_std(double noise_multiplier, double expected_count) {
  if (noise_multiplier <= 0.0) return 0.0;
  return std::max(0.05 * expected_count, noise_multiplier);
}

double update_noise_multiplier(double noise_multiplier, double count_std) {
  if (noise_multiplier <= 0.0) return 0.0;
  if (!(2.0 * count_std > noise_multiplier)) {
    throw ParameterError(
        "count noise std must exceed half the noise multiplier");
  }
  const double inv = 1.0 / (noise_multiplier * noise_multiplier) -
                     1.0 / (4.0 * count_std * count_std);
  return 1.0 / std::sqrt(inv);
}

void apply_rates(data::FederatedDataset& data, std::span<const double> rates) {
  for (auto& shard : data.shards) {
    if (shard.group_index < 0 ||
        static_cast<size_t>(shard.group_index) >= rates.size()) {
      throw ParameterError("shard group index outside the plan");
    }
    shard.sampling_rate = rates[shard.group_index];
  }
}

TrainingResult run_training(const EngineConfig& config, const model::Mlp& mlp,
                            const data::FederatedDataset& data,
                            const TrainingPlan& plan) {
  if (config.rounds < 1) throw ParameterError("rounds must be >= 1");
  if (!(config.server_lr > 0.0) || !(config.client.learning_rate >= 0.0)) {
    throw ParameterError("learning rates must be positive");
  }
  if (data.shards.empty()) throw ParameterError("no clients");

  const bool private_mode = config.mode != Mode::kNonPrivate;
  const bool clipping = private_mode && config.clip.enabled;
  const bool adaptive = clipping && config.clip.adaptive;

  std::vector<double> rates;
  rates.reserve(data.shards.size());
  for (const auto& s : data.shards) rates.push_back(s.sampling_rate);
  double rate_sum = 0.0;
  for (double q : rates) rate_sum += q;

  const NoiseSetup noise = resolve_noise(config, plan, rate_sum, adaptive);
  if (noise.per_client) {
    for (const auto& s : data.shards) {
      if (s.group_index < 0 || static_cast<size_t>(s.group_index) >=
                                   noise.update_multipliers.size()) {
        throw ParameterError("shard group index outside the SCALE plan");
      }
    }
  }
  const double E = noise.expected_count;

  ClipState clip{clipping ? config.clip.initial_norm : kInf,
                 config.clip.target_quantile, config.clip.learning_rate,
                 noise.count_std};
  if (clipping && !(clip.clip_norm > 0.0)) {
    throw ParameterError("initial clip norm must be positive");
  }

  TrainingResult result;
  result.params = model::init_params(
      mlp, derive_seed(config.seed, {uint64_t(Stream::kInit)}));
  const size_t dim = mlp.num_params();

  for (int round = 0; round < config.rounds; ++round) {
    const auto r = static_cast<uint64_t>(round);
    auto sample_rng = make_rng(config.seed, Stream::kSampling, r);
    const std::vector<int> sampled = sample_clients(rates, sample_rng);

    std::vector<model::ParamVector> updates(sampled.size());
    std::vector<double> losses(sampled.size());
    std::vector<double> norms(sampled.size());
    auto local_step = [&](size_t k) {
      const auto& shard = data.shards[sampled[k]];
      const uint64_t client_seed =
          derive_seed(config.seed, {uint64_t(Stream::kLocal), r,
                                    static_cast<uint64_t>(shard.client_id)});
      model::LocalResult local = model::local_sgd(
          mlp, result.params, shard.examples, config.client, client_seed);
      norms[k] = l2_norm(local.delta);
      losses[k] = local.mean_loss;
      updates[k] = std::move(local.delta);
    };
    if (config.parallel) {
      kernels::for_each_index_omp(sampled.size(), local_step);
    } else {
      kernels::for_each_index_serial(sampled.size(), local_step);
    }

    const double clip_norm = clip.clip_norm;
    int below = 0;
    double noise_var_sum = 0.0;
    for (size_t k = 0; k < updates.size(); ++k) {
      if (clipping) {
        ClipResult c = clip_update(updates[k], clip_norm);
        below += c.was_below ? 1 : 0;
        updates[k] = std::move(c.clipped);
      }
      if (noise.per_client) {
        const int client = sampled[k];
        const double z =
            noise.update_multipliers[data.shards[client].group_index];
        if (z > 0.0) {
          auto client_rng = make_rng(config.seed, Stream::kClientNoise, r,
                                     static_cast<uint64_t>(client));
          add_gaussian(updates[k], z * clip_norm, client_rng);
          noise_var_sum += z * z;
        }
      }
    }

    const double z_shared =
        noise.per_client ? 0.0 : noise.update_multipliers[0];
    auto noise_rng = make_rng(config.seed, Stream::kNoise, r);
    const model::ParamVector avg = aggregate_and_noise(
        updates, dim, z_shared, clip_norm, E, noise_rng, config.parallel);
    for (size_t j = 0; j < dim; ++j) {
      result.params[j] += config.server_lr * avg[j];
    }

    RoundMetrics m;
    m.round_index = round;
    m.sampled_count = static_cast<int>(sampled.size());
    m.expected_count = E;
    m.clip_norm_used = clip_norm;
    const double noise_mult =
        noise.per_client ? std::sqrt(noise_var_sum) : z_shared;
    m.noise_std_applied = noise_mult > 0.0 ? noise_mult * clip_norm / E : 0.0;
    if (sampled.empty()) {
      m.mean_update_norm = kNaN;
      m.train_loss = kNaN;
    } else {
      double ns = 0.0, ls = 0.0;
      for (size_t k = 0; k < sampled.size(); ++k) {
        ns += norms[k];
        ls += losses[k];
      }
      m.mean_update_norm = ns / sampled.size();
      m.train_loss = ls / sampled.size();
    }

    if (adaptive) {
      auto count_rng = make_rng(config.seed, Stream::kCountNoise, r);
      clip = adapt_clip_norm(clip, below, E, count_rng);
    }

    const bool eval_now =
        round + 1 == config.rounds ||
        (config.eval_interval > 0 && (round + 1) % config.eval_interval == 0);
    if (eval_now && !data.test_set.empty()) {
      const model::EvalResult ev =
          model::evaluate(mlp, result.params, data.test_set, config.parallel);
      m.eval_loss = ev.loss;
      m.eval_accuracy = ev.accuracy;
    } else {
      m.eval_loss = kNaN;
      m.eval_accuracy = kNaN;
    }
    result.metrics.push_back(m);
  }
  result.final_clip_norm = clip.clip_norm;
  return result;
}

}  // namespace idpfl::engine
