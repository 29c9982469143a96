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

#include "idpfl/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>

#include "idpfl/errors.h"
#include "idpfl/fed_data.h"
#include "idpfl/rng.h"

namespace idpfl::harness {
namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

nlohmann::json epsilon_json(double e) {
  if (std::isinf(e)) return "inf";
  return e;
}

nlohmann::json plan_to_json(const PreparedDistribution& p) {
  nlohmann::json j;
  j["mode"] = engine::mode_name(p.mode);
  j["fractions"] = p.distribution.fractions;
  j["tier_sizes"] = p.tier_sizes;
  if (const auto* s = std::get_if<planner::SamplingPlan>(&p.plan)) {
    j["plan"] = planner::to_json(*s);
  } else {
    const auto& scale = std::get<engine::ScalePlan>(p.plan);
    nlohmann::json groups = nlohmann::json::array();
    for (size_t g = 0; g < scale.groups.size(); ++g) {
      groups.push_back({{"epsilon", epsilon_json(scale.groups[g].epsilon)},
                        {"size", scale.groups[g].size},
                        {"rate", scale.rate},
                        {"sigma", scale.sigmas[g]}});
    }
    j["plan"] = {{"groups", std::move(groups)},
                 {"expected_cohort", scale.expected_count}};
  }
  return j;
}

}  // namespace

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

PreparedDistribution prepare_distribution(const ExperimentConfig& config,
                                          const Distribution& dist) {
  PreparedDistribution out;
  out.distribution = dist;
  const int n = config.dataset.num_clients;
  const int64_t steps = config.engine.rounds;
  const double delta = config.privacy.delta;
  const auto& eps = config.privacy.epsilons;

  if (dist.non_private() || config.engine.mode == engine::Mode::kNonPrivate) {
    out.mode = engine::Mode::kNonPrivate;
    out.tier_sizes.assign(eps.size(), 0);
    out.tier_to_group.assign(eps.size(), 0);
    out.plan = planner::non_private_plan(config.cohort, n);
    return out;
  }
  out.mode = config.engine.mode;
  out.tier_sizes = data::group_sizes(dist.fractions, n);

  std::vector<planner::PrivacyGroupSpec> groups;
  out.tier_to_group.assign(eps.size(), -1);
  for (size_t t = 0; t < eps.size(); ++t) {
    if (out.tier_sizes[t] == 0) continue;
    out.tier_to_group[t] = static_cast<int>(groups.size());
    groups.push_back({eps[t], out.tier_sizes[t]});
  }

  switch (out.mode) {
    case engine::Mode::kIdpSample:
      out.plan = planner::get_group_sampling_rates(groups, delta, steps,
                                                   config.cohort, n);
      break;
    case engine::Mode::kUniformDp:
      // Everyone gets the strictest budget present.
      out.plan = planner::uniform_plan(
          std::min_element(groups.begin(), groups.end(),
                           [](const auto& a, const auto& b) {
                             return a.epsilon < b.epsilon;
                           })
              ->epsilon,
          delta, steps, config.cohort, n);
      for (int& g : out.tier_to_group) {
        if (g >= 0) g = 0;
      }
      break;
    case engine::Mode::kScale:
      out.plan =
          engine::scale_baseline_plan(groups, delta, steps, config.cohort, n);
      break;
    case engine::Mode::kNonPrivate:
      break;
  }
  return out;
}

data::FederatedDataset build_federated_data(const ExperimentConfig& config,
                                            const Distribution& dist,
                                            uint64_t seed) {
  const DatasetConfig& dc = config.dataset;
  const Dataset train = data::make_synthetic(
      dc.synthetic, derive_seed(seed, {uint64_t(Stream::kData), 0}));
  data::SyntheticSpec test_spec = dc.synthetic;
  test_spec.samples_per_class = dc.test_samples_per_class;
  test_spec.class_counts.clear();
  const uint64_t part_seed = derive_seed(seed, {uint64_t(Stream::kPartition)});
  data::FederatedDataset fed =
      dc.partition == Partition::kIid
          ? data::partition_iid(train, dc.num_clients, part_seed)
          : data::partition_label_skew(train, dc.num_clients, dc.alpha,
                                       part_seed);
  fed.test_set = data::make_synthetic(
      test_spec, derive_seed(seed, {uint64_t(Stream::kData), 1}));
  if (dist.non_private()) {
    for (auto& s : fed.shards) s.group_index = 0;
  } else {
    data::assign_privacy_groups(fed.shards, dist.fractions,
                                derive_seed(seed, {uint64_t(Stream::kGroups)}));
  }
  return fed;
}

void bind_plan(const PreparedDistribution& prepared,
               data::FederatedDataset& data) {
  for (auto& shard : data.shards) {
    const int tier = shard.group_index;
    if (tier < 0 ||
        static_cast<size_t>(tier) >= prepared.tier_to_group.size() ||
        prepared.tier_to_group[tier] < 0) {
      throw ParameterError("client assigned to a tier without a plan group");
    }
    shard.group_index = prepared.tier_to_group[tier];
  }
  if (const auto* s = std::get_if<planner::SamplingPlan>(&prepared.plan)) {
    engine::apply_rates(data, s->rates);
  } else {
    const auto& scale = std::get<engine::ScalePlan>(prepared.plan);
    for (auto& shard : data.shards) shard.sampling_rate = scale.rate;
  }
}

engine::TrainingResult run_cell(const ExperimentConfig& config,
                                const PreparedDistribution& prepared,
                                uint64_t seed) {
  data::FederatedDataset fed =
      build_federated_data(config, prepared.distribution, seed);
  bind_plan(prepared, fed);
  const model::Mlp mlp(
      model::ModelConfig{.input_dim = config.dataset.synthetic.dim,
                         .hidden_dims = config.hidden_dims,
                         .num_classes = config.dataset.synthetic.num_classes,
                         .activation = model::Activation::kRelu});
  engine::EngineConfig ec = config.engine;
  ec.mode = prepared.mode;
  ec.seed = seed;
  return engine::run_training(ec, mlp, fed, prepared.plan);
}

void write_metrics_csv(const std::vector<engine::RoundMetrics>& metrics,
                       std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& m : metrics) {
    out << (m.round_index + 1) << ',' << m.sampled_count << ','
        << format_number(m.clip_norm_used) << ','
        << format_number(m.noise_std_applied) << ','
        << format_number(m.train_loss) << ',' << format_number(m.eval_loss)
        << ',' << format_number(m.eval_accuracy) << '\n';
  }
}

std::string csv_filename(const std::string& distribution, uint64_t seed) {
  return distribution + "_seed" + std::to_string(seed) + ".csv";
}

nlohmann::json plans_json(const ExperimentConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& d : config.privacy.distributions) {
    out[d.name] = plan_to_json(prepare_distribution(config, d));
  }
  return out;
}

std::string resolve_output_dir(const ExperimentConfig& config,
                               const std::string& flag) {
  if (!flag.empty()) return flag;
  if (config.output_dir && !config.output_dir->empty())
    return *config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env) {
    return env;
  }
  return "results";
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir, int jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<PreparedDistribution> prepared;
  nlohmann::json plans = nlohmann::json::object();
  for (const auto& d : config.privacy.distributions) {
    prepared.push_back(prepare_distribution(config, d));
    plans[d.name] = plan_to_json(prepared.back());
  }
  {
    std::ofstream f(fs::path(out_dir) / "plans.json");
    f << plans.dump(2) << '\n';
  }

  struct Cell {
    size_t dist;
    uint64_t seed;
    double final_acc = 0.0;
    double best_acc = 0.0;
  };
  std::vector<Cell> cells;
  for (size_t d = 0; d < prepared.size(); ++d) {
    for (uint64_t s : config.seeds) cells.push_back({d, s});
  }

  std::exception_ptr error;
  const long long count = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(jobs, 1))
  for (long long c = 0; c < count; ++c) {
    try {
      Cell& cell = cells[c];
      const auto& prep = prepared[cell.dist];
      engine::TrainingResult r = run_cell(config, prep, cell.seed);
      double best = 0.0;
      for (const auto& m : r.metrics) {
        if (!std::isnan(m.eval_accuracy))
          best = std::max(best, m.eval_accuracy);
      }
      cell.final_acc = r.metrics.back().eval_accuracy;
      cell.best_acc = best;
      std::ofstream f(fs::path(out_dir) /
                      csv_filename(prep.distribution.name, cell.seed));
      write_metrics_csv(r.metrics, f);
    } catch (...) {
#pragma omp critical(idpfl_experiment_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  result.summary_json = nlohmann::json::object();
  for (size_t d = 0; d < prepared.size(); ++d) {
    const std::string& name = prepared[d].distribution.name;
    CellSummary s;
    nlohmann::json files = nlohmann::json::array();
    for (const Cell& c : cells) {
      if (c.dist != d) continue;
      s.seeds.push_back(c.seed);
      s.final_accuracy.push_back(c.final_acc);
      s.best_accuracy.push_back(c.best_acc);
      files.push_back(csv_filename(name, c.seed));
    }
    s.final_mean = mean(s.final_accuracy);
    s.final_std = sample_std(s.final_accuracy);
    s.best_mean = mean(s.best_accuracy);
    s.best_std = sample_std(s.best_accuracy);
    result.summary_json[name] = {
        {"mode", engine::mode_name(prepared[d].mode)},
        {"fractions", prepared[d].distribution.fractions},
        {"seeds", s.seeds},
        {"final_accuracy", s.final_accuracy},
        {"best_accuracy", s.best_accuracy},
        {"final_mean", s.final_mean},
        {"final_std", s.final_std},
        {"best_mean", s.best_mean},
        {"best_std", s.best_std},
        {"csv", std::move(files)}};
    result.summary.emplace(name, std::move(s));
  }
  std::ofstream f(fs::path(out_dir) / "summary.json");
  f << result.summary_json.dump(2) << '\n';
  return result;
}

}  // namespace idpfl::harness
