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

#include "idpfl/config.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "idpfl/errors.h"

namespace idpfl::harness {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) {
      throw ConfigError(path.empty() ? item.key() : path + "." + item.key(),
                        "unknown key");
    }
  }
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

template <typename T>
T get(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(join(path, key), "has the wrong type");
  }
}

int get_positive_int(const json& obj, const std::string& path, const char* key,
                     int fallback) {
  const json* v = obj.contains(key) ? &obj.at(key) : nullptr;
  if (v != nullptr && !v->is_number_integer()) {
    throw ConfigError(join(path, key), "must be an integer");
  }
  const int value = v != nullptr ? v->get<int>() : fallback;
  if (value < 1) throw ConfigError(join(path, key), "must be >= 1");
  return value;
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) {
    throw ConfigError(join(path, key), "must be a number");
  }
  return obj.at(key).get<double>();
}

double parse_epsilon(const json& v, const std::string& path) {
  if (v.is_string() &&
      (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
    return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) throw ConfigError(path, "must be a number or \"inf\"");
  const double e = v.get<double>();
  if (!(e > 0.0)) throw ConfigError(path, "must be positive");
  return e;
}

DatasetConfig parse_dataset(const json& j) {
  const std::string path = "dataset";
  reject_unknown(j, path,
                 {"num_classes", "dim", "samples_per_class", "class_counts",
                  "test_samples_per_class", "class_separation", "partition",
                  "alpha", "num_clients"});
  DatasetConfig d;
  auto& s = d.synthetic;
  s.num_classes = get_positive_int(j, path, "num_classes", s.num_classes);
  if (s.num_classes < 2)
    throw ConfigError("dataset.num_classes", "must be >= 2");
  s.dim = get_positive_int(j, path, "dim", s.dim);
  s.samples_per_class =
      get_positive_int(j, path, "samples_per_class", s.samples_per_class);
  s.class_counts = get(j, path, "class_counts", std::vector<int>{});
  if (!s.class_counts.empty() &&
      s.class_counts.size() != static_cast<size_t>(s.num_classes)) {
    throw ConfigError("dataset.class_counts", "needs one entry per class");
  }
  for (int c : s.class_counts) {
    if (c < 1)
      throw ConfigError("dataset.class_counts", "entries must be >= 1");
  }
  d.test_samples_per_class = get_positive_int(j, path, "test_samples_per_class",
                                              d.test_samples_per_class);
  s.class_separation =
      get_number(j, path, "class_separation", s.class_separation);
  if (!(s.class_separation >= 0.0)) {
    throw ConfigError("dataset.class_separation", "must be >= 0");
  }
  const std::string partition = get(j, path, "partition", std::string("iid"));
  if (partition == "iid") {
    d.partition = Partition::kIid;
  } else if (partition == "label_skew") {
    d.partition = Partition::kLabelSkew;
  } else {
    throw ConfigError("dataset.partition", "must be \"iid\" or \"label_skew\"");
  }
  d.alpha = get_number(j, path, "alpha", d.alpha);
  if (!(d.alpha > 0.0)) throw ConfigError("dataset.alpha", "must be positive");
  d.num_clients = get_positive_int(j, path, "num_clients", d.num_clients);
  return d;
}

Distribution parse_distribution(const json& v, const std::string& path,
                                size_t tiers) {
  Distribution dist;
  if (v.is_string()) {
    auto preset = preset_distribution(v.get<std::string>());
    if (!preset) {
      throw ConfigError(
          path, "unknown distribution preset \"" + v.get<std::string>() + "\"");
    }
    dist = *preset;
  } else {
    reject_unknown(v, path, {"name", "fractions"});
    if (!v.contains("name") || !v.at("name").is_string()) {
      throw ConfigError(path + ".name", "is required and must be a string");
    }
    dist.name = v.at("name").get<std::string>();
    if (!v.contains("fractions")) {
      throw ConfigError(path + ".fractions", "is required");
    }
    dist.fractions = get(v, path, "fractions", std::vector<double>{});
  }
  const std::string fpath = path + ".fractions";
  if (dist.name.empty()) throw ConfigError(path + ".name", "must not be empty");
  if (dist.fractions.size() != tiers) {
    throw ConfigError(fpath, "needs one fraction per epsilon (" +
                                 std::to_string(tiers) + ")");
  }
  double sum = 0.0;
  for (double f : dist.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ConfigError(fpath, "entries must lie in [0, 1]");
    }
    sum += f;
  }
  if (!dist.non_private() && std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(fpath, "must sum to 1 (or be all zero for non-private)");
  }
  return dist;
}

PrivacyConfig parse_privacy(const json& j) {
  const std::string path = "privacy";
  reject_unknown(j, path, {"epsilons", "distributions", "delta"});
  PrivacyConfig p;
  if (j.contains("epsilons")) {
    const json& eps = j.at("epsilons");
    if (!eps.is_array() || eps.empty()) {
      throw ConfigError("privacy.epsilons", "must be a non-empty array");
    }
    p.epsilons.clear();
    for (size_t i = 0; i < eps.size(); ++i) {
      p.epsilons.push_back(
          parse_epsilon(eps[i], "privacy.epsilons[" + std::to_string(i) + "]"));
      if (i > 0 && !(p.epsilons[i] > p.epsilons[i - 1])) {
        throw ConfigError("privacy.epsilons", "must be strictly ascending");
      }
    }
  }
  p.delta = get_number(j, path, "delta", p.delta);
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    throw ConfigError("privacy.delta", "must lie in (0, 1)");
  }
  if (j.contains("distributions")) {
    const json& ds = j.at("distributions");
    if (!ds.is_array() || ds.empty()) {
      throw ConfigError("privacy.distributions", "must be a non-empty array");
    }
    std::set<std::string> names;
    for (size_t i = 0; i < ds.size(); ++i) {
      const std::string dpath =
          "privacy.distributions[" + std::to_string(i) + "]";
      Distribution d = parse_distribution(ds[i], dpath, p.epsilons.size());
      if (!names.insert(d.name).second) {
        throw ConfigError(dpath + ".name", "duplicate distribution name");
      }
      p.distributions.push_back(std::move(d));
    }
  } else {
    if (p.epsilons.size() != 3) {
      throw ConfigError("privacy.distributions",
                        "is required unless there are exactly 3 epsilons");
    }
    p.distributions = default_distributions();
  }
  return p;
}

void parse_engine(const json& j, ExperimentConfig& cfg) {
  const std::string path = "engine";
  reject_unknown(
      j, path,
      {"mode", "rounds", "cohort", "server_lr", "local_epochs", "batch_size",
       "client_lr", "hidden_dims", "eval_interval", "parallel", "clip"});
  auto& e = cfg.engine;
  if (j.contains("mode")) {
    try {
      e.mode = parse_mode(get(j, path, "mode", std::string()));
    } catch (const ParameterError& err) {
      throw ConfigError("engine.mode", err.what());
    }
  }
  e.rounds = get_positive_int(j, path, "rounds", e.rounds);
  cfg.cohort = get_positive_int(j, path, "cohort", cfg.cohort);
  e.server_lr = get_number(j, path, "server_lr", e.server_lr);
  if (!(e.server_lr > 0.0))
    throw ConfigError("engine.server_lr", "must be > 0");
  e.client.epochs = get_positive_int(j, path, "local_epochs", e.client.epochs);
  e.client.batch_size =
      get_positive_int(j, path, "batch_size", e.client.batch_size);
  e.client.learning_rate =
      get_number(j, path, "client_lr", e.client.learning_rate);
  if (!(e.client.learning_rate > 0.0)) {
    throw ConfigError("engine.client_lr", "must be > 0");
  }
  cfg.hidden_dims = get(j, path, "hidden_dims", cfg.hidden_dims);
  for (int h : cfg.hidden_dims) {
    if (h < 1) throw ConfigError("engine.hidden_dims", "widths must be >= 1");
  }
  e.eval_interval = get_positive_int(j, path, "eval_interval", e.eval_interval);
  e.parallel = get(j, path, "parallel", e.parallel);
  if (j.contains("clip")) {
    const json& c = j.at("clip");
    const std::string cpath = "engine.clip";
    reject_unknown(c, cpath,
                   {"enabled", "adaptive", "initial_norm", "target_quantile",
                    "learning_rate", "count_noise_std"});
    auto& clip = e.clip;
    clip.enabled = get(c, cpath, "enabled", clip.enabled);
    clip.adaptive = get(c, cpath, "adaptive", clip.adaptive);
    clip.initial_norm = get_number(c, cpath, "initial_norm", clip.initial_norm);
    if (!(clip.initial_norm > 0.0)) {
      throw ConfigError("engine.clip.initial_norm", "must be > 0");
    }
    clip.target_quantile =
        get_number(c, cpath, "target_quantile", clip.target_quantile);
    if (!(clip.target_quantile > 0.0 && clip.target_quantile < 1.0)) {
      throw ConfigError("engine.clip.target_quantile", "must lie in (0, 1)");
    }
    clip.learning_rate =
        get_number(c, cpath, "learning_rate", clip.learning_rate);
    if (!(clip.learning_rate > 0.0)) {
      throw ConfigError("engine.clip.learning_rate", "must be > 0");
    }
    if (c.contains("count_noise_std") && !c.at("count_noise_std").is_null()) {
      const double s = get_number(c, cpath, "count_noise_std", 0.0);
      if (!(s >= 0.0)) {
        throw ConfigError("engine.clip.count_noise_std", "must be >= 0");
      }
      clip.count_noise_std = s;
    }
  }
}

}  // namespace

bool Distribution::non_private() const {
  for (double f : fractions) {
    if (f != 0.0) return false;
  }
  return true;
}

std::optional<Distribution> preset_distribution(std::string_view name) {
  if (name == "strict") return Distribution{"strict", {1.0, 0.0, 0.0}};
  if (name == "jensen") return Distribution{"jensen", {0.54, 0.37, 0.09}};
  if (name == "acquisti") return Distribution{"acquisti", {0.34, 0.43, 0.23}};
  if (name == "relaxed") return Distribution{"relaxed", {0.0, 0.0, 1.0}};
  if (name == "nonprivate") return Distribution{"nonprivate", {0.0, 0.0, 0.0}};
  return std::nullopt;
}

std::vector<Distribution> default_distributions() {
  std::vector<Distribution> out;
  for (const char* n :
       {"strict", "jensen", "acquisti", "relaxed", "nonprivate"}) {
    out.push_back(*preset_distribution(n));
  }
  return out;
}

engine::Mode parse_mode(std::string_view name) {
  using engine::Mode;
  for (Mode m :
       {Mode::kIdpSample, Mode::kUniformDp, Mode::kScale, Mode::kNonPrivate}) {
    if (name == engine::mode_name(m)) return m;
  }
  throw ParameterError("unknown mode \"" + std::string(name) +
                       "\" (expected idp_sample, uniform_dp, scale, "
                       "non_private)");
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "",
                 {"dataset", "privacy", "engine", "seeds", "output_dir"});
  if (!j.contains("dataset")) throw ConfigError("dataset", "is required");
  if (!j.contains("privacy")) throw ConfigError("privacy", "is required");
  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(j.at("dataset"));
  cfg.privacy = parse_privacy(j.at("privacy"));
  if (j.contains("engine")) parse_engine(j.at("engine"), cfg);
  if (cfg.cohort > cfg.dataset.num_clients) {
    throw ConfigError("engine.cohort", "must not exceed dataset.num_clients");
  }
  if (j.contains("seeds")) {
    cfg.seeds = get(j, "", "seeds", std::vector<uint64_t>{});
    if (cfg.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  }
  if (j.contains("output_dir")) {
    cfg.output_dir = get(j, "", "output_dir", std::string());
  }
  const auto& s = cfg.dataset.synthetic;
  int64_t total = 0;
  for (int c = 0; c < s.num_classes; ++c) {
    total += s.class_counts.empty() ? s.samples_per_class : s.class_counts[c];
  }
  if (total < cfg.dataset.num_clients) {
    throw ConfigError("dataset.num_clients",
                      "exceeds the number of training examples");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace idpfl::harness
