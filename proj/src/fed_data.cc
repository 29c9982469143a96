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

#include "idpfl/fed_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "idpfl/errors.h"
#include "json.hpp"

namespace idpfl::data {
namespace {

std::vector<double> class_means(const SyntheticSpec& spec) {
  const int k = spec.num_classes;
  const int d = spec.dim;
  const double radius = spec.class_separation / std::sqrt(2.0);
  std::vector<double> means(static_cast<size_t>(k) * d, 0.0);
  if (k <= d) {
    for (int c = 0; c < k; ++c) means[static_cast<size_t>(c) * d + c] = radius;
    return means;
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < k; ++c) {
    double norm2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = normal(rng);
      means[static_cast<size_t>(c) * d + j] = v;
      norm2 += v * v;
    }
    const double scale = radius / std::sqrt(norm2);
    for (int j = 0; j < d; ++j) means[static_cast<size_t>(c) * d + j] *= scale;
  }
  return means;
}

// Sizes for `n` items over `parts` that differ by at most one.
std::vector<size_t> balanced_sizes(size_t n, size_t parts) {
  std::vector<size_t> sizes(parts, n / parts);
  for (size_t i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

void check_clients(const Dataset& train, int num_clients) {
  if (num_clients < 1) throw ParameterError("num_clients must be positive");
  if (static_cast<size_t>(num_clients) > train.size()) {
    throw ParameterError("more clients than training examples");
  }
}

FederatedDataset from_rows(const Dataset& train,
                           const std::vector<std::vector<size_t>>& rows) {
  FederatedDataset fed;
  fed.num_classes = train.num_classes;
  fed.shards.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    fed.shards[i].client_id = static_cast<int>(i);
    fed.shards[i].examples = subset(train, rows[i]);
  }
  return fed;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec, uint64_t seed) {
  if (spec.num_classes < 2 || spec.dim < 1) {
    throw ParameterError("need num_classes >= 2 and dim >= 1");
  }
  if (spec.class_separation < 0.0) {
    throw ParameterError("class_separation must be >= 0");
  }
  std::vector<int> counts = spec.class_counts;
  if (counts.empty()) counts.assign(spec.num_classes, spec.samples_per_class);
  if (counts.size() != static_cast<size_t>(spec.num_classes)) {
    throw ParameterError("class_counts must have one entry per class");
  }
  for (int c : counts) {
    if (c < 1) throw ParameterError("class sample counts must be positive");
  }
  const std::vector<double> means = class_means(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  out.dim = spec.dim;
  out.num_classes = spec.num_classes;
  std::vector<double> x(spec.dim);
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int n = 0; n < counts[c]; ++n) {
      for (int j = 0; j < spec.dim; ++j) {
        x[j] = means[static_cast<size_t>(c) * spec.dim + j] + normal(rng);
      }
      out.push_back(x, c);
    }
  }
  return out;
}

FederatedDataset partition_iid(const Dataset& train, int num_clients,
                               uint64_t seed) {
  check_clients(train, num_clients);
  std::vector<size_t> perm(train.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto sizes = balanced_sizes(train.size(), num_clients);
  std::vector<std::vector<size_t>> rows(num_clients);
  size_t pos = 0;
  for (int i = 0; i < num_clients; ++i) {
    rows[i].assign(perm.begin() + pos, perm.begin() + pos + sizes[i]);
    pos += sizes[i];
  }
  return from_rows(train, rows);
}

FederatedDataset partition_label_skew(const Dataset& train, int num_clients,
                                      double alpha, uint64_t seed) {
  check_clients(train, num_clients);
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  const int k = train.num_classes;
  std::mt19937_64 rng(seed);

  // Per-class pools of unassigned rows, each shuffled.
  std::vector<std::vector<size_t>> pools(k);
  for (size_t r = 0; r < train.size(); ++r) pools[train.labels[r]].push_back(r);
  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

  std::vector<int> client_order(num_clients);
  std::iota(client_order.begin(), client_order.end(), 0);
  std::shuffle(client_order.begin(), client_order.end(), rng);
  const auto sizes = balanced_sizes(train.size(), num_clients);

  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<size_t>> rows(num_clients);
  std::vector<double> props(k);
  for (size_t slot = 0; slot < client_order.size(); ++slot) {
    const int client = client_order[slot];
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += (props[c] = gamma(rng));
    if (!(total > 0.0)) {
      // Every gamma draw underflowed; fall back to a single random class.
      std::fill(props.begin(), props.end(), 0.0);
      props[std::uniform_int_distribution<int>(0, k - 1)(rng)] = 1.0;
    }
    for (size_t n = 0; n < sizes[slot]; ++n) {
      double mass = 0.0;
      for (int c = 0; c < k; ++c) {
        if (!pools[c].empty()) mass += props[c];
      }
      int pick = -1;
      if (mass > 0.0) {
        double u = unif(rng) * mass;
        for (int c = 0; c < k; ++c) {
          if (pools[c].empty()) continue;
          pick = c;
          u -= props[c];
          if (u < 0.0) break;
        }
      } else {
        // Preferred classes are exhausted: take from the largest pool.
        pick =
            static_cast<int>(std::max_element(pools.begin(), pools.end(),
                                              [](const auto& a, const auto& b) {
                                                return a.size() < b.size();
                                              }) -
                             pools.begin());
      }
      rows[client].push_back(pools[pick].back());
      pools[pick].pop_back();
    }
  }
  return from_rows(train, rows);
}

std::vector<int> group_sizes(std::span<const double> fractions,
                             int num_clients) {
  if (fractions.empty()) throw ParameterError("no privacy-group fractions");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ParameterError("fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ParameterError("fractions must sum to 1");
  }
  const int positive = static_cast<int>(std::count_if(
      fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
  if (positive > num_clients) {
    throw ParameterError("more privacy groups than clients");
  }
  const size_t p = fractions.size();
  std::vector<int> sizes(p);
  std::vector<double> remainder(p);
  int assigned = 0;
  for (size_t i = 0; i < p; ++i) {
    const double exact = fractions[i] * num_clients;
    sizes[i] = static_cast<int>(std::floor(exact));
    remainder[i] = exact - sizes[i];
    assigned += sizes[i];
  }
  std::vector<size_t> by_remainder(p);
  std::iota(by_remainder.begin(), by_remainder.end(), size_t{0});
  std::stable_sort(
      by_remainder.begin(), by_remainder.end(),
      [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
  for (size_t i = 0; assigned < num_clients; ++i) {
    ++sizes[by_remainder[i % p]];
    ++assigned;
  }
  for (size_t i = 0; i < p; ++i) {
    if (fractions[i] > 0.0 && sizes[i] == 0) {
      const auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      sizes[i] = 1;
    }
  }
  return sizes;
}

void assign_privacy_groups(std::vector<ClientShard>& shards,
                           std::span<const double> fractions, uint64_t seed) {
  const std::vector<int> sizes =
      group_sizes(fractions, static_cast<int>(shards.size()));
  std::vector<size_t> order(shards.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  size_t pos = 0;
  for (size_t g = 0; g < sizes.size(); ++g) {
    for (int n = 0; n < sizes[g]; ++n) {
      shards[order[pos++]].group_index = static_cast<int>(g);
    }
  }
}

void write_jsonl(const Dataset& data, std::ostream& out) {
  out << nlohmann::json{{"dim", data.dim}, {"num_classes", data.num_classes}}
             .dump()
      << '\n';
  for (size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    nlohmann::json line{{"x", std::vector<double>(x.begin(), x.end())},
                        {"y", data.labels[i]}};
    out << line.dump() << '\n';
  }
}

Dataset read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParameterError("dataset file is empty");
  Dataset data;
  try {
    const auto header = nlohmann::json::parse(line);
    data.dim = header.at("dim").get<int>();
    data.num_classes = header.at("num_classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad dataset header: ") + e.what());
  }
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      const auto x = obj.at("x").get<std::vector<double>>();
      const int y = obj.at("y").get<int>();
      if (x.size() != static_cast<size_t>(data.dim) || y < 0 ||
          y >= data.num_classes) {
        throw ParameterError("shape or label out of range");
      }
      data.push_back(x, y);
    } catch (const std::exception& e) {
      throw ParameterError("dataset line " + std::to_string(line_no) + ": " +
                           e.what());
    }
  }
  return data;
}

void write_jsonl_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out.precision(17);
  write_jsonl(data, out);
}

Dataset read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path);
  return read_jsonl(in);
}

}  // namespace idpfl::data
