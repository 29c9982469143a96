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

#ifndef IDPFL_FED_DATA_H_
#define IDPFL_FED_DATA_H_

// Synthetic classification data and its distribution across clients.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "idpfl/dataset.h"

namespace idpfl::data {

struct SyntheticSpec {
  int num_classes = 10;
  int dim = 8;
  int samples_per_class = 100;
  // Optional per-class counts; overrides samples_per_class when non-empty.
  std::vector<int> class_counts;
  // Pairwise distance between class means.
  double class_separation = 3.0;
};

// Gaussian clusters with unit covariance. For num_classes <= dim the means are
// (separation / sqrt 2) * e_c, so every pair sits exactly `separation` apart;
// otherwise they are random directions of the same radius. Means depend only
// on the spec, so datasets drawn with different seeds share them.
Dataset make_synthetic(const SyntheticSpec& spec, uint64_t seed);

struct ClientShard {
  int client_id = 0;
  Dataset examples;
  int group_index = -1;
  double sampling_rate = 0.0;
};

struct FederatedDataset {
  std::vector<ClientShard> shards;
  Dataset test_set;
  int num_classes = 0;
};

// Uniformly random disjoint split; shard sizes differ by at most one.
FederatedDataset partition_iid(const Dataset& train, int num_clients,
                               uint64_t seed);

// Label-skewed split. Shard sizes are balanced as in partition_iid; each
// client draws class proportions from a symmetric Dirichlet(alpha) and fills
// its slots by sampling classes from those proportions among the examples
// still unassigned. Clients are served in a seeded random order.
FederatedDataset partition_label_skew(const Dataset& train, int num_clients,
                                      double alpha, uint64_t seed);

// Integer group sizes for `fractions` of `num_clients` by largest remainder;
// any group with a positive fraction gets at least one client, taken from the
// currently largest group.
std::vector<int> group_sizes(std::span<const double> fractions,
                             int num_clients);

// Shuffles client ids with `seed` and assigns consecutive blocks of the
// shuffled order to groups 0, 1, ... with group_sizes(). Only the client
// count and seed influence the assignment.
void assign_privacy_groups(std::vector<ClientShard>& shards,
                           std::span<const double> fractions, uint64_t seed);

// JSON-lines: one {"x": [...], "y": label} object per example, preceded by a
// header line {"dim": d, "num_classes": k}.
void write_jsonl(const Dataset& data, std::ostream& out);
Dataset read_jsonl(std::istream& in);
void write_jsonl_file(const Dataset& data, const std::string& path);
Dataset read_jsonl_file(const std::string& path);

}  // namespace idpfl::data

#endif  // IDPFL_FED_DATA_H_
