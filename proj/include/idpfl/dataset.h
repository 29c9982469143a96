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

#ifndef IDPFL_DATASET_H_
#define IDPFL_DATASET_H_

#include <cstddef>
#include <span>
#include <vector>

namespace idpfl {

// Dense labelled examples, row-major features.
struct Dataset {
  int dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // size() * dim
  std::vector<int> labels;

  size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(size_t i) const {
    return {features.data() + i * static_cast<size_t>(dim),
            static_cast<size_t>(dim)};
  }
  void push_back(std::span<const double> x, int label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }
};

// Copies the selected rows of `src` into a new dataset.
inline Dataset subset(const Dataset& src, std::span<const size_t> rows) {
  Dataset out;
  out.dim = src.dim;
  out.num_classes = src.num_classes;
  out.features.reserve(rows.size() * static_cast<size_t>(src.dim));
  out.labels.reserve(rows.size());
  for (size_t r : rows) out.push_back(src.row(r), src.labels[r]);
  return out;
}

}  // namespace idpfl

#endif  // IDPFL_DATASET_H_
