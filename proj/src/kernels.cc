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

#include "idpfl/kernels.h"

#include <algorithm>

#include "idpfl/errors.h"

namespace idpfl::kernels {
namespace {

void check_sum_shapes(std::span<const model::ParamVector> updates,
                      std::span<double> out) {
  for (const auto& u : updates) {
    if (u.size() != out.size()) {
      throw ParameterError("update length does not match the accumulator");
    }
  }
}

void check_score_shapes(const Dataset& data, std::span<double> losses,
                        std::span<uint8_t> correct) {
  if (losses.size() != data.size() || correct.size() != data.size()) {
    throw ParameterError("score buffers must match the dataset size");
  }
}

}  // namespace

void sum_updates_serial(std::span<const model::ParamVector> updates,
                        std::span<double> out) {
  check_sum_shapes(updates, out);
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& u : updates) {
    for (size_t j = 0; j < out.size(); ++j) out[j] += u[j];
  }
}

void sum_updates_omp(std::span<const model::ParamVector> updates,
                     std::span<double> out) {
  check_sum_shapes(updates, out);
  // Threads own disjoint coordinate blocks; inside a block the loop order
  // matches the serial kernel.
  constexpr size_t kBlock = 2048;
  const size_t dim = out.size();
  const long long blocks = static_cast<long long>((dim + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < blocks; ++b) {
    const size_t lo = static_cast<size_t>(b) * kBlock;
    const size_t hi = std::min(dim, lo + kBlock);
    std::fill(out.begin() + lo, out.begin() + hi, 0.0);
    for (const auto& u : updates) {
      for (size_t j = lo; j < hi; ++j) out[j] += u[j];
    }
  }
}

void score_examples_serial(const model::Mlp& mlp,
                           std::span<const double> params, const Dataset& data,
                           std::span<double> losses,
                           std::span<uint8_t> correct) {
  check_score_shapes(data, losses, correct);
  for (size_t i = 0; i < data.size(); ++i) {
    bool hit = false;
    losses[i] =
        model::example_loss(mlp, params, data.row(i), data.labels[i], hit);
    correct[i] = hit ? 1 : 0;
  }
}

void score_examples_omp(const model::Mlp& mlp, std::span<const double> params,
                        const Dataset& data, std::span<double> losses,
                        std::span<uint8_t> correct) {
  check_score_shapes(data, losses, correct);
  const long long n = static_cast<long long>(data.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    bool hit = false;
    losses[i] =
        model::example_loss(mlp, params, data.row(i), data.labels[i], hit);
    correct[i] = hit ? 1 : 0;
  }
}

}  // namespace idpfl::kernels
