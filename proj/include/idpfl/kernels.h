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

#ifndef IDPFL_KERNELS_H_
#define IDPFL_KERNELS_H_

// Data-parallel inner loops of a training round. Each kernel comes as a
// serial reference and an OpenMP version; the two produce bit-identical
// results because every output element is computed by exactly one thread in
// a fixed order.

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#include "idpfl/dataset.h"
#include "idpfl/model.h"

namespace idpfl::kernels {

// out[j] = sum_k updates[k][j], accumulated in ascending k.
void sum_updates_serial(std::span<const model::ParamVector> updates,
                        std::span<double> out);
void sum_updates_omp(std::span<const model::ParamVector> updates,
                     std::span<double> out);

// Per-example loss and correctness for every row of `data`.
void score_examples_serial(const model::Mlp& mlp,
                           std::span<const double> params, const Dataset& data,
                           std::span<double> losses,
                           std::span<uint8_t> correct);
void score_examples_omp(const model::Mlp& mlp, std::span<const double> params,
                        const Dataset& data, std::span<double> losses,
                        std::span<uint8_t> correct);

// Calls fn(k) for k in [0, n). fn must only write state owned by slot k.
template <typename Fn>
void for_each_index_serial(size_t n, Fn&& fn) {
  for (size_t k = 0; k < n; ++k) fn(k);
}

// The first exception thrown by any fn(k) is rethrown after the loop.
template <typename Fn>
void for_each_index_omp(size_t n, Fn&& fn) {
  std::exception_ptr error;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < count; ++k) {
    try {
      fn(static_cast<size_t>(k));
    } catch (...) {
#pragma omp critical(idpfl_for_each_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace idpfl::kernels

#endif  // IDPFL_KERNELS_H_
