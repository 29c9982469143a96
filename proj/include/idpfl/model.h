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

#ifndef IDPFL_MODEL_H_
#define IDPFL_MODEL_H_

// A small multi-layer perceptron with rectifier hidden units and a softmax
// cross-entropy head, operating on flat parameter vectors.
//
// Flat layout, layer by layer: weights (out x in, row-major) then biases.

#include <cstdint>
#include <span>
#include <vector>

#include "idpfl/dataset.h"

namespace idpfl::model {

using ParamVector = std::vector<double>;

enum class Activation { kRelu };

struct ModelConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims = {64};
  int num_classes = 2;
  Activation activation = Activation::kRelu;
};

struct LayerShape {
  int in = 0;
  int out = 0;
  size_t weight_offset = 0;
  size_t bias_offset = 0;
};

// Per-layer parameter blocks, the unpacked form of a ParamVector.
struct LayerParams {
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;
};

class Mlp {
 public:
  // Throws ParameterError for non-positive dims or fewer than two classes.
  explicit Mlp(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::span<const LayerShape> layers() const { return layers_; }
  size_t num_params() const { return num_params_; }

  std::vector<LayerParams> unpack(std::span<const double> params) const;
  ParamVector pack(const std::vector<LayerParams>& layers) const;

  // Class logits for one example; `out` is resized to num_classes.
  void logits(std::span<const double> params, std::span<const double> x,
              std::vector<double>& out) const;

 private:
  ModelConfig config_;
  std::vector<LayerShape> layers_;
  size_t num_params_ = 0;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Bit-identical
// for a given (config, seed).
ParamVector init_params(const Mlp& mlp, uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Mean cross-entropy over `rows` of `data` and its gradient. Throws
// ParameterError on an empty batch or feature-dimension mismatch.
LossAndGrad loss_and_grad(const Mlp& mlp, std::span<const double> params,
                          const Dataset& data, std::span<const size_t> rows);
LossAndGrad loss_and_grad(const Mlp& mlp, std::span<const double> params,
                          const Dataset& data);

struct SgdConfig {
  int epochs = 2;
  int batch_size = 32;
  double learning_rate = 0.05;
};

struct LocalResult {
  ParamVector delta;       // final - initial parameters
  double mean_loss = 0.0;  // mean mini-batch loss over all steps
};

// Mini-batch SGD with a seeded shuffle each epoch.
LocalResult local_sgd(const Mlp& mlp, std::span<const double> params,
                      const Dataset& shard, const SgdConfig& sgd,
                      uint64_t seed);

// Cross-entropy of one example; `correct` reports whether the arg-max class
// matches the label.
double example_loss(const Mlp& mlp, std::span<const double> params,
                    std::span<const double> x, int label, bool& correct);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Full-pass mean loss and accuracy. Throws ParameterError on empty data.
EvalResult evaluate(const Mlp& mlp, std::span<const double> params,
                    const Dataset& data, bool parallel = true);

}  // namespace idpfl::model

#endif  // IDPFL_MODEL_H_
