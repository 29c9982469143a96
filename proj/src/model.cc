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

#include "idpfl/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "idpfl/errors.h"
#include "idpfl/kernels.h"

namespace idpfl::model {
namespace {

// Forward/backward workspace for one example.
struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[L] = logits
  std::vector<double> delta;
  std::vector<double> next_delta;
};

void forward(const Mlp& mlp, std::span<const double> params,
             std::span<const double> x, Workspace& ws) {
  const auto layers = mlp.layers();
  ws.acts.resize(layers.size() + 1);
  ws.acts[0].assign(x.begin(), x.end());
  for (size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& s = layers[l];
    const double* w = params.data() + s.weight_offset;
    const double* b = params.data() + s.bias_offset;
    const std::vector<double>& in = ws.acts[l];
    std::vector<double>& out = ws.acts[l + 1];
    out.resize(s.out);
    const bool hidden = l + 1 < layers.size();
    for (int o = 0; o < s.out; ++o) {
      const double* row = w + static_cast<size_t>(o) * s.in;
      double z = b[o];
      for (int i = 0; i < s.in; ++i) z += row[i] * in[i];
      out[o] = hidden ? std::max(z, 0.0) : z;
    }
  }
}

// Softmax in place; returns -log p[label].
double softmax_xent(std::vector<double>& logits, int label) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return -std::log(std::max(logits[label], 1e-300));
}

// Accumulates d loss / d params into grad for the example in `ws`; the
// logits must already hold softmax probabilities.
void backward(const Mlp& mlp, std::span<const double> params, int label,
              Workspace& ws, std::span<double> grad) {
  const auto layers = mlp.layers();
  const size_t num_layers = layers.size();
  ws.delta = ws.acts[num_layers];
  ws.delta[label] -= 1.0;
  for (size_t l = num_layers; l-- > 0;) {
    const LayerShape& s = layers[l];
    const std::vector<double>& in = ws.acts[l];
    double* gw = grad.data() + s.weight_offset;
    double* gb = grad.data() + s.bias_offset;
    for (int o = 0; o < s.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* row = gw + static_cast<size_t>(o) * s.in;
      for (int i = 0; i < s.in; ++i) row[i] += d * in[i];
    }
    if (l == 0) break;
    const double* w = params.data() + s.weight_offset;
    ws.next_delta.assign(s.in, 0.0);
    for (int o = 0; o < s.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      const double* row = w + static_cast<size_t>(o) * s.in;
      for (int i = 0; i < s.in; ++i) ws.next_delta[i] += d * row[i];
    }
    // Rectifier derivative, taken as 0 at the kink.
    for (int i = 0; i < s.in; ++i) {
      if (in[i] <= 0.0) ws.next_delta[i] = 0.0;
    }
    std::swap(ws.delta, ws.next_delta);
  }
}

void check_data(const Mlp& mlp, std::span<const double> params,
                const Dataset& data) {
  if (params.size() != mlp.num_params()) {
    throw ParameterError("parameter vector length does not match the model");
  }
  if (data.dim != mlp.config().input_dim) {
    throw ParameterError("feature dimension " + std::to_string(data.dim) +
                         " does not match model input " +
                         std::to_string(mlp.config().input_dim));
  }
}

}  // namespace

Mlp::Mlp(ModelConfig config) : config_(std::move(config)) {
  if (config_.input_dim < 1) throw ParameterError("input_dim must be positive");
  if (config_.num_classes < 2) throw ParameterError("need at least 2 classes");
  int in = config_.input_dim;
  std::vector<int> outs = config_.hidden_dims;
  outs.push_back(config_.num_classes);
  for (int out : outs) {
    if (out < 1) throw ParameterError("layer widths must be positive");
    LayerShape s;
    s.in = in;
    s.out = out;
    s.weight_offset = num_params_;
    num_params_ += static_cast<size_t>(in) * out;
    s.bias_offset = num_params_;
    num_params_ += out;
    layers_.push_back(s);
    in = out;
  }
}

std::vector<LayerParams> Mlp::unpack(std::span<const double> params) const {
  if (params.size() != num_params_) {
    throw ParameterError("parameter vector length does not match the model");
  }
  std::vector<LayerParams> out(layers_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& s = layers_[l];
    const auto w =
        params.subspan(s.weight_offset, static_cast<size_t>(s.in) * s.out);
    const auto b = params.subspan(s.bias_offset, s.out);
    out[l].weights.assign(w.begin(), w.end());
    out[l].biases.assign(b.begin(), b.end());
  }
  return out;
}

ParamVector Mlp::pack(const std::vector<LayerParams>& layers) const {
  if (layers.size() != layers_.size()) {
    throw ParameterError("layer count does not match the model");
  }
  ParamVector out(num_params_);
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& s = layers_[l];
    if (layers[l].weights.size() != static_cast<size_t>(s.in) * s.out ||
        layers[l].biases.size() != static_cast<size_t>(s.out)) {
      throw ParameterError("layer block has the wrong shape");
    }
    std::copy(layers[l].weights.begin(), layers[l].weights.end(),
              out.begin() + s.weight_offset);
    std::copy(layers[l].biases.begin(), layers[l].biases.end(),
              out.begin() + s.bias_offset);
  }
  return out;
}

void Mlp::logits(std::span<const double> params, std::span<const double> x,
                 std::vector<double>& out) const {
  Workspace ws;
  forward(*this, params, x, ws);
  out = std::move(ws.acts.back());
}

ParamVector init_params(const Mlp& mlp, uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamVector params(mlp.num_params(), 0.0);
  for (const LayerShape& s : mlp.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const size_t n = static_cast<size_t>(s.in) * s.out;
    for (size_t k = 0; k < n; ++k) params[s.weight_offset + k] = dist(rng);
  }
  return params;
}

LossAndGrad loss_and_grad(const Mlp& mlp, std::span<const double> params,
                          const Dataset& data, std::span<const size_t> rows) {
  check_data(mlp, params, data);
  if (rows.empty()) throw ParameterError("empty batch");
  LossAndGrad out;
  out.grad.assign(mlp.num_params(), 0.0);
  Workspace ws;
  double loss_sum = 0.0;
  for (size_t r : rows) {
    forward(mlp, params, data.row(r), ws);
    loss_sum += softmax_xent(ws.acts.back(), data.labels[r]);
    backward(mlp, params, data.labels[r], ws, out.grad);
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  out.loss = loss_sum * inv_n;
  for (double& g : out.grad) g *= inv_n;
  return out;
}

LossAndGrad loss_and_grad(const Mlp& mlp, std::span<const double> params,
                          const Dataset& data) {
  std::vector<size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), size_t{0});
  return loss_and_grad(mlp, params, data, rows);
}

LocalResult local_sgd(const Mlp& mlp, std::span<const double> params,
                      const Dataset& shard, const SgdConfig& sgd,
                      uint64_t seed) {
  if (shard.empty()) throw ParameterError("client shard is empty");
  if (sgd.batch_size < 1 || sgd.epochs < 0) {
    throw ParameterError("batch_size must be >= 1 and epochs >= 0");
  }
  std::mt19937_64 rng(seed);
  ParamVector theta(params.begin(), params.end());
  std::vector<size_t> order(shard.size());
  std::iota(order.begin(), order.end(), size_t{0});
  double loss_sum = 0.0;
  int steps = 0;
  const size_t batch = static_cast<size_t>(sgd.batch_size);
  for (int epoch = 0; epoch < sgd.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t len = std::min(batch, order.size() - start);
      const std::span<const size_t> rows(order.data() + start, len);
      LossAndGrad lg = loss_and_grad(mlp, theta, shard, rows);
      for (size_t k = 0; k < theta.size(); ++k) {
        theta[k] -= sgd.learning_rate * lg.grad[k];
      }
      loss_sum += lg.loss;
      ++steps;
    }
  }
  LocalResult out;
  out.delta.resize(theta.size());
  for (size_t k = 0; k < theta.size(); ++k) out.delta[k] = theta[k] - params[k];
  out.mean_loss = steps > 0 ? loss_sum / steps : 0.0;
  return out;
}

EvalResult evaluate(const Mlp& mlp, std::span<const double> params,
                    const Dataset& data, bool parallel) {
  check_data(mlp, params, data);
  if (data.empty()) throw ParameterError("cannot evaluate on an empty dataset");
  std::vector<double> losses(data.size());
  std::vector<uint8_t> correct(data.size());
  if (parallel) {
    kernels::score_examples_omp(mlp, params, data, losses, correct);
  } else {
    kernels::score_examples_serial(mlp, params, data, losses, correct);
  }
  // Serial reduction keeps the result independent of thread count.
  double loss_sum = 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    loss_sum += losses[i];
    hits += correct[i];
  }
  const double n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(hits) / n};
}

double example_loss(const Mlp& mlp, std::span<const double> params,
                    std::span<const double> x, int label, bool& correct) {
  thread_local Workspace ws;
  forward(mlp, params, x, ws);
  std::vector<double>& z = ws.acts.back();
  const auto argmax = std::max_element(z.begin(), z.end()) - z.begin();
  correct = argmax == label;
  return softmax_xent(z, label);
}

}  // namespace idpfl::model
