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

#include "idpfl/accountant.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "idpfl/errors.h"

namespace idpfl::accountant {
namespace {

constexpr int kCachedMaxOrder = 256;

// log C(n, k) for n <= kCachedMaxOrder, built once.
const std::vector<std::vector<double>>& log_binomial_table() {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> t(kCachedMaxOrder + 1);
    for (int n = 0; n <= kCachedMaxOrder; ++n) {
      t[n].resize(n + 1);
      for (int k = 0; k <= n; ++k) {
        t[n][k] = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0);
      }
    }
    return t;
  }();
  return table;
}

double log_binomial(int n, int k) {
  if (n <= kCachedMaxOrder) return log_binomial_table()[n][k];
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void validate_orders(std::span<const double> orders) {
  if (orders.empty()) throw ParameterError("order grid is empty");
  double prev = 1.0;
  for (double a : orders) {
    if (!(a >= 2.0) || a != std::floor(a) || !std::isfinite(a)) {
      throw ParameterError("Renyi order must be an integer >= 2, got " +
                           std::to_string(a));
    }
    if (a <= prev)
      throw ParameterError("Renyi orders must be strictly increasing");
    prev = a;
  }
}

// log A_alpha = log sum_i C(a,i) q^i (1-q)^(a-i) exp((i^2 - i) / (2 s^2)).
double log_a_integer(double q, double sigma, int alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double max_term = -kInfinity;
  // Two passes: find the max, then accumulate. Avoids storing the terms.
  for (int i = 0; i <= alpha; ++i) {
    const double t = log_binomial(alpha, i) + i * log_q +
                     (alpha - i) * log_1mq +
                     (static_cast<double>(i) * i - i) * inv_two_var;
    max_term = std::max(max_term, t);
  }
  double sum = 0.0;
  for (int i = 0; i <= alpha; ++i) {
    const double t = log_binomial(alpha, i) + i * log_q +
                     (alpha - i) * log_1mq +
                     (static_cast<double>(i) * i - i) * inv_two_var;
    sum += std::exp(t - max_term);
  }
  return max_term + std::log(sum);
}

void validate_mechanism(double q, double sigma) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ParameterError("sampling probability must be in [0, 1], got " +
                         std::to_string(q));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("noise multiplier must be positive, got " +
                         std::to_string(sigma));
  }
}

void validate_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("delta must be in (0, 1)");
  }
}

}  // namespace

const std::vector<double>& default_orders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o;
    for (int a = 2; a <= 64; ++a) o.push_back(a);
    o.push_back(128);
    o.push_back(256);
    return o;
  }();
  return orders;
}

RdpCurve rdp_subsampled_gaussian(double q, double sigma,
                                 std::span<const double> orders) {
  validate_mechanism(q, sigma);
  validate_orders(orders);
  RdpCurve curve;
  curve.orders.assign(orders.begin(), orders.end());
  curve.values.resize(orders.size());
  for (size_t k = 0; k < orders.size(); ++k) {
    const double alpha = orders[k];
    if (q == 0.0) {
      curve.values[k] = 0.0;
    } else if (q == 1.0) {
      curve.values[k] = alpha / (2.0 * sigma * sigma);
    } else {
      const double v =
          log_a_integer(q, sigma, static_cast<int>(alpha)) / (alpha - 1.0);
      // log A can round to a tiny negative value when q is minute.
      curve.values[k] = std::max(v, 0.0);
    }
  }
  return curve;
}

RdpCurve rdp_subsampled_gaussian(double q, double sigma) {
  return rdp_subsampled_gaussian(q, sigma, default_orders());
}

EpsilonResult epsilon_from_rdp(const RdpCurve& curve, int64_t steps,
                               double delta) {
  if (curve.orders.empty() || curve.orders.size() != curve.values.size()) {
    throw ParameterError("RDP curve is empty or malformed");
  }
  if (steps < 1) throw ParameterError("steps must be >= 1");
  validate_delta(delta);
  const double log_inv_delta = -std::log(delta);
  EpsilonResult best{kInfinity, curve.orders.back()};
  for (size_t k = 0; k < curve.orders.size(); ++k) {
    const double alpha = curve.orders[k];
    const double eps = static_cast<double>(steps) * curve.values[k] +
                       log_inv_delta / (alpha - 1.0);
    if (eps < best.epsilon) best = {eps, alpha};
  }
  return best;
}

double compute_epsilon(const MechanismParams& params, double delta) {
  return epsilon_from_rdp(rdp_subsampled_gaussian(params.q, params.sigma),
                          params.steps, delta)
      .epsilon;
}

double get_noise(const PrivacyBudget& budget, double q, int64_t steps) {
  if (!std::isfinite(budget.epsilon) || !(budget.epsilon > 0.0)) {
    throw ParameterError("get_noise needs a finite positive epsilon");
  }
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("q must be in (0, 1]");
  validate_delta(budget.delta);
  auto eps_at = [&](double sigma) {
    return compute_epsilon({q, sigma, steps}, budget.delta);
  };
  if (eps_at(kSigmaMax) > budget.epsilon) {
    throw InfeasibleBudgetError("epsilon " + std::to_string(budget.epsilon) +
                                " is unreachable with noise multiplier <= " +
                                std::to_string(kSigmaMax));
  }
  if (eps_at(kSigmaMin) <= budget.epsilon) return kSigmaMin;
  // Invariant: eps(lo) > target >= eps(hi).
  double lo = kSigmaMin;
  double hi = kSigmaMax;
  for (int it = 0; it < kMaxBisectionIters && hi / lo - 1.0 > kSigmaRelTol;
       ++it) {
    const double mid = std::sqrt(lo * hi);
    if (eps_at(mid) <= budget.epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double get_sample_rate(const PrivacyBudget& budget, double sigma,
                       int64_t steps) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  if (!(budget.epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (std::isinf(budget.epsilon)) return 1.0;
  validate_delta(budget.delta);
  auto eps_at = [&](double q) {
    return compute_epsilon({q, sigma, steps}, budget.delta);
  };
  if (eps_at(1.0) <= budget.epsilon) return 1.0;
  // Invariant: eps(lo) <= target < eps(hi). q = 0 contributes only the
  // log(1/delta)/(alpha-1) term, which may itself exceed a tiny budget; the
  // search then collapses to 0.
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxBisectionIters && hi - lo > kRateAbsTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) <= budget.epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace idpfl::accountant
