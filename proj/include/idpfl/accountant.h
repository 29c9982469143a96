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

#ifndef IDPFL_ACCOUNTANT_H_
#define IDPFL_ACCOUNTANT_H_

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// One step of the mechanism samples each participant independently with
// probability q and releases a sum with Gaussian noise of standard deviation
// sigma times the sensitivity. RDP composes additively over steps and is then
// converted to (epsilon, delta)-DP with
//
//   epsilon = min_alpha [ steps * rdp(alpha) + log(1/delta) / (alpha - 1) ].
//
// All functions are pure and safe to call concurrently.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace idpfl::accountant {

inline constexpr double kDefaultDelta = 1e-5;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Bisection brackets and tolerances for the inverse problems.
inline constexpr double kSigmaMin = 1e-2;
inline constexpr double kSigmaMax = 1e3;
inline constexpr double kSigmaRelTol = 1e-4;
inline constexpr double kRateAbsTol = 1e-6;
inline constexpr int kMaxBisectionIters = 200;

struct MechanismParams {
  double q = 0.0;      // sampling probability in [0, 1]
  double sigma = 1.0;  // noise std / sensitivity
  int64_t steps = 1;   // number of composed rounds
};

struct PrivacyBudget {
  double epsilon = 1.0;  // may be +inf (non-private)
  double delta = kDefaultDelta;
};

// Per-order RDP of one step of a mechanism. orders[i] > 1, strictly
// increasing; values[i] >= 0.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

struct EpsilonResult {
  double epsilon = 0.0;
  double order = 0.0;  // the minimising Renyi order
};

// {2, 3, ..., 64, 128, 256}.
const std::vector<double>& default_orders();

// RDP of a single step of the subsampled Gaussian at integer orders, using the
// binomial expansion of E[(mu/mu0)^alpha] evaluated with log-sum-exp.
// Throws ParameterError for q outside [0, 1], sigma <= 0, or an order that is
// not an integer >= 2 (or the orders are not strictly increasing).
RdpCurve rdp_subsampled_gaussian(double q, double sigma,
                                 std::span<const double> orders);
RdpCurve rdp_subsampled_gaussian(double q, double sigma);

// Conversion of `steps` composed copies of `curve` to (epsilon, delta)-DP.
EpsilonResult epsilon_from_rdp(const RdpCurve& curve, int64_t steps,
                               double delta);

// Composed epsilon of `params` on the default order grid.
double compute_epsilon(const MechanismParams& params, double delta);

// Smallest sigma in [kSigmaMin, kSigmaMax] whose composed epsilon at (q, steps)
// is within budget.epsilon. Throws InfeasibleBudgetError when even kSigmaMax
// exceeds the budget; ParameterError when the budget is not finite or q is not
// in (0, 1].
double get_noise(const PrivacyBudget& budget, double q, int64_t steps);

// Largest q in [0, 1] whose composed epsilon at (sigma, steps) is within
// budget.epsilon. Exactly 1 when q = 1 already satisfies the budget, which
// includes budget.epsilon = +inf.
double get_sample_rate(const PrivacyBudget& budget, double sigma,
                       int64_t steps);

}  // namespace idpfl::accountant

#endif  // IDPFL_ACCOUNTANT_H_
