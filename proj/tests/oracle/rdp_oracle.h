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

#ifndef IDPFL_TESTS_ORACLE_RDP_ORACLE_H_
#define IDPFL_TESTS_ORACLE_RDP_ORACLE_H_

// Test-only reference accountant. Evaluates the integer-order binomial sum
// for the subsampled Gaussian directly (no log-space tricks) in 100-digit
// floating point, plus a quadrature route over the defining integral.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <vector>

namespace idpfl::oracle {

using Real = boost::multiprecision::cpp_bin_float_100;

// A_alpha = sum_i C(alpha, i) q^i (1-q)^(alpha-i) exp((i^2 - i) / (2 sigma^2)).
inline Real moment(double q, double sigma, int alpha) {
  const Real rq(q);
  const Real one_minus_q = Real(1) - rq;
  const Real two_var = Real(2) * Real(sigma) * Real(sigma);
  Real binom = 1;
  Real sum = 0;
  for (int i = 0; i <= alpha; ++i) {
    if (i > 0) binom = binom * Real(alpha - i + 1) / Real(i);
    sum += binom * pow(rq, i) * pow(one_minus_q, alpha - i) *
           exp(Real(i * i - i) / two_var);
  }
  return sum;
}

inline double rdp(double q, double sigma, int alpha) {
  return static_cast<double>(log(moment(q, sigma, alpha)) / Real(alpha - 1));
}

inline double epsilon(double q, double sigma, long steps, double delta,
                      const std::vector<int>& orders) {
  Real best = -1;
  for (int a : orders) {
    const Real e = Real(steps) * log(moment(q, sigma, a)) / Real(a - 1) -
                   log(Real(delta)) / Real(a - 1);
    if (best < 0 || e < best) best = e;
  }
  return static_cast<double>(best);
}

inline std::vector<int> default_orders() {
  std::vector<int> o;
  for (int a = 2; a <= 64; ++a) o.push_back(a);
  o.push_back(128);
  o.push_back(256);
  return o;
}

// E_{z ~ N(0, s^2)} [((1-q) + q exp((2z - 1) / (2 s^2)))^alpha] by composite
// Simpson over +-40 s; valid for small alpha where the integrand is tame.
inline double moment_quadrature(double q, double sigma, double alpha) {
  const double lo = -40.0 * sigma;
  const double hi = 40.0 * sigma + 1.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  auto f = [&](double z) {
    const double ratio =
        (1.0 - q) + q * std::exp((2.0 * z - 1.0) / (2.0 * sigma * sigma));
    return norm * std::exp(-z * z / (2.0 * sigma * sigma)) *
           std::pow(ratio, alpha);
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace idpfl::oracle

#endif  // IDPFL_TESTS_ORACLE_RDP_ORACLE_H_
