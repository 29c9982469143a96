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

#include "idpfl/planner.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "idpfl/accountant.h"
#include "idpfl/errors.h"

namespace idpfl::planner {
namespace {

using accountant::PrivacyBudget;

void validate_groups(std::span<const PrivacyGroupSpec> groups, int64_t steps,
                     int64_t cohort, int64_t population) {
  if (groups.empty()) throw ParameterError("no privacy groups");
  if (steps < 1) throw ParameterError("steps must be >= 1");
  if (population < 1 || cohort < 1 || cohort > population) {
    throw ParameterError("need 1 <= cohort <= population");
  }
  int64_t total = 0;
  for (size_t p = 0; p < groups.size(); ++p) {
    if (!(groups[p].epsilon > 0.0)) {
      throw ParameterError("group epsilon must be positive");
    }
    if (groups[p].size < 0) throw ParameterError("negative group size");
    if (p > 0 && !(groups[p].epsilon > groups[p - 1].epsilon)) {
      throw ParameterError("group epsilons must be strictly increasing");
    }
    total += groups[p].size;
  }
  if (total != population) {
    throw ParameterError("group sizes sum to " + std::to_string(total) +
                         ", expected " + std::to_string(population));
  }
}

std::vector<double> rates_for(std::span<const PrivacyGroupSpec> groups,
                              double delta, double sigma, int64_t steps) {
  std::vector<double> rates(groups.size());
  for (size_t p = 0; p < groups.size(); ++p) {
    rates[p] =
        accountant::get_sample_rate({groups[p].epsilon, delta}, sigma, steps);
  }
  return rates;
}

}  // namespace

GroupAssignment group_by_budget(std::span<const double> client_epsilons) {
  std::map<double, int64_t> counts;
  for (double e : client_epsilons) {
    if (!(e > 0.0)) throw ParameterError("client epsilon must be positive");
    ++counts[e];
  }
  GroupAssignment out;
  std::map<double, int> index;
  for (const auto& [eps, n] : counts) {
    index[eps] = static_cast<int>(out.groups.size());
    out.groups.push_back({eps, n});
  }
  out.client_group.reserve(client_epsilons.size());
  for (double e : client_epsilons) out.client_group.push_back(index[e]);
  return out;
}

double expected_cohort(std::span<const PrivacyGroupSpec> groups,
                       std::span<const double> rates) {
  double sum = 0.0;
  for (size_t p = 0; p < groups.size(); ++p) {
    sum += static_cast<double>(groups[p].size) * rates[p];
  }
  return sum;
}

SamplingPlan get_group_sampling_rates(std::span<const PrivacyGroupSpec> groups,
                                      double delta, int64_t steps,
                                      int64_t cohort, int64_t population) {
  validate_groups(groups, steps, cohort, population);
  SamplingPlan plan;
  plan.groups.assign(groups.begin(), groups.end());

  const double target_rate =
      static_cast<double>(cohort) / static_cast<double>(population);
  const double target = static_cast<double>(cohort);
  const double tol = kCohortRelTol * target;

  if (std::isinf(groups.front().epsilon)) {
    plan.rates.assign(groups.size(), 1.0);
    plan.expected_cohort = static_cast<double>(population);
    plan.cohort_unattainable = cohort < population;
    return plan;
  }

  int64_t non_private = 0;
  for (const auto& g : groups) {
    if (std::isinf(g.epsilon)) non_private += g.size;
  }
  if (static_cast<double>(non_private) > target + tol) {
    throw InfeasibleBudgetError(
        std::to_string(non_private) +
        " non-private clients sampled at rate 1 already exceed the cohort of " +
        std::to_string(cohort));
  }

  double sigma = accountant::get_noise({groups.front().epsilon, delta},
                                       target_rate, steps);
  std::vector<double> rates = rates_for(groups, delta, sigma, steps);
  // The strictest group is feasible at exactly c/N by construction of sigma;
  // the rate search would only recover it to within its tolerance.
  rates.front() = target_rate;
  double cohort_now = expected_cohort(groups, rates);

  auto done = [&](double sum) { return std::abs(sum - target) <= tol; };

  if (!done(cohort_now)) {
    if (cohort_now < target) {
      throw InfeasibleBudgetError("initial plan under-samples the cohort");
    }
    // Geometric shrink until the average drops to or below the target.
    double sigma_high = sigma;
    while (!done(cohort_now) && cohort_now > target) {
      sigma_high = sigma;
      sigma *= kSigmaShrink;
      ++plan.loop_iterations;
      if (sigma < accountant::kSigmaMin) {
        throw InfeasibleBudgetError(
            "noise multiplier fell below the search bracket before the "
            "cohort target was met");
      }
      rates = rates_for(groups, delta, sigma, steps);
      cohort_now = expected_cohort(groups, rates);
    }
    // Overshot: refine between the last two iterates.
    double sigma_low = sigma;
    for (int it = 0; it < accountant::kMaxBisectionIters && !done(cohort_now);
         ++it) {
      sigma = 0.5 * (sigma_low + sigma_high);
      ++plan.loop_iterations;
      rates = rates_for(groups, delta, sigma, steps);
      cohort_now = expected_cohort(groups, rates);
      if (cohort_now > target) {
        sigma_high = sigma;
      } else {
        sigma_low = sigma;
      }
    }
    if (!done(cohort_now)) {
      throw InfeasibleBudgetError("planner did not converge on the cohort");
    }
  }

  plan.sigma_sample = sigma;
  plan.rates = std::move(rates);
  plan.expected_cohort = cohort_now;
  return plan;
}

SamplingPlan uniform_plan(double epsilon, double delta, int64_t steps,
                          int64_t cohort, int64_t population) {
  const PrivacyGroupSpec group{epsilon, population};
  validate_groups({&group, 1}, steps, cohort, population);
  if (std::isinf(epsilon)) {
    throw ParameterError("uniform DP plan needs a finite epsilon");
  }
  const double rate =
      static_cast<double>(cohort) / static_cast<double>(population);
  SamplingPlan plan;
  plan.groups = {group};
  plan.sigma_sample = accountant::get_noise({epsilon, delta}, rate, steps);
  plan.rates = {rate};
  plan.expected_cohort = expected_cohort(plan.groups, plan.rates);
  return plan;
}

SamplingPlan non_private_plan(int64_t cohort, int64_t population) {
  if (population < 1 || cohort < 1 || cohort > population) {
    throw ParameterError("need 1 <= cohort <= population");
  }
  SamplingPlan plan;
  plan.groups = {{accountant::kInfinity, population}};
  plan.rates = {static_cast<double>(cohort) / static_cast<double>(population)};
  plan.expected_cohort = expected_cohort(plan.groups, plan.rates);
  return plan;
}

nlohmann::json to_json(const SamplingPlan& plan) {
  nlohmann::json groups = nlohmann::json::array();
  for (size_t p = 0; p < plan.groups.size(); ++p) {
    nlohmann::json g;
    if (std::isinf(plan.groups[p].epsilon)) {
      g["epsilon"] = "inf";
    } else {
      g["epsilon"] = plan.groups[p].epsilon;
    }
    g["size"] = plan.groups[p].size;
    g["rate"] = plan.rates[p];
    groups.push_back(std::move(g));
  }
  return {{"sigma_sample", plan.sigma_sample},
          {"groups", std::move(groups)},
          {"expected_cohort", plan.expected_cohort},
          {"loop_iterations", plan.loop_iterations},
          {"cohort_unattainable", plan.cohort_unattainable}};
}

}  // namespace idpfl::planner
