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

#ifndef IDPFL_PLANNER_H_
#define IDPFL_PLANNER_H_

// Turns heterogeneous per-group privacy budgets into one global noise
// multiplier plus per-group client sampling rates whose population average
// equals the target cohort rate c / N.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace idpfl::planner {

// Geometric shrink factor applied to sigma while the average rate is too high.
inline constexpr double kSigmaShrink = 0.995;
// Relative tolerance of the average sampling rate against c / N.
inline constexpr double kCohortRelTol = 1e-3;

struct PrivacyGroupSpec {
  double epsilon = 1.0;  // +inf for non-private clients
  int64_t size = 0;
};

struct SamplingPlan {
  double sigma_sample = 0.0;
  std::vector<PrivacyGroupSpec> groups;
  std::vector<double> rates;  // one per group
  double expected_cohort = 0.0;
  int loop_iterations = 0;
  // Set when every group is non-private: all rates are 1 and the cohort
  // target cannot be met without noise.
  bool cohort_unattainable = false;
};

// Unique-value grouping of per-client budgets. Groups come out sorted by
// increasing epsilon; client_group[i] indexes into groups.
struct GroupAssignment {
  std::vector<PrivacyGroupSpec> groups;
  std::vector<int> client_group;
};
GroupAssignment group_by_budget(std::span<const double> client_epsilons);

// The planning loop: sigma starts at the strictest group's requirement for
// rate c/N and is shrunk (geometrically, then by bisection between the last
// two iterates) until sum_p |G_p| q_p matches c within kCohortRelTol.
//
// Groups must have strictly increasing epsilon and sizes summing to
// `population`. Non-private groups are pinned at rate 1. Throws
// InfeasibleBudgetError when the strictest budget is unreachable or the
// non-private groups alone exceed the cohort.
SamplingPlan get_group_sampling_rates(std::span<const PrivacyGroupSpec> groups,
                                      double delta, int64_t steps,
                                      int64_t cohort, int64_t population);

// Uniform-DP plan: every client at rate c/N with the noise required by the
// single budget `epsilon`.
SamplingPlan uniform_plan(double epsilon, double delta, int64_t steps,
                          int64_t cohort, int64_t population);

// No noise; every client at rate c/N.
SamplingPlan non_private_plan(int64_t cohort, int64_t population);

// Population-weighted sum of rates, i.e. the expected clients per round.
double expected_cohort(std::span<const PrivacyGroupSpec> groups,
                       std::span<const double> rates);

nlohmann::json to_json(const SamplingPlan& plan);

}  // namespace idpfl::planner

#endif  // IDPFL_PLANNER_H_
