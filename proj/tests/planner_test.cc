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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "idpfl/accountant.h"
#include "idpfl/errors.h"

namespace idpfl::planner {
namespace {

constexpr double kDelta = 1e-5;

std::vector<PrivacyGroupSpec> three_tier_groups() {
  return {{1.0, 34}, {2.0, 43}, {3.0, 23}};
}

void expect_compliant(const SamplingPlan& plan, int64_t steps) {
  for (size_t p = 0; p < plan.groups.size(); ++p) {
    if (std::isinf(plan.groups[p].epsilon)) continue;
    const double spent = accountant::compute_epsilon(
        {plan.rates[p], plan.sigma_sample, steps}, kDelta);
    EXPECT_LE(spent, plan.groups[p].epsilon) << "group " << p;
  }
}

// Average rate for a given sigma, computed from scratch.
double cohort_at(const std::vector<PrivacyGroupSpec>& groups, double sigma,
                 int64_t steps) {
  double sum = 0;
  for (const auto& g : groups) {
    sum +=
        g.size * accountant::get_sample_rate({g.epsilon, kDelta}, sigma, steps);
  }
  return sum;
}

TEST(GetGroupSamplingRates, SingleGroupIsUniformDp) {
  const std::vector<PrivacyGroupSpec> groups = {{1.0, 100}};
  const SamplingPlan plan =
      get_group_sampling_rates(groups, kDelta, 100, 10, 100);
  EXPECT_EQ(plan.rates[0], 0.1);
  EXPECT_EQ(plan.loop_iterations, 0);
  EXPECT_EQ(plan.sigma_sample, accountant::get_noise({1.0, kDelta}, 0.1, 100));
  const SamplingPlan uniform = uniform_plan(1.0, kDelta, 100, 10, 100);
  EXPECT_EQ(plan.sigma_sample, uniform.sigma_sample);
  EXPECT_EQ(plan.rates, uniform.rates);
  EXPECT_EQ(plan.expected_cohort, uniform.expected_cohort);
}

TEST(GetGroupSamplingRates, ThreeTierPlanMeetsEveryConstraint) {
  const auto groups = three_tier_groups();
  const SamplingPlan plan =
      get_group_sampling_rates(groups, kDelta, 100, 10, 100);
  ASSERT_EQ(plan.rates.size(), 3u);
  EXPECT_LT(plan.rates[0], plan.rates[1]);
  EXPECT_LT(plan.rates[1], plan.rates[2]);
  EXPECT_NEAR(plan.expected_cohort, 10.0, 0.01);
  EXPECT_DOUBLE_EQ(plan.expected_cohort, expected_cohort(groups, plan.rates));
  EXPECT_GT(plan.loop_iterations, 0);
  expect_compliant(plan, 100);
}

TEST(GetGroupSamplingRates, AgreesWithBruteForceSigmaGrid) {
  const auto groups = three_tier_groups();
  const int64_t steps = 100;
  const SamplingPlan plan =
      get_group_sampling_rates(groups, kDelta, steps, 10, 100);

  // Scan sigma downwards from the strictest requirement: coarse 1% steps to
  // bracket the crossing of the cohort target, then 0.01% steps inside.
  const double start = accountant::get_noise({1.0, kDelta}, 0.1, steps);
  double hi = start, lo = start;
  while (cohort_at(groups, lo, steps) > 10.0) {
    hi = lo;
    lo *= 0.99;
  }
  double crossing = lo;
  for (double s = hi; s >= lo; s *= 0.9999) {
    if (cohort_at(groups, s, steps) <= 10.0) {
      crossing = s;
      break;
    }
  }
  EXPECT_NEAR(plan.sigma_sample, crossing, 5e-3 * crossing);
  const auto grid_rates = [&] {
    std::vector<double> r;
    for (const auto& g : groups) {
      r.push_back(
          accountant::get_sample_rate({g.epsilon, kDelta}, crossing, steps));
    }
    return r;
  }();
  for (size_t p = 0; p < groups.size(); ++p) {
    EXPECT_NEAR(plan.rates[p], grid_rates[p], 2e-3 * grid_rates[p]);
  }
}

TEST(GetGroupSamplingRates, IdenticalInputsGiveIdenticalPlans) {
  const auto groups = three_tier_groups();
  const SamplingPlan a = get_group_sampling_rates(groups, kDelta, 100, 10, 100);
  const SamplingPlan b = get_group_sampling_rates(groups, kDelta, 100, 10, 100);
  EXPECT_EQ(a.sigma_sample, b.sigma_sample);
  EXPECT_EQ(a.rates, b.rates);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(GetGroupSamplingRates, RandomBudgetsPreserveOrderAndComply) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ue(0.5, 4.0);
  std::uniform_int_distribution<int> us(5, 60);
  for (int trial = 0; trial < 5; ++trial) {
    double e1 = ue(rng);
    const std::vector<PrivacyGroupSpec> groups = {
        {e1, us(rng)}, {e1 * 1.5, us(rng)}, {e1 * 3.0, us(rng)}};
    int64_t n = 0;
    for (const auto& g : groups) n += g.size;
    const SamplingPlan plan =
        get_group_sampling_rates(groups, kDelta, 50, 8, n);
    EXPECT_LE(plan.rates[0], plan.rates[1]);
    EXPECT_LE(plan.rates[1], plan.rates[2]);
    EXPECT_LE(std::abs(plan.expected_cohort - 8.0), 8e-3);
    expect_compliant(plan, 50);
  }
}

TEST(GetGroupSamplingRates, NonPrivateGroupPinnedAtFullRate) {
  // 95% at epsilon 0.6 and 5% non-private out of 3383 clients; 169 clients
  // at rate 1 need a cohort above 169.
  const std::vector<PrivacyGroupSpec> groups = {{0.6, 3214},
                                                {accountant::kInfinity, 169}};
  const SamplingPlan plan =
      get_group_sampling_rates(groups, kDelta, 420, 200, 3383);
  EXPECT_EQ(plan.rates[1], 1.0);
  EXPECT_NEAR(plan.expected_cohort, 200.0, 0.2);
  EXPECT_NEAR(3214 * plan.rates[0] + 169.0, 200.0, 0.2);
  expect_compliant(plan, 420);
}

TEST(GetGroupSamplingRates, NonPrivateClientsAboveCohortAreInfeasible) {
  const std::vector<PrivacyGroupSpec> groups = {{0.6, 3214},
                                                {accountant::kInfinity, 169}};
  EXPECT_THROW(get_group_sampling_rates(groups, kDelta, 420, 30, 3383),
               InfeasibleBudgetError);
}

TEST(GetGroupSamplingRates, AllNonPrivateIsFlagged) {
  const std::vector<PrivacyGroupSpec> groups = {{accountant::kInfinity, 50}};
  const SamplingPlan plan = get_group_sampling_rates(groups, kDelta, 10, 5, 50);
  EXPECT_TRUE(plan.cohort_unattainable);
  EXPECT_EQ(plan.rates, std::vector<double>{1.0});
  EXPECT_EQ(plan.sigma_sample, 0.0);
}

TEST(GetGroupSamplingRates, RejectsMalformedGroups) {
  const std::vector<PrivacyGroupSpec> unordered = {{2.0, 50}, {1.0, 50}};
  EXPECT_THROW(get_group_sampling_rates(unordered, kDelta, 10, 5, 100),
               ParameterError);
  const std::vector<PrivacyGroupSpec> short_sum = {{1.0, 40}, {2.0, 50}};
  EXPECT_THROW(get_group_sampling_rates(short_sum, kDelta, 10, 5, 100),
               ParameterError);
  const std::vector<PrivacyGroupSpec> ok = {{1.0, 100}};
  EXPECT_THROW(get_group_sampling_rates(ok, kDelta, 10, 200, 100),
               ParameterError);
}

TEST(GetGroupSamplingRates, StrictBudgetInfeasibilityPropagates) {
  const std::vector<PrivacyGroupSpec> groups = {{1e-3, 100}};
  EXPECT_THROW(get_group_sampling_rates(groups, kDelta, 10, 10, 100),
               InfeasibleBudgetError);
}

TEST(GroupByBudget, UniqueValuesInAscendingOrder) {
  const std::vector<double> eps = {3, 1, 3, 2, 1, accountant::kInfinity};
  const GroupAssignment g = group_by_budget(eps);
  ASSERT_EQ(g.groups.size(), 4u);
  EXPECT_EQ(g.groups[0].epsilon, 1);
  EXPECT_EQ(g.groups[0].size, 2);
  EXPECT_EQ(g.groups[2].epsilon, 3);
  EXPECT_EQ(g.groups[2].size, 2);
  EXPECT_TRUE(std::isinf(g.groups[3].epsilon));
  EXPECT_EQ(g.client_group, (std::vector<int>{2, 0, 2, 1, 0, 3}));
}

TEST(GroupByBudget, EqualBudgetsCollapseToUniformPlan) {
  const std::vector<double> eps(80, 2.0);
  const GroupAssignment g = group_by_budget(eps);
  ASSERT_EQ(g.groups.size(), 1u);
  const SamplingPlan plan =
      get_group_sampling_rates(g.groups, kDelta, 60, 8, 80);
  const SamplingPlan uniform = uniform_plan(2.0, kDelta, 60, 8, 80);
  EXPECT_NEAR(plan.rates[0], 0.1, 1e-6);
  EXPECT_EQ(plan.sigma_sample, uniform.sigma_sample);
  EXPECT_EQ(plan.rates, uniform.rates);
}

TEST(SamplingPlanJson, CarriesAuditFields) {
  const auto plan =
      get_group_sampling_rates(three_tier_groups(), kDelta, 100, 10, 100);
  const auto j = to_json(plan);
  EXPECT_EQ(j.at("groups").size(), 3u);
  EXPECT_EQ(j.at("groups")[1].at("size"), 43);
  EXPECT_DOUBLE_EQ(j.at("groups")[2].at("rate").get<double>(), plan.rates[2]);
  EXPECT_DOUBLE_EQ(j.at("sigma_sample").get<double>(), plan.sigma_sample);
  EXPECT_EQ(j.at("loop_iterations"), plan.loop_iterations);
  EXPECT_TRUE(j.contains("expected_cohort"));
}

}  // namespace
}  // namespace idpfl::planner
