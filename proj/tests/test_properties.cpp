#include <gtest/gtest.h>

#include "formwdp/formwdp.hpp"
#include "support/oracle.hpp"
#include "support/random_scenario.hpp"

namespace {

using namespace formwdp;
using namespace formwdp::testing;

TEST(Oracle, MinimumObjectiveMatchesBruteForce) {
  ScenarioGenerator gen(2024);
  for (int i = 0; i < 300; ++i) {
    const auto s = gen.next();
    const auto oracle = brute_force(s);
    const auto assignments = enumerate_assignments(s);
    ASSERT_EQ(assignments.size(), oracle.feasible) << io::emit_scenario(s);
    if (!oracle.min_objective) {
      EXPECT_THROW((void)solve(s), Error);
      continue;
    }
    const auto report = solve(s);
    ASSERT_EQ(to_rational(report.winner().objective_value), *oracle.min_objective) << io::emit_scenario(s);
    ASSERT_EQ(report.ranked.size(), oracle.feasible);
  }
}

TEST(Oracle, EveryOutcomeCostMatches) {
  ScenarioGenerator gen(7, {2, 3, true, true, true, 1});
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    const auto oracle = brute_force(s);
    if (!oracle.min_objective) continue;
    std::vector<Rational> ours, theirs;
    for (const auto& o : solve(s).ranked) ours.push_back(to_rational(o.sponsor_cost));
    for (const auto& o : oracle.outcomes) theirs.push_back(o.sponsor_cost);
    std::sort(ours.begin(), ours.end());
    std::sort(theirs.begin(), theirs.end());
    ASSERT_EQ(ours, theirs);
  }
}

TEST(Ranking, WinnerPrecedesEveryAlternative) {
  ScenarioGenerator gen(11);
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    const auto r = solve(s);
    for (std::size_t k = 1; k < r.ranked.size(); ++k) {
      ASSERT_TRUE(outcome_precedes(r.ranked[k - 1], r.ranked[k], r.drug_ids));
      ASSERT_FALSE(outcome_precedes(r.ranked[k], r.ranked[k - 1], r.drug_ids));
    }
  }
}

TEST(Ranking, ZeroWeightMeansObjectiveIsCost) {
  ScenarioGenerator gen(12, {2, 4, true, false, true, 2});
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    for (const auto& o : solve(s).ranked) ASSERT_EQ(o.objective_value, o.sponsor_cost);
  }
}

/// Raises one bid rate (preferred, tier-3 or LD) by a random amount.
bool bump_one_rate(Scenario& s, ScenarioGenerator& gen) {
  auto& m = s.menus[static_cast<std::size_t>(gen.uniform(0, static_cast<std::int64_t>(s.menus.size()) - 1))];
  std::vector<Rate*> slots;
  for (auto& [k, r] : m.preferred_rates) slots.push_back(&r);
  if (m.tier3_rate) slots.push_back(&*m.tier3_rate);
  for (auto& o : m.exclusionary_options) slots.push_back(&o.incremental_rate);
  if (slots.empty()) return false;
  Rate& target = *slots[static_cast<std::size_t>(gen.uniform(0, static_cast<std::int64_t>(slots.size()) - 1))];
  target = target + gen.rate_bp(1, 2000);
  return true;
}

TEST(Properties, MinimumObjectiveNeverRisesWhenABidRises) {
  ScenarioGenerator gen(31);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    auto bumped = s;
    if (!bump_one_rate(bumped, gen)) continue;
    auto v = validate_scenario(bumped);
    if (!v.ok()) continue;  // pushed a rate out of range
    ASSERT_LE(solve(*v.scenario).winner().objective_value, solve(s).winner().objective_value)
        << io::emit_scenario(s) << io::emit_scenario(*v.scenario);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Properties, WinnerInvariantUnderUniformScaling) {
  ScenarioGenerator gen(41);
  for (int i = 0; i < 200; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    const std::int64_t c = gen.uniform(2, 9);
    auto scaled = s;
    scaled.total_units *= c;
    for (auto& m : scaled.menus) m.wac_per_unit = m.wac_per_unit * Decimal(c);
    const auto a = solve(s);
    const auto b = solve(scaled);
    ASSERT_EQ(a.winner().label, b.winner().label);
    ASSERT_EQ(a.winner().objective_value * Decimal(c * c), b.winner().objective_value);
  }
}

TEST(Properties, ReportsByteIdenticalAcrossRunsAndThreads) {
  ScenarioGenerator gen(51);
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    const auto findings = compliance::compliance_report(s, compliance::ComplianceOptions::from_policy(s.policy));
    SolveOptions serial, parallel;
    parallel.threads = 4;
    const auto one = io::emit_report(io::SolvePayload{s, solve(s, serial), findings, std::nullopt}, io::Format::Json);
    const auto again = io::emit_report(io::SolvePayload{s, solve(s, serial), findings, std::nullopt}, io::Format::Json);
    const auto four = io::emit_report(io::SolvePayload{s, solve(s, parallel), findings, std::nullopt}, io::Format::Json);
    ASSERT_EQ(one, again);
    ASSERT_EQ(one, four);
  }
}

TEST(Properties, SwitchingDeltasAreWinnerMinusAlternative) {
  ScenarioGenerator gen(61);
  for (int i = 0; i < 100; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    const auto r = solve(s);
    ASSERT_EQ(r.switching.size() + 1, r.ranked.size());
    for (const auto& e : r.switching) {
      const auto& alt = r.ranked[e.rank - 1];
      ASSERT_EQ(e.label, alt.label);
      ASSERT_EQ(e.delta_objective, r.winner().objective_value - alt.objective_value);
      ASSERT_LE(e.delta_objective.sign(), 0);
    }
  }
}

TEST(Properties, SharesSumToOneOverPreferredAndTier3) {
  ScenarioGenerator gen(71);
  for (int i = 0; i < 200; ++i) {
    const auto s = gen.next();
    for (const auto& a : enumerate_assignments(s)) {
      Rate sum;
      for (const auto& x : shares_for(a, s)) sum += x;
      ASSERT_EQ(sum, one_rate()) << assignment_label(a, s);
    }
  }
}

}  // namespace
