#include <random>

#include <gtest/gtest.h>

#include "formwdp/compliance.hpp"
#include "formwdp/io.hpp"
#include "support/builders.hpp"

namespace {

using namespace formwdp;
using namespace formwdp::compliance;
using namespace formwdp::testing;

const Rate kDelta = "0.10"_rate;
const Rate kT3 = "0.10"_rate;

Rate rate_of(const std::optional<Measure>& m) { return std::get<Rate>(*m); }

BidMenu lantus_cvs() {
  auto m = make_menu("lantus", "sanofi", "100"_usd, {{1, "0.56"_rate}, {2, "0.54"_rate}, {3, "0.51"_rate}});
  m.exclusionary_options = {{{"levemir"}, "0.02"_rate}, {{"basaglar", "levemir"}, "0.03"_rate}};
  return m;
}

TEST(BidDown, Novo2015Rejected) {
  auto f = check_bid_down(make_menu("novolog", "novo", "1"_usd, {{1, "0.575"_rate}, {2, "0.18"_rate}}), kDelta);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].severity, Severity::Reject);
  EXPECT_EQ(rate_of(f[0].threshold), "0.5175"_rate);
  EXPECT_EQ(rate_of(f[0].observed), "0.18"_rate);
}

TEST(BidDown, ApidraRejected) {
  auto f = check_bid_down(make_menu("apidra", "sanofi", "1"_usd, {{1, "0.66"_rate}, {2, "0.41"_rate}}), kDelta);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(rate_of(f[0].threshold), "0.594"_rate);
}

TEST(BidDown, CvsLantusPasses) { EXPECT_TRUE(check_bid_down(lantus_cvs(), kDelta).empty()); }

TEST(BidDown, ExactlyAtThresholdClears) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> bp(0, 10000), dbp(0, 5000);
  for (int i = 0; i < 2000; ++i) {
    const Rate excl = from_basis_points(bp(rng)), delta = from_basis_points(dbp(rng));
    const Rate floor = (one_rate() - delta) * excl;
    const Rate below = floor - Rate(Decimal::from_scaled(1, 8));
    ASSERT_TRUE(check_bid_down(make_menu("a", "m", "1"_usd, {{1, excl}, {2, floor}}), delta).empty());
    if (below.sign() >= 0) {
      ASSERT_EQ(check_bid_down(make_menu("a", "m", "1"_usd, {{1, excl}, {2, below}}), delta).size(), 1u);
    }
  }
}

TEST(LdScreen, CvsLantusBothOptionsRejected) {
  auto f = check_ld(lantus_cvs(), kDelta, kT3);
  ASSERT_EQ(f.size(), 2u);
  for (const auto& x : f) {
    EXPECT_EQ(x.rule, RuleId::LdBelowMinimum);
    EXPECT_EQ(rate_of(x.threshold), "0.0504"_rate);
  }
}

TEST(LdScreen, ApidraPasses) {
  auto m = make_menu("apidra", "sanofi", "1"_usd, {{1, "0.66"_rate}, {2, "0.41"_rate}});
  m.exclusionary_options = {{{"humalog"}, "0.15"_rate}};
  EXPECT_TRUE(check_ld(m, kDelta, kT3).empty());
}

TEST(LdScreen, ZeroTier3ShareIsVacuous) { EXPECT_TRUE(check_ld(lantus_cvs(), kDelta, Rate{}).empty()); }

TEST(LdScreen, ThresholdIsTheDuopolyLdMinimum) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::int64_t> bp(0, 10000);
  for (int i = 0; i < 1000; ++i) {
    const Rate b1 = from_basis_points(bp(rng)), delta = from_basis_points(bp(rng)), t3 = from_basis_points(bp(rng));
    auto m = make_menu("a", "m", "1"_usd, {{1, b1}});
    m.exclusionary_options = {{{"b"}, Rate{}}};
    auto f = check_ld(m, delta, t3);
    const Rate expected = duopoly::ld_minimum(b1, delta, t3);
    if (expected.is_zero()) {
      ASSERT_TRUE(f.empty());
    } else {
      ASSERT_EQ(f.size(), 1u);
      ASSERT_EQ(rate_of(f[0].threshold), expected);
    }
  }
}

TEST(LinearBasis, BannedFieldsRejected) {
  auto bundle = nlohmann::json::parse(R"({"id":"x","bids":{"exclusive":"0.5"},"bundled_rebate_total":"1000"})");
  auto f = check_linear_basis(bundle);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].rule, RuleId::NonlinearBasis);
  EXPECT_FALSE(f[0].observed.has_value());

  auto tiers = nlohmann::json::parse(
      R"({"id":"x","bids":{"exclusive":"0.5","market_share_tiers":[{"min_share":"0.3","rate":"0.6"}]}})");
  auto g = check_linear_basis(tiers);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NE(g[0].explanation.find("bids.market_share_tiers"), std::string::npos);

  auto plain = nlohmann::json::parse(R"({"id":"x","bids":{"exclusive":"0.5","shared_1_of_2":"0.45"}})");
  EXPECT_TRUE(check_linear_basis(plain).empty());
}

TEST(Subadditivity, OptumRxCoveredColumnIsClean) {
  EXPECT_TRUE(check_subadditivity(make_menu("lantus", "sanofi", "1"_usd,
                                            {{1, "0.50"_rate}, {2, "0.40"_rate}, {3, "0.26"_rate}}))
                  .empty());
}

TEST(Subadditivity, ReversedOrderWarns) {
  auto f = check_subadditivity(make_menu("a", "m", "1"_usd, {{1, "0.40"_rate}, {2, "0.50"_rate}}));
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].severity, Severity::Warn);
}

TEST(Subadditivity, SingleRateIsVacuous) {
  EXPECT_TRUE(check_subadditivity(make_menu("a", "m", "1"_usd, {{2, "0.4"_rate}})).empty());
}

BundleOffer offer(const char* bundle, const char* rate) {
  return {Money(Decimal::parse_or_throw(bundle)), "toujeo", {"lantus"}, "900000000"_usd, "0.1527"_rate,
          Rate(Decimal::parse_or_throw(rate))};
}

TEST(Bundle, StandardAuctionDominatesEightyMillion) {
  auto c = bundle_counterfactual(offer("80000000", "0.70"));
  EXPECT_EQ(c.standard_proceeds, "96201000"_usd);
  ASSERT_TRUE(c.finding.has_value());
  EXPECT_EQ(c.finding->rule, RuleId::BundleDominated);
}

TEST(Bundle, LargerBundleNotDominated) {
  EXPECT_FALSE(bundle_counterfactual(offer("200000000", "0.70")).finding.has_value());
}

TEST(Bundle, FeasibleEntrantBand) {
  EXPECT_EQ(bundle_counterfactual(offer("80000000", "0.70")).standard_proceeds, "96201000"_usd);
  EXPECT_EQ(bundle_counterfactual(offer("80000000", "0.85")).standard_proceeds, "116815500"_usd);
}

TEST(Bundle, LinearInEachFactor) {
  const auto base = bundle_counterfactual(offer("1", "0.70")).standard_proceeds;
  auto o = offer("1", "0.70");
  o.market_gross = o.market_gross * "3"_dec;
  EXPECT_EQ(bundle_counterfactual(o).standard_proceeds, base * "3"_dec);
  o = offer("1", "0.35");
  EXPECT_EQ(bundle_counterfactual(o).standard_proceeds * "2"_dec, base);
}

TEST(Report, GwFixturesGiveTheUnionOfPerCheckFindings) {
  for (const char* name : {"novo_cvs_2015.json", "apidra_cvs_2018.json", "lantus_cvs_2018.json",
                           "lantus_optumrx_covered.json"}) {
    const auto s = load_fixture(name);
    const auto copy = s;
    auto report = compliance_report(s, ComplianceOptions::from_policy(s.policy));
    EXPECT_EQ(s, copy);  // checks never mutate
    std::vector<ComplianceFinding> expected;
    for (const auto& m : s.menus) {
      for (auto&& f : check_bid_down(m, kDelta)) expected.push_back(f);
      for (auto&& f : check_ld(m, kDelta, kT3)) expected.push_back(f);
      for (auto&& f : check_subadditivity(m)) expected.push_back(f);
    }
    ASSERT_EQ(report.size(), expected.size()) << name;
    sort_findings(expected);
    for (std::size_t i = 0; i < report.size(); ++i) {
      EXPECT_EQ(report[i].explanation, expected[i].explanation);
    }
  }
}

TEST(Report, NoExclusionaryOptionsMeansNoLdFindings) {
  auto s = load_fixture("lantus_cvs_2018.json");
  for (auto& m : s.menus) m.exclusionary_options.clear();
  for (const auto& f : compliance_report(s, {})) EXPECT_NE(f.rule, RuleId::LdBelowMinimum);
}

TEST(Report, CvsLantusFixtureFindings) {
  const auto s = load_fixture("lantus_cvs_2018.json");
  int ld = 0, bid_down_for_lantus = 0;
  for (const auto& f : compliance_report(s, {})) {
    if (f.drug_id != "lantus") continue;
    ld += f.rule == RuleId::LdBelowMinimum;
    bid_down_for_lantus += f.rule == RuleId::BidDownLimit;
  }
  EXPECT_EQ(ld, 2);
  EXPECT_EQ(bid_down_for_lantus, 0);
}

TEST(Report, PerManufacturerLimit) {
  const auto s = load_fixture("novo_cvs_2015.json");
  ComplianceOptions o;
  o.manufacturer_bid_down_limit["novo"] = "0.70"_rate;
  o.manufacturer_bid_down_limit["lilly"] = "0.20"_rate;
  EXPECT_TRUE(compliance_report(s, o).empty());
}

TEST(Report, SameScenarioTwiceSameBytes) {
  const auto s = load_fixture("apidra_cvs_2018.json");
  io::CheckPayload p{s, compliance_report(s, {}), kDelta, kT3};
  EXPECT_EQ(io::emit_report(p, io::Format::Json), io::emit_report(p, io::Format::Json));
}

}  // namespace
