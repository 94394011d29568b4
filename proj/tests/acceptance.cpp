// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <cmath>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "formwdp/formwdp.hpp"
#include "support/builders.hpp"
#include "support/oracle.hpp"
#include "support/random_scenario.hpp"
#include "support/run.hpp"

#ifndef FORMWDP_CLI_PATH
#error "FORMWDP_CLI_PATH must name the formwdp executable"
#endif

namespace {

using namespace formwdp;
using namespace formwdp::testing;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << what;
    ok = ok && cond;
  }
};

Rate rate_of(const std::optional<compliance::Measure>& m) { return std::get<Rate>(*m); }

// Rounded percentage of a rate, e.g. 0.39605 -> 39.605.
double pct(const Rate& r) { return std::stod(r.value().to_string()) * 100.0; }

Check ac1() {
  Check c;
  const auto r = run_command(std::string(FORMWDP_CLI_PATH) + " duopoly --b1 57.5% --b2 18% --b3 90% 2>&1");
  std::smatch m;
  c.expect(r.exit_code == 0, "exit code " + std::to_string(r.exit_code));
  if (!std::regex_search(r.out, m, std::regex(R"(x\* = ([0-9.]+))"))) {
    c.expect(false, "no x* in output: " + r.out);
    return c;
  }
  const double x = std::stod(m[1]);
  c.expect(m[1] == "0.5486", "x* = " + m[1].str());
  c.expect(std::fabs(x - 0.549) <= 0.001, "x* off by more than 0.001");
  c.detail << "x* = " << m[1];
  return c;
}

Check ac2() {
  Check c;
  const auto lo = duopoly::ld_minimum("0.50"_rate, "0.10"_rate, "0.10"_rate);
  const auto hi = duopoly::ld_minimum("0.60"_rate, "0.10"_rate, "0.10"_rate);
  c.expect(lo == "0.0450"_rate, "low end " + format_rate(lo));
  c.expect(hi == "0.0540"_rate, "high end " + format_rate(hi));
  c.detail << format_rate(lo) << " .. " << format_rate(hi);
  return c;
}

Check ac3() {
  Check c;
  auto m = make_menu("lantus", "sanofi", "100"_usd, {{1, "0.56"_rate}, {2, "0.54"_rate}, {3, "0.51"_rate}});
  m.exclusionary_options = {{{"levemir"}, "0.02"_rate}, {{"basaglar", "levemir"}, "0.03"_rate}};
  const auto f = compliance::check_ld(m, "0.10"_rate, "0.10"_rate);
  c.expect(f.size() == 2, std::to_string(f.size()) + " findings");
  for (const auto& x : f) {
    c.expect(x.severity == compliance::Severity::Reject, "non-reject finding");
    c.expect(rate_of(x.threshold) == "0.0504"_rate, "threshold " + format_rate(rate_of(x.threshold)));
  }
  const auto s = load_fixture("lantus_cvs_2018.json");
  int fixture_ld = 0;
  for (const auto& x : compliance::compliance_report(s, {})) {
    fixture_ld += x.drug_id == "lantus" && x.rule == compliance::RuleId::LdBelowMinimum;
  }
  c.expect(fixture_ld == 2, "fixture gives " + std::to_string(fixture_ld) + " LD findings");
  c.detail << "2 rejects at 0.0504";
  return c;
}

Check ac4() {
  Check c;
  const Rate delta = "0.10"_rate;
  const auto novo = compliance::check_bid_down(
      make_menu("novolog", "novo", "1"_usd, {{1, "0.575"_rate}, {2, "0.18"_rate}}), delta);
  const auto apidra = compliance::check_bid_down(
      make_menu("apidra", "sanofi", "1"_usd, {{1, "0.66"_rate}, {2, "0.41"_rate}}), delta);
  const auto lantus = compliance::check_bid_down(
      make_menu("lantus", "sanofi", "1"_usd, {{1, "0.56"_rate}, {2, "0.54"_rate}, {3, "0.51"_rate}}), delta);
  c.expect(novo.size() == 1 && novo[0].severity == compliance::Severity::Reject, "novo not flagged");
  c.expect(apidra.size() == 1 && apidra[0].severity == compliance::Severity::Reject, "apidra not flagged");
  c.expect(lantus.empty(), "lantus flagged");
  c.detail << "novo and apidra flagged, lantus passes";
  return c;
}

Check ac5() {
  Check c;
  const auto cmp = compliance::bundle_counterfactual(
      {"80000000"_usd, "toujeo", {"lantus"}, "900000000"_usd, "0.1527"_rate, "0.70"_rate});
  c.expect(cmp.standard_proceeds == "96201000"_usd, "proceeds " + format_money(cmp.standard_proceeds));
  const double diff = std::fabs(std::stod(cmp.standard_proceeds.value().to_string()) - 96e6);
  c.expect(diff <= 1e6, "more than 1M from 96M");
  c.expect(cmp.finding && cmp.finding->rule == compliance::RuleId::BundleDominated, "no BUNDLE_DOMINATED");
  c.detail << "standard proceeds " << format_money(cmp.standard_proceeds);
  return c;
}

Check ac6() {
  Check c;
  const auto doc = io::load_margins(read_text(fixture_path("novo_2023_margins.json")));
  if (!doc.ok()) {
    c.expect(false, "margins fixture invalid");
    return c;
  }
  const auto& net = doc.margins->statement;
  const auto g = financials::margin_statement_gross(net);
  const std::pair<Rate, double> rows[] = {{g.cost_of_sales, 10.1},
                                          {g.marketing, 16.1},
                                          {net.contribution_margin(), 60.2},
                                          {g.contribution_margin(), 39.6},
                                          {g.max_unit_rebate(), 60.4}};
  for (const auto& [value, expected] : rows) {
    c.expect(std::fabs(pct(value) - expected) <= 0.1 + 1e-9,
             format_rate(value) + " vs " + std::to_string(expected) + "%");
    c.detail << format_percent(value) << ' ';
  }
  return c;
}

Check ac7() {
  Check c;
  const auto g = financials::margin_statement_gross({financials::Basis::Net, "0.342"_rate, "0.154"_rate, "0.244"_rate});
  for (auto p : {financials::Preset::Table, financials::Preset::Text}) {
    const auto e = financials::derive_bid_down_limit(g, financials::preset_fractions(p));
    c.expect(e.total == "0.1000"_rate, "delta " + format_rate(e.total));
    c.detail << format_rate(e.production_loss) << '+' << format_rate(e.marketing_loss) << '=' << format_rate(e.total)
             << ' ';
  }
  return c;
}

Check ac8() {
  Check c;
  ScenarioGenerator gen(8008);
  int compared = 0, infeasible = 0;
  for (int i = 0; i < 200; ++i) {
    const auto s = gen.next();
    const auto oracle = brute_force(s);
    if (!oracle.min_objective) {
      bool threw = false;
      try {
        (void)solve(s);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::NoFeasibleAssignment;
      }
      c.expect(threw, "case " + std::to_string(i) + ": oracle infeasible, solver did not say so");
      ++infeasible;
      continue;
    }
    const auto r = solve(s);
    c.expect(to_rational(r.winner().objective_value) == *oracle.min_objective,
             "case " + std::to_string(i) + " objective mismatch");
    c.expect(r.ranked.size() == oracle.feasible, "case " + std::to_string(i) + " feasible count mismatch");
    ++compared;
  }
  c.detail << compared << " optimal objectives equal, " << infeasible << " infeasible agreed";
  return c;
}

Check ac9() {
  Check c;
  ScenarioGenerator gen(9009);
  int ties = 0, agreed = 0;
  for (int i = 0; i < 1000; ++i) {
    Rate b1, b2, b3, x;
    if (i % 4 == 0) {
      // constructed exact tie: x = m/100 and b3 - b2 a whole percent
      const std::int64_t m = gen.uniform(1, 99);
      const std::int64_t j = gen.uniform(1, 60);
      const std::int64_t b2_bp = gen.uniform(0, 10000 - 100 * j);
      x = from_basis_points(100 * m);
      b2 = from_basis_points(b2_bp);
      b3 = from_basis_points(b2_bp + 100 * j);
      b1 = from_basis_points(b2_bp + m * j);
    } else {
      const std::int64_t b2_bp = gen.uniform(0, 9999);
      b2 = from_basis_points(b2_bp);
      b3 = from_basis_points(gen.uniform(b2_bp + 1, 10000));
      b1 = gen.rate_bp(0, 10000);
      x = gen.rate_bp(0, 10000);
    }
    const auto fav = duopoly::favors_exclusive({b1, b2, b3, x});
    ties += fav.margin.is_zero();
    const auto winner = solve(duopoly_scenario(b1, b2, b3, x)).winner().label;
    const bool engine_exclusive = winner == "entrant=excluded;incumbent=exclusive";
    const bool ok = engine_exclusive == (fav.decision == duopoly::Preference::Exclusive);
    c.expect(ok, "tuple " + format_rate(b1) + "/" + format_rate(b2) + "/" + format_rate(b3) + " x=" +
                     format_rate(x) + ": engine picked " + winner);
    agreed += ok;
  }
  c.expect(ties >= 200, "only " + std::to_string(ties) + " ties exercised");
  c.detail << agreed << "/1000 agree, " << ties << " exact ties";
  return c;
}

Check ac10() {
  Check c;
  ScenarioGenerator gen(1010);
  int mono = 0, scaled = 0, reports = 0;
  for (int i = 0; i < 150; ++i) {
    const auto s = gen.next();
    if (!brute_force(s).min_objective) continue;
    const auto base = solve(s);

    // raise one preferred rate
    auto bumped = s;
    auto& menu = bumped.menus[static_cast<std::size_t>(gen.uniform(0, static_cast<std::int64_t>(s.menus.size()) - 1))];
    if (!menu.preferred_rates.empty()) {
      auto it = menu.preferred_rates.begin();
      std::advance(it, gen.uniform(0, static_cast<std::int64_t>(menu.preferred_rates.size()) - 1));
      it->second = it->second + gen.rate_bp(1, 1000);
      if (auto v = validate_scenario(bumped); v.ok()) {
        c.expect(solve(*v.scenario).winner().objective_value <= base.winner().objective_value,
                 "monotonicity violated in case " + std::to_string(i));
        ++mono;
      }
    }

    const std::int64_t k = gen.uniform(2, 9);
    auto big = s;
    big.total_units *= k;
    for (auto& m : big.menus) m.wac_per_unit = m.wac_per_unit * Decimal(k);
    c.expect(solve(big).winner().label == base.winner().label, "scaling changed winner in case " + std::to_string(i));
    ++scaled;

    const auto findings = compliance::compliance_report(s, compliance::ComplianceOptions::from_policy(s.policy));
    SolveOptions parallel;
    parallel.threads = 4;
    const auto a = io::emit_report(io::SolvePayload{s, base, findings, std::nullopt}, io::Format::Json);
    const auto b = io::emit_report(io::SolvePayload{s, solve(s), findings, std::nullopt}, io::Format::Json);
    const auto p = io::emit_report(io::SolvePayload{s, solve(s, parallel), findings, std::nullopt}, io::Format::Json);
    c.expect(a == b && a == p, "report bytes differ in case " + std::to_string(i));
    ++reports;
  }
  for (const char* name : {"apidra_cvs_2018.json", "lantus_cvs_2018.json"}) {
    const std::string cmd = std::string(FORMWDP_CLI_PATH) + " solve " + fixture_path(name) + " --format json";
    c.expect(run_command(cmd + " --threads 1").out == run_command(cmd + " --threads 4").out,
             std::string("CLI report differs across threads for ") + name);
  }
  c.detail << mono << " monotonicity, " << scaled << " scaling, " << reports << " report checks";
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Check()>> criteria[] = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    std::cout << name << ' ' << (c.ok ? "PASS" : "FAIL") << "  " << c.detail.str() << '\n';
    failed += c.ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
