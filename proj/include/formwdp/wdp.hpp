#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "formwdp/domain.hpp"
#include "formwdp/pricing.hpp"

namespace formwdp {

struct SolveOptions {
  std::size_t max_drugs = 12;
  /// Cap on simultaneously activatable exclusionary options per status
  /// pattern; each one doubles the assignment count.
  std::size_t max_activatable_ld = 16;
  unsigned threads = 1;
};

/// Every feasible assignment, in a fixed order: status patterns vary the last
/// drug fastest over (preferred, tier3, excluded); within a pattern, LD subsets
/// follow their bitmask order.
inline std::vector<Assignment> enumerate_assignments(const Scenario& s, const SolveOptions& options = {}) {
  using Kind = FormularyStatus::Kind;
  const std::size_t n = s.menus.size();
  if (n > options.max_drugs) {
    throw Error(ErrorCode::TooLarge, std::to_string(n) + " drugs exceeds the enumeration cap of " +
                                         std::to_string(options.max_drugs));
  }
  std::vector<std::vector<Kind>> choices(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.menus[i].preferred_rates.empty()) choices[i].push_back(Kind::Preferred);
    if (s.menus[i].tier3_rate) choices[i].push_back(Kind::Tier3);
    choices[i].push_back(Kind::Excluded);
  }

  std::vector<Assignment> out;
  std::vector<std::size_t> digit(n, 0);
  bool done = n == 0;
  while (!done) {
    int k = 0;
    for (std::size_t i = 0; i < n; ++i) k += choices[i][digit[i]] == Kind::Preferred ? 1 : 0;
    bool feasible = k > 0;
    Assignment base;
    base.statuses.reserve(n);
    for (std::size_t i = 0; i < n && feasible; ++i) {
      switch (choices[i][digit[i]]) {
        case Kind::Preferred:
          feasible = s.menus[i].preferred_rates.count(k) > 0;
          base.statuses.push_back(FormularyStatus::preferred(k));
          break;
        case Kind::Tier3: base.statuses.push_back(FormularyStatus::tier3()); break;
        case Kind::Excluded: base.statuses.push_back(FormularyStatus::excluded()); break;
      }
    }
    if (feasible) {
      std::vector<LdActivation> activatable;
      for (std::size_t i = 0; i < n; ++i) {
        if (!base.statuses[i].is_preferred()) continue;
        const auto& opts = s.menus[i].exclusionary_options;
        for (std::size_t o = 0; o < opts.size(); ++o) {
          const bool all_out = std::all_of(
              opts[o].excluded_competitors.begin(), opts[o].excluded_competitors.end(), [&](const std::string& c) {
                auto idx = s.menu_index(c);
                return idx && base.statuses[*idx].kind() == Kind::Excluded;
              });
          if (all_out) activatable.push_back({i, o});
        }
      }
      if (activatable.size() > options.max_activatable_ld) {
        throw Error(ErrorCode::TooLarge, std::to_string(activatable.size()) +
                                             " simultaneously activatable exclusionary options");
      }
      const std::uint64_t subsets = std::uint64_t{1} << activatable.size();
      for (std::uint64_t mask = 0; mask < subsets; ++mask) {
        Assignment a = base;
        for (std::size_t b = 0; b < activatable.size(); ++b) {
          if (mask & (std::uint64_t{1} << b)) a.active_ld.push_back(activatable[b]);
        }
        out.push_back(std::move(a));
      }
    }
    // odometer, last drug fastest
    for (std::size_t pos = n;;) {
      if (pos == 0) {
        done = true;
        break;
      }
      --pos;
      if (++digit[pos] < choices[pos].size()) break;
      digit[pos] = 0;
    }
  }
  if (out.empty()) throw Error(ErrorCode::NoFeasibleAssignment, "no drug can take a preferred position");
  return out;
}

namespace detail {

inline std::vector<Rate> table_shares(const Assignment& a, const Scenario& s, const ShareTableEntry& entry) {
  std::vector<Rate> shares(s.menus.size());
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    if (a.statuses[i].kind() == FormularyStatus::Kind::Excluded) continue;
    auto it = entry.shares.find(s.menus[i].drug_id);
    if (it != entry.shares.end()) shares[i] = it->second;
  }
  return shares;
}

/// Largest-remainder split at basis-point resolution so shares sum to exactly
/// one. Equal remainders go to the earlier drug id.
inline std::vector<Rate> proportional_shares(const Assignment& a, const Scenario& s, const ProportionalShares& p) {
  const std::size_t n = s.menus.size();
  const auto t3_bp = basis_points(s.tier3_share());
  if (!t3_bp) throw Error(ErrorCode::RatePrecision, "tier3 share finer than a basis point");
  std::vector<std::int64_t> bp(n, 0);
  std::vector<std::size_t> preferred;
  std::int64_t remainder = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    switch (a.statuses[i].kind()) {
      case FormularyStatus::Kind::Tier3:
        bp[i] = *t3_bp;
        remainder -= *t3_bp;
        break;
      case FormularyStatus::Kind::Preferred: preferred.push_back(i); break;
      case FormularyStatus::Kind::Excluded: break;
    }
  }
  std::vector<std::int64_t> weight(n, 0);
  std::int64_t total_weight = 0;
  for (std::size_t i : preferred) {
    auto it = p.weights.find(s.menus[i].drug_id);
    const auto w = it == p.weights.end() ? std::optional<std::int64_t>{0} : basis_points(it->second);
    if (!w) throw Error(ErrorCode::RatePrecision, "weight finer than a basis point");
    weight[i] = *w;
    total_weight += *w;
  }
  if (total_weight <= 0) {
    throw Error(ErrorCode::WeightsDegenerate, "preferred drugs have zero total weight");
  }
  std::vector<std::int64_t> frac(n, 0);
  std::int64_t handed_out = 0;
  for (std::size_t i : preferred) {
    const std::int64_t num = remainder * weight[i];
    bp[i] = num / total_weight;
    frac[i] = num % total_weight;
    handed_out += bp[i];
  }
  std::vector<std::size_t> order = preferred;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return frac[x] > frac[y]; });
  for (std::int64_t left = remainder - handed_out, j = 0; left > 0; --left, ++j) {
    ++bp[order[static_cast<std::size_t>(j)]];
  }
  std::vector<Rate> shares;
  shares.reserve(n);
  for (auto v : bp) shares.push_back(from_basis_points(v));
  return shares;
}

inline const ShareTableEntry* find_entry(const TableShares& table, const std::string& key) {
  for (const auto& e : table.entries) {
    if (share_key(e.statuses) == key) return &e;
  }
  return nullptr;
}

}  // namespace detail

/// Expected share per drug (aligned with scenario menus) for an assignment.
inline std::vector<Rate> shares_for(const Assignment& a, const Scenario& s) {
  if (const auto* table = std::get_if<TableShares>(&s.share_model)) {
    const std::string key = share_key(a, s);
    const auto* entry = detail::find_entry(*table, key);
    if (!entry) throw Error(ErrorCode::ShareKeyMissing, "share table has no entry for " + key);
    return detail::table_shares(a, s, *entry);
  }
  return detail::proportional_shares(a, s, std::get<ProportionalShares>(s.share_model));
}

struct CostBreakdown {
  Money sponsor_cost;
  Money gross_rebate_total;
  std::vector<Rate> effective_rates;  // zero for excluded drugs
  std::vector<std::string> warnings;
};

/// Sponsor cost = sum share * T * WAC * (1 - effective rate); gross rebates
/// the complementary sum.
inline CostBreakdown expected_sponsor_cost(const Assignment& a, const Scenario& s, const std::vector<Rate>& shares) {
  CostBreakdown out;
  out.effective_rates.resize(s.menus.size());
  const Decimal units(s.total_units);
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    const auto& menu = s.menus[i];
    if (a.statuses[i].kind() == FormularyStatus::Kind::Excluded) continue;
    const auto active = a.active_options_for(i);
    const EffectiveRate eff = effective_rebate_rate(menu, a.statuses[i], active, s.policy);
    out.effective_rates[i] = eff.value;
    const Money gross = menu.wac_per_unit * shares[i] * units;
    out.sponsor_cost += gross * (one_rate() - eff.value);
    out.gross_rebate_total += gross * eff.value;
    if (eff.supra_unit) {
      out.warnings.push_back("effective rebate for '" + menu.drug_id + "' is " + format_rate(eff.value) +
                             " (above 1); net unit price " +
                             format_money(net_unit_price(menu.wac_per_unit, eff.value)));
    }
  }
  return out;
}

struct AssignmentOutcome {
  Assignment assignment;
  std::string label;
  std::vector<Rate> shares;
  std::vector<Rate> effective_rates;
  Money sponsor_cost;
  Money gross_rebate_total;
  Money objective_value;
  std::vector<std::string> warnings;
};

struct DrugDelta {
  std::string drug_id;
  FormularyStatus winner_status = FormularyStatus::excluded();
  FormularyStatus alternative_status = FormularyStatus::excluded();
  Rate share_delta;
  Rate rate_delta;
};

/// Winner minus alternative: negative cost deltas are the winner's savings.
struct SwitchingEntry {
  std::size_t rank = 0;  // 1-based position of the alternative in `ranked`
  std::string label;
  Money delta_sponsor_cost;
  Money delta_gross_rebates;
  Money delta_objective;
  std::vector<DrugDelta> drugs;
};

struct SolveReport {
  std::vector<std::string> drug_ids;
  std::vector<AssignmentOutcome> ranked;
  std::vector<SwitchingEntry> switching;

  [[nodiscard]] const AssignmentOutcome& winner() const { return ranked.front(); }
};

inline AssignmentOutcome evaluate_assignment(const Assignment& a, const Scenario& s) {
  AssignmentOutcome o;
  o.assignment = a;
  o.label = assignment_label(a, s);
  o.shares = shares_for(a, s);
  auto cost = expected_sponsor_cost(a, s, o.shares);
  o.effective_rates = std::move(cost.effective_rates);
  o.sponsor_cost = cost.sponsor_cost;
  o.gross_rebate_total = cost.gross_rebate_total;
  o.objective_value = o.sponsor_cost - o.gross_rebate_total * s.objective.gross_rebate_weight;
  o.warnings = std::move(cost.warnings);
  return o;
}

/// Total order: objective, then more preferred drugs, then the smaller sorted
/// list of preferred drug ids, then fewer LD activations, then label.
inline bool outcome_precedes(const AssignmentOutcome& x, const AssignmentOutcome& y,
                             const std::vector<std::string>& drug_ids) {
  if (auto c = x.objective_value <=> y.objective_value; c != 0) return c < 0;
  const int px = x.assignment.preferred_count();
  const int py = y.assignment.preferred_count();
  if (px != py) return px > py;
  auto preferred_ids = [&](const AssignmentOutcome& o) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < drug_ids.size(); ++i) {
      if (o.assignment.statuses[i].is_preferred()) ids.push_back(drug_ids[i]);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  if (auto ix = preferred_ids(x), iy = preferred_ids(y); ix != iy) return ix < iy;
  if (x.assignment.active_ld.size() != y.assignment.active_ld.size()) {
    return x.assignment.active_ld.size() < y.assignment.active_ld.size();
  }
  return x.label < y.label;
}

inline SwitchingEntry compare_outcomes(const AssignmentOutcome& winner, const AssignmentOutcome& alt,
                                       const std::vector<std::string>& drug_ids, std::size_t rank) {
  SwitchingEntry e;
  e.rank = rank;
  e.label = alt.label;
  e.delta_sponsor_cost = winner.sponsor_cost - alt.sponsor_cost;
  e.delta_gross_rebates = winner.gross_rebate_total - alt.gross_rebate_total;
  e.delta_objective = winner.objective_value - alt.objective_value;
  for (std::size_t i = 0; i < drug_ids.size(); ++i) {
    e.drugs.push_back({drug_ids[i], winner.assignment.statuses[i], alt.assignment.statuses[i],
                       winner.shares[i] - alt.shares[i], winner.effective_rates[i] - alt.effective_rates[i]});
  }
  return e;
}

/// Incremental breakdown of every non-winning assignment against the winner.
inline std::vector<SwitchingEntry> switching_analysis(const SolveReport& report) {
  std::vector<SwitchingEntry> out;
  for (std::size_t r = 1; r < report.ranked.size(); ++r) {
    out.push_back(compare_outcomes(report.winner(), report.ranked[r], report.drug_ids, r + 1));
  }
  return out;
}

/// Evaluates every feasible assignment and ranks them. With threads > 1 the
/// evaluation is split into contiguous chunks; ranking is unaffected.
inline SolveReport solve(const Scenario& s, const SolveOptions& options = {}) {
  const auto assignments = enumerate_assignments(s, options);
  SolveReport report;
  for (const auto& m : s.menus) report.drug_ids.push_back(m.drug_id);

  std::vector<AssignmentOutcome> outcomes(assignments.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(options.threads, assignments.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < assignments.size(); ++i) outcomes[i] = evaluate_assignment(assignments[i], s);
  } else {
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (assignments.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          const std::size_t end = std::min(assignments.size(), (w + 1) * chunk);
          for (std::size_t i = w * chunk; i < end; ++i) outcomes[i] = evaluate_assignment(assignments[i], s);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  std::sort(outcomes.begin(), outcomes.end(), [&](const AssignmentOutcome& x, const AssignmentOutcome& y) {
    return outcome_precedes(x, y, report.drug_ids);
  });
  report.ranked = std::move(outcomes);
  report.switching = switching_analysis(report);
  return report;
}

}  // namespace formwdp
