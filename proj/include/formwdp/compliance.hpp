#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "formwdp/domain.hpp"
#include "formwdp/duopoly.hpp"

namespace formwdp::compliance {

enum class RuleId { BidDownLimit, LdBelowMinimum, NonlinearBasis, SubadditivityWarning, BundleDominated };
enum class Severity { Reject, Warn };

constexpr std::string_view to_string(RuleId r) noexcept {
  switch (r) {
    case RuleId::BidDownLimit: return "BID_DOWN_LIMIT";
    case RuleId::LdBelowMinimum: return "LD_BELOW_MINIMUM";
    case RuleId::NonlinearBasis: return "NONLINEAR_BASIS";
    case RuleId::SubadditivityWarning: return "SUBADDITIVITY_WARNING";
    case RuleId::BundleDominated: return "BUNDLE_DOMINATED";
  }
  return "?";
}

constexpr std::string_view to_string(Severity s) noexcept { return s == Severity::Reject ? "reject" : "warn"; }

/// Observed and threshold always share one unit; both are absent for
/// findings without a numeric test (nonlinear bid terms).
using Measure = std::variant<Rate, Money>;

struct ComplianceFinding {
  RuleId rule = RuleId::BidDownLimit;
  Severity severity = Severity::Reject;
  std::string drug_id;
  std::optional<Measure> observed;
  std::optional<Measure> threshold;
  std::string explanation;
};

/// Shared-position rates must stay at or above (1 - delta) times the
/// exclusive rate. Vacuous without an exclusive rate.
inline std::vector<ComplianceFinding> check_bid_down(const BidMenu& menu, const Rate& delta) {
  std::vector<ComplianceFinding> out;
  const auto exclusive = menu.exclusive_rate();
  if (!exclusive) return out;
  const Rate floor = (one_rate() - delta) * *exclusive;
  for (const auto& [k, rate] : menu.preferred_rates) {
    if (k < 2 || rate >= floor) continue;
    out.push_back({RuleId::BidDownLimit, Severity::Reject, menu.drug_id, rate, floor,
                   "1-of-" + std::to_string(k) + " bid " + format_percent(rate, 2) + " falls below " +
                       format_percent(floor, 2) + " (exclusive " + format_percent(*exclusive, 2) +
                       " less a " + format_percent(delta, 2) + " bid-down limit)"});
  }
  return out;
}

/// Each exclusionary increment must cover the tier-3 rebates lost by
/// excluding rather than tiering the competitor.
inline std::vector<ComplianceFinding> check_ld(const BidMenu& menu, const Rate& delta, const Rate& t3_share) {
  std::vector<ComplianceFinding> out;
  const auto exclusive = menu.exclusive_rate();
  if (!exclusive) return out;
  const Rate minimum = duopoly::ld_minimum(*exclusive, delta, t3_share);
  for (std::size_t o = 0; o < menu.exclusionary_options.size(); ++o) {
    const auto& opt = menu.exclusionary_options[o];
    if (opt.incremental_rate >= minimum) continue;
    std::string named;
    for (const auto& c : opt.excluded_competitors) named += (named.empty() ? "" : ", ") + c;
    out.push_back({RuleId::LdBelowMinimum, Severity::Reject, menu.drug_id, opt.incremental_rate, minimum,
                   "exclusionary option " + std::to_string(o) + " (excludes " + named + ") offers " +
                       format_percent(opt.incremental_rate, 2) + ", below the " + format_percent(minimum, 2) +
                       " minimum"});
  }
  return out;
}

namespace detail {

// Key fragments that mark lump-sum, share-contingent or cross-drug terms.
inline constexpr std::array<std::string_view, 10> kNonlinearMarkers = {
    "lump_sum", "bundle",    "market_share", "share_tier", "tiers",
    "tied",     "portfolio", "cross_drug",   "contingent", "growth_guarantee",
};

inline void scan_nonlinear(const nlohmann::json& node, const std::string& path, std::vector<std::string>& found) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      const bool hit = std::any_of(kNonlinearMarkers.begin(), kNonlinearMarkers.end(),
                                   [&](std::string_view m) { return it.key().find(m) != std::string::npos; });
      if (hit) {
        found.push_back(child);
      } else {
        scan_nonlinear(it.value(), child, found);
      }
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      scan_nonlinear(node[i], path + "[" + std::to_string(i) + "]", found);
    }
  }
}

}  // namespace detail

/// Field paths inside a raw menu object that carry non-linear bid terms.
inline std::vector<std::string> nonlinear_fields(const nlohmann::json& raw_menu) {
  std::vector<std::string> found;
  detail::scan_nonlinear(raw_menu, "", found);
  return found;
}

/// Works on the raw document, before validation strips anything.
inline std::vector<ComplianceFinding> check_linear_basis(const nlohmann::json& raw_menu) {
  std::vector<ComplianceFinding> out;
  std::string drug = "?";
  if (raw_menu.is_object() && raw_menu.contains("id") && raw_menu["id"].is_string()) {
    drug = raw_menu["id"].get<std::string>();
  }
  for (const auto& field : nonlinear_fields(raw_menu)) {
    out.push_back({RuleId::NonlinearBasis, Severity::Reject, drug, std::nullopt, std::nullopt,
                   "non-linear bid term '" + field + "'; only unit %-off-WAC bids are allowed"});
  }
  return out;
}

/// Warns wherever a rate rises with the number of drugs sharing the position.
inline std::vector<ComplianceFinding> check_subadditivity(const BidMenu& menu) {
  std::vector<ComplianceFinding> out;
  const std::pair<const int, Rate>* prev = nullptr;
  for (const auto& entry : menu.preferred_rates) {
    if (prev && entry.second > prev->second) {
      out.push_back({RuleId::SubadditivityWarning, Severity::Warn, menu.drug_id, entry.second, prev->second,
                     FormularyStatus::preferred(entry.first).label() + " rate " + format_percent(entry.second, 2) +
                         " exceeds " + FormularyStatus::preferred(prev->first).label() + " rate " +
                         format_percent(prev->second, 2)});
    }
    prev = &entry;
  }
  return out;
}

struct BundleOffer {
  Money bundled_rebate_total;  // per year
  std::string tying_drug;
  std::vector<std::string> tied_drugs;
  Money market_gross;  // per year
  Rate pbm_share;
  Rate expected_winning_rate;
};

struct BundleComparison {
  Money standard_proceeds;
  Money bundle_total;
  std::optional<ComplianceFinding> finding;
};

/// What a standard single-drug auction would have raised versus the bundle.
inline BundleComparison bundle_counterfactual(const BundleOffer& offer) {
  if (offer.bundled_rebate_total.sign() <= 0 || offer.market_gross.sign() <= 0) {
    throw Error(ErrorCode::InvalidValue, "bundle and market totals must be positive");
  }
  if (!in_unit_interval(offer.pbm_share) || !in_unit_interval(offer.expected_winning_rate)) {
    throw Error(ErrorCode::RateOutOfRange, "share and winning rate must lie in [0, 1]");
  }
  BundleComparison out;
  out.standard_proceeds = offer.market_gross * offer.pbm_share * offer.expected_winning_rate;
  out.bundle_total = offer.bundled_rebate_total;
  if (out.standard_proceeds >= out.bundle_total) {
    out.finding = ComplianceFinding{
        RuleId::BundleDominated, Severity::Reject, offer.tying_drug.empty() ? "bundle" : offer.tying_drug,
        out.standard_proceeds, out.bundle_total,
        "a standard auction at " + format_percent(offer.expected_winning_rate) + " off WAC raises $" +
            format_money(out.standard_proceeds) + ", at least the $" + format_money(out.bundle_total) +
            " bundled rebate"};
  }
  return out;
}

struct ComplianceOptions {
  Rate bid_down_limit = from_basis_points(1000);
  Rate tier3_share = from_basis_points(1000);
  /// Per-manufacturer overrides of the bid-down limit.
  std::map<std::string, Rate> manufacturer_bid_down_limit;

  static ComplianceOptions from_policy(const Policy& p) { return {p.bid_down_limit, p.tier3_share, {}}; }

  [[nodiscard]] Rate limit_for(const std::string& manufacturer) const {
    auto it = manufacturer_bid_down_limit.find(manufacturer);
    return it == manufacturer_bid_down_limit.end() ? bid_down_limit : it->second;
  }
};

/// Rejects first, then rule id, then drug id; generation order breaks the
/// remaining ties.
inline void sort_findings(std::vector<ComplianceFinding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), [](const ComplianceFinding& a, const ComplianceFinding& b) {
    if (a.severity != b.severity) return a.severity == Severity::Reject;
    if (a.rule != b.rule) return to_string(a.rule) < to_string(b.rule);
    return a.drug_id < b.drug_id;
  });
}

inline std::vector<ComplianceFinding> compliance_report(const Scenario& scenario, const ComplianceOptions& options) {
  std::vector<ComplianceFinding> all;
  auto append = [&all](std::vector<ComplianceFinding>&& part) {
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  for (const auto& menu : scenario.menus) {
    const Rate delta = options.limit_for(menu.manufacturer_id);
    append(check_bid_down(menu, delta));
    append(check_ld(menu, delta, options.tier3_share));
    append(check_subadditivity(menu));
  }
  sort_findings(all);
  return all;
}

inline bool has_reject(const std::vector<ComplianceFinding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const ComplianceFinding& f) { return f.severity == Severity::Reject; });
}

}  // namespace formwdp::compliance
