#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "formwdp/error.hpp"
#include "formwdp/quantity.hpp"

namespace formwdp {

/// A drug's formulary position. Exclusive is PreferredAmong(1).
class FormularyStatus {
 public:
  enum class Kind : std::uint8_t { Preferred, Tier3, Excluded };

  static constexpr FormularyStatus exclusive() noexcept { return FormularyStatus(Kind::Preferred, 1); }
  static constexpr FormularyStatus preferred(int among) noexcept {
    return FormularyStatus(Kind::Preferred, among);
  }
  static constexpr FormularyStatus tier3() noexcept { return FormularyStatus(Kind::Tier3, 0); }
  static constexpr FormularyStatus excluded() noexcept { return FormularyStatus(Kind::Excluded, 0); }

  [[nodiscard]] constexpr Kind kind() const noexcept { return kind_; }
  /// Number of drugs sharing the preferred position; 0 unless Preferred.
  [[nodiscard]] constexpr int among() const noexcept { return among_; }
  [[nodiscard]] constexpr bool is_preferred() const noexcept { return kind_ == Kind::Preferred; }
  [[nodiscard]] constexpr bool is_exclusive() const noexcept { return is_preferred() && among_ == 1; }

  /// "exclusive", "1_of_3", "tier3", "excluded".
  [[nodiscard]] std::string label() const {
    switch (kind_) {
      case Kind::Preferred:
        return among_ == 1 ? "exclusive" : "1_of_" + std::to_string(among_);
      case Kind::Tier3: return "tier3";
      case Kind::Excluded: return "excluded";
    }
    return "?";
  }

  friend constexpr auto operator<=>(const FormularyStatus&, const FormularyStatus&) = default;

 private:
  constexpr FormularyStatus(Kind kind, int among) noexcept : kind_(kind), among_(among) {}

  Kind kind_;
  int among_;
};

constexpr std::string_view kind_name(FormularyStatus::Kind kind) noexcept {
  switch (kind) {
    case FormularyStatus::Kind::Preferred: return "preferred";
    case FormularyStatus::Kind::Tier3: return "tier3";
    case FormularyStatus::Kind::Excluded: return "excluded";
  }
  return "?";
}

inline std::optional<FormularyStatus::Kind> parse_kind(std::string_view text) noexcept {
  if (text == "preferred") return FormularyStatus::Kind::Preferred;
  if (text == "tier3") return FormularyStatus::Kind::Tier3;
  if (text == "excluded") return FormularyStatus::Kind::Excluded;
  return std::nullopt;
}

/// Incremental rebate offered if every named competitor is excluded.
struct ExclusionaryOption {
  std::vector<std::string> excluded_competitors;  // sorted, unique after validation
  Rate incremental_rate;

  friend bool operator==(const ExclusionaryOption&, const ExclusionaryOption&) = default;
};

/// Echoed verbatim in reports; never priced.
struct PriceProtection {
  Rate factor;
  std::string baseline_wac_date;
  std::string year_start_date;

  friend bool operator==(const PriceProtection&, const PriceProtection&) = default;
};

/// One drug's rate schedule. Only linear %-off-WAC terms are representable.
struct BidMenu {
  std::string drug_id;
  std::string manufacturer_id;
  Money wac_per_unit;
  std::map<int, Rate> preferred_rates;  // among -> rate; 1 is exclusive
  std::optional<Rate> tier3_rate;
  std::optional<Rate> admin_fee;
  std::optional<PriceProtection> price_protection;
  std::vector<ExclusionaryOption> exclusionary_options;

  [[nodiscard]] std::optional<Rate> base_rate(FormularyStatus status) const {
    switch (status.kind()) {
      case FormularyStatus::Kind::Preferred: {
        auto it = preferred_rates.find(status.among());
        if (it == preferred_rates.end()) return std::nullopt;
        return it->second;
      }
      case FormularyStatus::Kind::Tier3: return tier3_rate;
      case FormularyStatus::Kind::Excluded: return std::nullopt;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::optional<Rate> exclusive_rate() const {
    return base_rate(FormularyStatus::exclusive());
  }

  friend bool operator==(const BidMenu&, const BidMenu&) = default;
};

/// Explicit per-assignment shares keyed by the drugs' status kinds.
struct ShareTableEntry {
  std::map<std::string, FormularyStatus::Kind> statuses;
  std::map<std::string, Rate> shares;  // excluded drugs may be omitted

  friend bool operator==(const ShareTableEntry&, const ShareTableEntry&) = default;
};

struct TableShares {
  std::vector<ShareTableEntry> entries;

  friend bool operator==(const TableShares&, const TableShares&) = default;
};

/// Tier3 drugs get a fixed share; preferred drugs split the rest in
/// proportion to their standalone weights.
struct ProportionalShares {
  std::map<std::string, Rate> weights;
  std::optional<Rate> tier3_share;  // falls back to Policy::tier3_share

  friend bool operator==(const ProportionalShares&, const ProportionalShares&) = default;
};

using ShareModel = std::variant<TableShares, ProportionalShares>;

struct Policy {
  Rate bid_down_limit = from_basis_points(1000);
  Rate tier3_share = from_basis_points(1000);
  bool count_admin_fee_in_cost = false;

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct Objective {
  /// Weight on gross rebates: objective = sponsor_cost - weight * gross_rebates.
  Rate gross_rebate_weight;

  friend bool operator==(const Objective&, const Objective&) = default;
};

/// One therapeutic class: market size, bid menus, share model and policy.
/// After validation, menus are sorted by drug id.
struct Scenario {
  std::string class_name;
  std::string description;
  std::int64_t total_units = 0;
  std::vector<BidMenu> menus;
  ShareModel share_model = ProportionalShares{};
  Policy policy;
  Objective objective;

  [[nodiscard]] std::optional<std::size_t> menu_index(std::string_view drug_id) const {
    for (std::size_t i = 0; i < menus.size(); ++i) {
      if (menus[i].drug_id == drug_id) return i;
    }
    return std::nullopt;
  }

  /// Effective tier3 share for the proportional model.
  [[nodiscard]] Rate tier3_share() const {
    if (const auto* p = std::get_if<ProportionalShares>(&share_model); p && p->tier3_share) {
      return *p->tier3_share;
    }
    return policy.tier3_share;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct LdActivation {
  std::size_t menu = 0;
  std::size_t option = 0;

  friend constexpr auto operator<=>(const LdActivation&, const LdActivation&) = default;
};

/// A status per menu (aligned with Scenario::menus) plus active LD options.
struct Assignment {
  std::vector<FormularyStatus> statuses;
  std::vector<LdActivation> active_ld;  // sorted

  [[nodiscard]] int preferred_count() const {
    return static_cast<int>(std::count_if(statuses.begin(), statuses.end(),
                                          [](const FormularyStatus& s) { return s.is_preferred(); }));
  }

  [[nodiscard]] std::vector<std::size_t> active_options_for(std::size_t menu) const {
    std::vector<std::size_t> out;
    for (const auto& ld : active_ld) {
      if (ld.menu == menu) out.push_back(ld.option);
    }
    return out;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Canonical share-table key: "a=preferred;b=excluded;c=tier3", drug ids ascending.
inline std::string share_key(const std::map<std::string, FormularyStatus::Kind>& statuses) {
  std::string key;
  for (const auto& [id, kind] : statuses) {
    if (!key.empty()) key += ';';
    key += id;
    key += '=';
    key += kind_name(kind);
  }
  return key;
}

inline std::string share_key(const Assignment& a, const Scenario& s) {
  std::map<std::string, FormularyStatus::Kind> statuses;
  for (std::size_t i = 0; i < s.menus.size(); ++i) statuses[s.menus[i].drug_id] = a.statuses[i].kind();
  return share_key(statuses);
}

/// Human-readable, unique per assignment: "a=exclusive+ld0;b=excluded".
inline std::string assignment_label(const Assignment& a, const Scenario& s) {
  std::string out;
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    if (!out.empty()) out += ';';
    out += s.menus[i].drug_id + "=" + a.statuses[i].label();
    for (auto opt : a.active_options_for(i)) out += "+ld" + std::to_string(opt);
  }
  return out;
}

/// Checks the Assignment invariants against a scenario.
inline bool is_feasible(const Assignment& a, const Scenario& s) {
  if (a.statuses.size() != s.menus.size()) return false;
  const int k = a.preferred_count();
  if (k == 0) return false;
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    const auto& st = a.statuses[i];
    if (st.is_preferred() && st.among() != k) return false;
    if (st.kind() != FormularyStatus::Kind::Excluded && !s.menus[i].base_rate(st)) return false;
  }
  if (!std::is_sorted(a.active_ld.begin(), a.active_ld.end())) return false;
  if (std::adjacent_find(a.active_ld.begin(), a.active_ld.end()) != a.active_ld.end()) return false;
  for (const auto& ld : a.active_ld) {
    if (ld.menu >= s.menus.size() || !a.statuses[ld.menu].is_preferred()) return false;
    const auto& options = s.menus[ld.menu].exclusionary_options;
    if (ld.option >= options.size()) return false;
    for (const auto& competitor : options[ld.option].excluded_competitors) {
      auto idx = s.menu_index(competitor);
      if (!idx || a.statuses[*idx].kind() != FormularyStatus::Kind::Excluded) return false;
    }
  }
  return true;
}

/// A lump-sum, share-contingent or cross-drug term found in a raw menu.
struct NonlinearTerm {
  std::string drug_id;
  std::string field;
};

/// Scenario as parsed, before semantic checks.
struct ScenarioDraft {
  Scenario scenario;
  std::vector<NonlinearTerm> nonlinear_terms;
};

struct ValidationOptions {
  /// When false, nonlinear terms are left to the compliance battery.
  bool reject_nonlinear_terms = true;
};

struct ValidationResult {
  std::optional<Scenario> scenario;
  std::vector<ValidationError> errors;

  [[nodiscard]] bool ok() const noexcept { return scenario.has_value(); }
};

namespace detail {

inline std::string menu_path(std::size_t i) { return "drugs[" + std::to_string(i) + "]"; }

inline void check_rate(const Rate& r, const std::string& path, std::vector<ValidationError>& errors) {
  if (!in_unit_interval(r)) {
    errors.push_back({ErrorCode::RateOutOfRange, path, "rate " + r.value().to_string() + " outside [0, 1]"});
  } else if (!at_basis_point_resolution(r)) {
    errors.push_back({ErrorCode::RatePrecision, path,
                      "rate " + r.value().to_string() + " finer than a basis point"});
  }
}

inline void validate_table(const TableShares& table, const Scenario& s,
                           std::vector<ValidationError>& errors) {
  std::set<std::string> keys;
  for (std::size_t e = 0; e < table.entries.size(); ++e) {
    const auto& entry = table.entries[e];
    const std::string path = "share_model.entries[" + std::to_string(e) + "]";
    bool complete = entry.statuses.size() == s.menus.size();
    for (const auto& [id, kind] : entry.statuses) {
      if (!s.menu_index(id)) {
        errors.push_back({ErrorCode::InvalidShareModel, path + ".statuses", "unknown drug '" + id + "'"});
        complete = false;
      }
    }
    if (!complete) {
      errors.push_back({ErrorCode::InvalidShareModel, path + ".statuses",
                        "entry must give a status for every drug"});
      continue;
    }
    if (!keys.insert(share_key(entry.statuses)).second) {
      errors.push_back({ErrorCode::InvalidShareModel, path, "duplicate assignment entry"});
    }
    Rate sum;
    for (const auto& [id, share] : entry.shares) {
      auto st = entry.statuses.find(id);
      if (st == entry.statuses.end()) {
        errors.push_back({ErrorCode::InvalidShareModel, path + ".shares." + id, "unknown drug"});
        continue;
      }
      check_rate(share, path + ".shares." + id, errors);
      if (st->second == FormularyStatus::Kind::Excluded && !share.is_zero()) {
        errors.push_back({ErrorCode::ShareSum, path + ".shares." + id, "excluded drug must carry zero share"});
      }
      sum += share;
    }
    if (sum != one_rate()) {
      errors.push_back({ErrorCode::ShareSum, path + ".shares",
                        "shares sum to " + sum.value().to_string() + ", expected exactly 1"});
    }
  }
}

inline void validate_proportional(const ProportionalShares& p, const Scenario& s,
                                  std::vector<ValidationError>& errors) {
  for (const auto& menu : s.menus) {
    auto it = p.weights.find(menu.drug_id);
    if (it == p.weights.end()) {
      errors.push_back({ErrorCode::InvalidShareModel, "share_model.weights",
                        "missing weight for '" + menu.drug_id + "'"});
    } else if (it->second.sign() <= 0) {
      errors.push_back({ErrorCode::InvalidShareModel, "share_model.weights." + menu.drug_id,
                        "weight must be strictly positive"});
    } else {
      check_rate(it->second, "share_model.weights." + menu.drug_id, errors);
    }
  }
  for (const auto& [id, w] : p.weights) {
    if (!s.menu_index(id)) {
      errors.push_back({ErrorCode::InvalidShareModel, "share_model.weights." + id, "unknown drug"});
    }
  }
  const Rate t3 = p.tier3_share.value_or(s.policy.tier3_share);
  check_rate(t3, "share_model.tier3_share", errors);
  // At least one drug stays preferred, so at most n-1 can sit in tier 3.
  const auto tier3_capable = static_cast<std::int64_t>(
      std::count_if(s.menus.begin(), s.menus.end(), [](const BidMenu& m) { return m.tier3_rate.has_value(); }));
  const std::int64_t max_tier3 =
      std::min<std::int64_t>(tier3_capable, static_cast<std::int64_t>(s.menus.size()) - 1);
  if (max_tier3 > 0 && t3 * Rate(max_tier3) >= one_rate()) {
    errors.push_back({ErrorCode::InvalidShareModel, "share_model.tier3_share",
                      "tier3 share times the number of tier3-capable drugs must stay below 1"});
  }
}

}  // namespace detail

/// Checks every type invariant and returns either the normalized scenario
/// (menus sorted by drug id, competitor lists sorted) or the complete list of
/// problems found.
inline ValidationResult validate_scenario(const ScenarioDraft& draft, const ValidationOptions& options = {}) {
  using detail::check_rate;
  using detail::menu_path;
  std::vector<ValidationError> errors;
  Scenario s = draft.scenario;

  if (s.total_units <= 0) {
    errors.push_back({ErrorCode::InvalidValue, "total_units", "total market units must be positive"});
  }
  if (s.menus.empty()) {
    errors.push_back({ErrorCode::InvalidValue, "drugs", "scenario needs at least one bid menu"});
  }
  check_rate(s.policy.bid_down_limit, "policy.bid_down_limit", errors);
  check_rate(s.policy.tier3_share, "policy.tier3_share", errors);
  check_rate(s.objective.gross_rebate_weight, "objective.gross_rebate_weight", errors);

  std::map<std::string, std::string> manufacturer_of;
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    const auto& m = s.menus[i];
    if (m.drug_id.empty()) {
      errors.push_back({ErrorCode::InvalidValue, menu_path(i) + ".id", "drug id must be non-empty"});
    }
    if (!manufacturer_of.emplace(m.drug_id, m.manufacturer_id).second) {
      errors.push_back({ErrorCode::DuplicateDrug, menu_path(i) + ".id", "duplicate drug id '" + m.drug_id + "'"});
    }
  }

  const int n = static_cast<int>(s.menus.size());
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    auto& m = s.menus[i];
    const std::string path = menu_path(i);
    if (m.manufacturer_id.empty()) {
      errors.push_back({ErrorCode::InvalidValue, path + ".manufacturer", "manufacturer must be non-empty"});
    }
    if (m.wac_per_unit.sign() <= 0) {
      errors.push_back({ErrorCode::InvalidValue, path + ".wac_per_unit", "WAC must be positive"});
    }
    if (m.preferred_rates.empty()) {
      errors.push_back({ErrorCode::MissingPreferredRate, path + ".bids",
                        "menu must offer an exclusive or shared preferred rate"});
    }
    for (const auto& [k, rate] : m.preferred_rates) {
      const std::string rpath = path + ".bids." + FormularyStatus::preferred(k).label();
      if (k < 1 || k > n) {
        errors.push_back({ErrorCode::StatusOutOfRange, rpath,
                          "1-of-" + std::to_string(k) + " status impossible with " + std::to_string(n) + " drugs"});
      }
      check_rate(rate, rpath, errors);
    }
    if (m.tier3_rate) check_rate(*m.tier3_rate, path + ".bids.tier3", errors);
    if (m.admin_fee) check_rate(*m.admin_fee, path + ".admin_fee", errors);
    if (m.price_protection) check_rate(m.price_protection->factor, path + ".price_protection.factor", errors);

    for (std::size_t o = 0; o < m.exclusionary_options.size(); ++o) {
      auto& opt = m.exclusionary_options[o];
      const std::string opath = path + ".exclusionary[" + std::to_string(o) + "]";
      check_rate(opt.incremental_rate, opath + ".incremental_rate", errors);
      std::sort(opt.excluded_competitors.begin(), opt.excluded_competitors.end());
      opt.excluded_competitors.erase(
          std::unique(opt.excluded_competitors.begin(), opt.excluded_competitors.end()),
          opt.excluded_competitors.end());
      if (opt.excluded_competitors.empty()) {
        errors.push_back({ErrorCode::InvalidCompetitor, opath + ".excludes", "must name at least one competitor"});
      }
      for (const auto& c : opt.excluded_competitors) {
        auto it = manufacturer_of.find(c);
        if (it == manufacturer_of.end()) {
          errors.push_back({ErrorCode::UnknownCompetitor, opath + ".excludes", "no drug '" + c + "' in scenario"});
        } else if (it->second == m.manufacturer_id) {
          errors.push_back({ErrorCode::InvalidCompetitor, opath + ".excludes",
                            "'" + c + "' belongs to the bidder's own manufacturer"});
        }
      }
    }
  }

  if (options.reject_nonlinear_terms) {
    for (const auto& term : draft.nonlinear_terms) {
      errors.push_back({ErrorCode::NonlinearTerm, "drugs." + term.drug_id + "." + term.field,
                        "only linear %-off-WAC bids are accepted"});
    }
  }

  std::stable_sort(s.menus.begin(), s.menus.end(),
                   [](const BidMenu& a, const BidMenu& b) { return a.drug_id < b.drug_id; });

  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, TableShares>) {
          detail::validate_table(model, s, errors);
        } else {
          detail::validate_proportional(model, s, errors);
        }
      },
      s.share_model);

  if (!errors.empty()) return {std::nullopt, std::move(errors)};
  return {std::move(s), {}};
}

inline ValidationResult validate_scenario(const Scenario& scenario, const ValidationOptions& options = {}) {
  return validate_scenario(ScenarioDraft{scenario, {}}, options);
}

/// Validates or throws an Error carrying the first problem.
inline Scenario validated(const Scenario& scenario) {
  auto result = validate_scenario(scenario);
  if (!result.ok()) throw Error(result.errors.front().code, result.errors.front().to_string());
  return std::move(*result.scenario);
}

}  // namespace formwdp
