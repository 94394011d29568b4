#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "formwdp/compliance.hpp"
#include "formwdp/domain.hpp"
#include "formwdp/duopoly.hpp"
#include "formwdp/financials.hpp"
#include "formwdp/wdp.hpp"

namespace formwdp::io {

inline constexpr std::string_view kSchema = "formulary-wdp/1";
inline constexpr std::string_view kToolVersion = "formwdp 1.0.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Text forms of rates and money (CLI flags)

/// "57.5%" or "0.575"; at most four decimals once normalized to a fraction.
inline std::optional<Rate> parse_rate_text(std::string_view text) {
  bool percent = false;
  if (!text.empty() && text.back() == '%') {
    percent = true;
    text.remove_suffix(1);
  }
  auto d = Decimal::parse(text);
  if (!d) return std::nullopt;
  Rate r(percent ? d->divide(Decimal(100), Decimal::kMaxScale) : *d);
  if (!at_basis_point_resolution(r)) return std::nullopt;
  return r;
}

/// "96201000", "$80M", "1,250.50", "1.5B".
inline std::optional<Money> parse_money_text(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (c != ',' && c != '$' && c != '_') clean += c;
  }
  Decimal multiplier(1);
  if (!clean.empty()) {
    switch (clean.back()) {
      case 'K': case 'k': multiplier = Decimal(1000); break;
      case 'M': case 'm': multiplier = Decimal(1000000); break;
      case 'B': case 'b': multiplier = Decimal(1000000000); break;
      default: break;
    }
    if (multiplier != Decimal(1)) clean.pop_back();
  }
  auto d = Decimal::parse(clean);
  if (!d) return std::nullopt;
  return Money(*d * multiplier);
}

// ---------------------------------------------------------------------------
// Document reading

namespace detail {

inline bool is_nonlinear_key(std::string_view key) {
  return std::any_of(compliance::detail::kNonlinearMarkers.begin(), compliance::detail::kNonlinearMarkers.end(),
                     [&](std::string_view m) { return key.find(m) != std::string_view::npos; });
}

/// Collects structural problems with their paths instead of stopping at the
/// first one.
class Reader {
 public:
  explicit Reader(std::vector<ValidationError>& errors) : errors_(errors) {}

  void fail(ErrorCode code, const std::string& path, const std::string& message) {
    errors_.push_back({code, path, message});
  }

  bool expect_object(const nlohmann::json& node, const std::string& path) {
    if (node.is_object()) return true;
    fail(ErrorCode::ParseError, path, "expected an object");
    return false;
  }

  void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                      const std::string& path, bool skip_nonlinear = false) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string& key = it.key();
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
      if (skip_nonlinear && is_nonlinear_key(key)) continue;
      fail(ErrorCode::UnknownField, join(path, key), "unknown field");
    }
  }

  std::optional<Decimal> decimal(const nlohmann::json& obj, const std::string& key, const std::string& path,
                                 bool required) {
    const std::string where = join(path, key);
    if (!obj.contains(key)) {
      if (required) fail(ErrorCode::ParseError, where, "missing required field");
      return std::nullopt;
    }
    return decimal_value(obj[key], where);
  }

  std::optional<Decimal> decimal_value(const nlohmann::json& node, const std::string& where) {
    if (!node.is_string()) {
      fail(ErrorCode::ParseError, where, "expected a decimal string such as \"0.1000\", got " +
                                             std::string(node.type_name()) + " " + node.dump());
      return std::nullopt;
    }
    auto d = Decimal::parse(node.get<std::string>());
    if (!d) fail(ErrorCode::ParseError, where, "malformed decimal string " + node.dump());
    return d;
  }

  std::optional<std::string> string(const nlohmann::json& obj, const std::string& key, const std::string& path,
                                    bool required) {
    const std::string where = join(path, key);
    if (!obj.contains(key)) {
      if (required) fail(ErrorCode::ParseError, where, "missing required field");
      return std::nullopt;
    }
    if (!obj[key].is_string()) {
      fail(ErrorCode::ParseError, where, "expected a string");
      return std::nullopt;
    }
    return obj[key].get<std::string>();
  }

  std::optional<std::int64_t> integer(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    const std::string where = join(path, key);
    if (!obj.contains(key)) {
      fail(ErrorCode::ParseError, where, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj[key];
    if (!v.is_number_integer()) {
      fail(ErrorCode::ParseError, where, "expected an integer");
      return std::nullopt;
    }
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(ErrorCode::ParseError, where, "integer out of range");
      return std::nullopt;
    }
    return v.get<std::int64_t>();
  }

  std::optional<bool> boolean(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj[key].is_boolean()) {
      fail(ErrorCode::ParseError, join(path, key), "expected true or false");
      return std::nullopt;
    }
    return obj[key].get<bool>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<ValidationError>& errors_;
};

inline std::optional<int> shared_status_among(std::string_view key) {
  constexpr std::string_view prefix = "shared_1_of_";
  if (key.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string_view digits = key.substr(prefix.size());
  if (digits.empty() || digits.size() > 3 || digits[0] == '0') return std::nullopt;
  int k = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    k = k * 10 + (c - '0');
  }
  return k >= 2 ? std::optional<int>(k) : std::nullopt;
}

inline BidMenu read_menu(Reader& r, const nlohmann::json& d, const std::string& path,
                         std::vector<NonlinearTerm>& nonlinear) {
  BidMenu m;
  if (!r.expect_object(d, path)) return m;
  r.reject_unknown(d, {"id", "manufacturer", "wac_per_unit", "bids", "admin_fee", "price_protection", "exclusionary"},
                   path, true);
  m.drug_id = r.string(d, "id", path, true).value_or("");
  m.manufacturer_id = r.string(d, "manufacturer", path, true).value_or("");
  if (auto wac = r.decimal(d, "wac_per_unit", path, true)) m.wac_per_unit = Money(*wac);

  for (const auto& field : compliance::nonlinear_fields(d)) {
    nonlinear.push_back({m.drug_id.empty() ? path : m.drug_id, field});
  }

  if (!d.contains("bids")) {
    r.fail(ErrorCode::ParseError, Reader::join(path, "bids"), "missing required field");
  } else if (const auto& bids = d["bids"]; r.expect_object(bids, Reader::join(path, "bids"))) {
    const std::string bpath = Reader::join(path, "bids");
    for (auto it = bids.begin(); it != bids.end(); ++it) {
      const std::string& key = it.key();
      if (is_nonlinear_key(key)) continue;
      std::optional<int> among;
      if (key == "exclusive") among = 1;
      else if (key != "tier3") among = shared_status_among(key);
      if (!among && key != "tier3") {
        r.fail(ErrorCode::UnknownField, Reader::join(bpath, key),
               "unknown status; expected exclusive, shared_1_of_<k> or tier3");
        continue;
      }
      auto rate = r.decimal_value(it.value(), Reader::join(bpath, key));
      if (!rate) continue;
      if (among) m.preferred_rates[*among] = Rate(*rate);
      else m.tier3_rate = Rate(*rate);
    }
  }
  if (auto fee = r.decimal(d, "admin_fee", path, false)) m.admin_fee = Rate(*fee);

  if (d.contains("price_protection")) {
    const std::string ppath = Reader::join(path, "price_protection");
    const auto& pp = d["price_protection"];
    if (r.expect_object(pp, ppath)) {
      r.reject_unknown(pp, {"factor", "baseline_wac_date", "year_start_date"}, ppath);
      PriceProtection p;
      if (auto f = r.decimal(pp, "factor", ppath, true)) p.factor = Rate(*f);
      p.baseline_wac_date = r.string(pp, "baseline_wac_date", ppath, false).value_or("");
      p.year_start_date = r.string(pp, "year_start_date", ppath, false).value_or("");
      m.price_protection = p;
    }
  }

  if (d.contains("exclusionary")) {
    const std::string epath = Reader::join(path, "exclusionary");
    const auto& list = d["exclusionary"];
    if (!list.is_array()) {
      r.fail(ErrorCode::ParseError, epath, "expected an array");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string opath = epath + "[" + std::to_string(i) + "]";
        const auto& o = list[i];
        if (!r.expect_object(o, opath)) continue;
        r.reject_unknown(o, {"excludes", "incremental_rate"}, opath);
        ExclusionaryOption opt;
        if (!o.contains("excludes") || !o["excludes"].is_array()) {
          r.fail(ErrorCode::ParseError, opath + ".excludes", "expected an array of drug ids");
        } else {
          for (const auto& c : o["excludes"]) {
            if (c.is_string()) opt.excluded_competitors.push_back(c.get<std::string>());
            else r.fail(ErrorCode::ParseError, opath + ".excludes", "drug ids must be strings");
          }
        }
        if (auto rate = r.decimal(o, "incremental_rate", opath, true)) opt.incremental_rate = Rate(*rate);
        m.exclusionary_options.push_back(std::move(opt));
      }
    }
  }
  return m;
}

inline ShareModel read_share_model(Reader& r, const nlohmann::json& sm) {
  const std::string path = "share_model";
  if (!r.expect_object(sm, path)) return ProportionalShares{};
  const auto type = r.string(sm, "type", path, true).value_or("");
  if (type == "table") {
    r.reject_unknown(sm, {"type", "entries"}, path);
    TableShares table;
    if (!sm.contains("entries") || !sm["entries"].is_array()) {
      r.fail(ErrorCode::ParseError, path + ".entries", "expected an array");
      return table;
    }
    for (std::size_t i = 0; i < sm["entries"].size(); ++i) {
      const std::string epath = path + ".entries[" + std::to_string(i) + "]";
      const auto& e = sm["entries"][i];
      if (!r.expect_object(e, epath)) continue;
      r.reject_unknown(e, {"statuses", "shares"}, epath);
      ShareTableEntry entry;
      if (e.contains("statuses") && r.expect_object(e["statuses"], epath + ".statuses")) {
        for (auto it = e["statuses"].begin(); it != e["statuses"].end(); ++it) {
          auto kind = it.value().is_string() ? parse_kind(it.value().get<std::string>()) : std::nullopt;
          if (!kind) {
            r.fail(ErrorCode::ParseError, epath + ".statuses." + it.key(),
                   "expected \"preferred\", \"tier3\" or \"excluded\"");
            continue;
          }
          entry.statuses[it.key()] = *kind;
        }
      } else if (!e.contains("statuses")) {
        r.fail(ErrorCode::ParseError, epath + ".statuses", "missing required field");
      }
      if (e.contains("shares") && r.expect_object(e["shares"], epath + ".shares")) {
        for (auto it = e["shares"].begin(); it != e["shares"].end(); ++it) {
          if (auto v = r.decimal_value(it.value(), epath + ".shares." + it.key())) entry.shares[it.key()] = Rate(*v);
        }
      } else if (!e.contains("shares")) {
        r.fail(ErrorCode::ParseError, epath + ".shares", "missing required field");
      }
      table.entries.push_back(std::move(entry));
    }
    return table;
  }
  if (type == "proportional") {
    r.reject_unknown(sm, {"type", "weights", "tier3_share"}, path);
    ProportionalShares p;
    if (!sm.contains("weights") || !sm["weights"].is_object()) {
      r.fail(ErrorCode::ParseError, path + ".weights", "expected an object of drug id to weight");
    } else {
      for (auto it = sm["weights"].begin(); it != sm["weights"].end(); ++it) {
        if (auto v = r.decimal_value(it.value(), path + ".weights." + it.key())) p.weights[it.key()] = Rate(*v);
      }
    }
    if (auto t3 = r.decimal(sm, "tier3_share", path, false)) p.tier3_share = Rate(*t3);
    return p;
  }
  r.fail(ErrorCode::ParseError, path + ".type", "expected \"table\" or \"proportional\"");
  return ProportionalShares{};
}

inline void check_schema(Reader& r, const nlohmann::json& doc) {
  auto schema = r.string(doc, "schema", "", true);
  if (schema && *schema != kSchema) {
    r.fail(ErrorCode::ParseError, "schema", "unsupported schema '" + *schema + "'");
  }
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses JSON text; on a syntax error returns nullopt and records a
/// PARSE_ERROR with line and column.
inline std::optional<nlohmann::json> parse_json(std::string_view bytes, std::vector<ValidationError>& errors) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    // byte is 1-based and points at the offending character
    const auto [line, col] = detail::line_column(bytes, e.byte == 0 ? 0 : e.byte - 1);
    errors.push_back({ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col),
                      e.what()});
    return std::nullopt;
  }
}

/// Structural pass over a scenario document. Structural problems go to
/// `errors`; nonlinear terms are recorded in the draft for validation.
inline ScenarioDraft read_scenario(const nlohmann::json& doc, std::vector<ValidationError>& errors) {
  detail::Reader r(errors);
  ScenarioDraft draft;
  Scenario& s = draft.scenario;
  if (!r.expect_object(doc, "")) return draft;
  r.reject_unknown(doc, {"schema", "class_name", "description", "total_units", "policy", "objective", "share_model",
                         "drugs"},
                   "");
  detail::check_schema(r, doc);
  s.class_name = r.string(doc, "class_name", "", true).value_or("");
  s.description = r.string(doc, "description", "", false).value_or("");
  s.total_units = r.integer(doc, "total_units", "").value_or(0);

  if (doc.contains("policy") && r.expect_object(doc["policy"], "policy")) {
    const auto& p = doc["policy"];
    r.reject_unknown(p, {"bid_down_limit", "tier3_share", "count_admin_fee_in_cost"}, "policy");
    if (auto v = r.decimal(p, "bid_down_limit", "policy", false)) s.policy.bid_down_limit = Rate(*v);
    if (auto v = r.decimal(p, "tier3_share", "policy", false)) s.policy.tier3_share = Rate(*v);
    if (auto v = r.boolean(p, "count_admin_fee_in_cost", "policy")) s.policy.count_admin_fee_in_cost = *v;
  }
  if (doc.contains("objective") && r.expect_object(doc["objective"], "objective")) {
    const auto& o = doc["objective"];
    r.reject_unknown(o, {"gross_rebate_weight"}, "objective");
    if (auto v = r.decimal(o, "gross_rebate_weight", "objective", false)) {
      s.objective.gross_rebate_weight = Rate(*v);
    }
  }
  if (!doc.contains("share_model")) {
    r.fail(ErrorCode::ParseError, "share_model", "missing required field");
  } else {
    s.share_model = detail::read_share_model(r, doc["share_model"]);
  }
  if (!doc.contains("drugs") || !doc["drugs"].is_array()) {
    r.fail(ErrorCode::ParseError, "drugs", "expected an array of bid menus");
  } else {
    for (std::size_t i = 0; i < doc["drugs"].size(); ++i) {
      s.menus.push_back(
          detail::read_menu(r, doc["drugs"][i], "drugs[" + std::to_string(i) + "]", draft.nonlinear_terms));
    }
  }
  return draft;
}

struct LoadResult {
  std::optional<Scenario> scenario;
  std::vector<ValidationError> errors;
  nlohmann::json document;  // raw parse, null on syntax errors

  [[nodiscard]] bool ok() const noexcept { return scenario.has_value(); }
};

/// Parse, then validate; structural and semantic errors are reported together.
inline LoadResult load_scenario(std::string_view bytes, const ValidationOptions& options = {}) {
  LoadResult out;
  auto doc = parse_json(bytes, out.errors);
  if (!doc) return out;
  out.document = *doc;
  ScenarioDraft draft = read_scenario(*doc, out.errors);
  auto validation = validate_scenario(draft, options);
  out.errors.insert(out.errors.end(), validation.errors.begin(), validation.errors.end());
  if (out.errors.empty()) out.scenario = std::move(validation.scenario);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical scenario form

inline Json scenario_to_json(const Scenario& s) {
  Json doc;
  doc["schema"] = kSchema;
  doc["class_name"] = s.class_name;
  if (!s.description.empty()) doc["description"] = s.description;
  doc["total_units"] = s.total_units;
  doc["policy"] = Json{{"bid_down_limit", format_rate(s.policy.bid_down_limit)},
                       {"tier3_share", format_rate(s.policy.tier3_share)},
                       {"count_admin_fee_in_cost", s.policy.count_admin_fee_in_cost}};
  doc["objective"] = Json{{"gross_rebate_weight", format_rate(s.objective.gross_rebate_weight)}};
  Json sm;
  if (const auto* t = std::get_if<TableShares>(&s.share_model)) {
    sm["type"] = "table";
    sm["entries"] = Json::array();
    for (const auto& e : t->entries) {
      Json statuses = Json::object();
      for (const auto& [id, kind] : e.statuses) statuses[id] = kind_name(kind);
      Json shares = Json::object();
      for (const auto& [id, share] : e.shares) shares[id] = format_rate(share);
      sm["entries"].push_back(Json{{"statuses", statuses}, {"shares", shares}});
    }
  } else {
    const auto& p = std::get<ProportionalShares>(s.share_model);
    sm["type"] = "proportional";
    Json weights = Json::object();
    for (const auto& [id, w] : p.weights) weights[id] = format_rate(w);
    sm["weights"] = weights;
    if (p.tier3_share) sm["tier3_share"] = format_rate(*p.tier3_share);
  }
  doc["share_model"] = sm;
  doc["drugs"] = Json::array();
  for (const auto& m : s.menus) {
    Json d;
    d["id"] = m.drug_id;
    d["manufacturer"] = m.manufacturer_id;
    d["wac_per_unit"] = format_money(m.wac_per_unit);
    Json bids = Json::object();
    for (const auto& [k, rate] : m.preferred_rates) {
      bids[k == 1 ? std::string("exclusive") : "shared_1_of_" + std::to_string(k)] = format_rate(rate);
    }
    if (m.tier3_rate) bids["tier3"] = format_rate(*m.tier3_rate);
    d["bids"] = bids;
    if (m.admin_fee) d["admin_fee"] = format_rate(*m.admin_fee);
    if (m.price_protection) {
      Json pp{{"factor", format_rate(m.price_protection->factor)}};
      if (!m.price_protection->baseline_wac_date.empty()) pp["baseline_wac_date"] = m.price_protection->baseline_wac_date;
      if (!m.price_protection->year_start_date.empty()) pp["year_start_date"] = m.price_protection->year_start_date;
      d["price_protection"] = pp;
    }
    if (!m.exclusionary_options.empty()) {
      d["exclusionary"] = Json::array();
      for (const auto& o : m.exclusionary_options) {
        d["exclusionary"].push_back(
            Json{{"excludes", o.excluded_competitors}, {"incremental_rate", format_rate(o.incremental_rate)}});
      }
    }
    doc["drugs"].push_back(d);
  }
  return doc;
}

inline std::string emit_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

/// Content hash of the canonical (compact) scenario form.
inline std::string scenario_digest(const Scenario& s) { return "sha256:" + sha256_hex(scenario_to_json(s).dump()); }

// ---------------------------------------------------------------------------
// Margins document

struct MarginsDocument {
  std::string company;
  std::optional<std::int64_t> year;
  financials::MarginStatement statement;
  std::optional<financials::DiseconomyFractions> fractions;
};

struct MarginsLoadResult {
  std::optional<MarginsDocument> margins;
  std::vector<ValidationError> errors;

  [[nodiscard]] bool ok() const noexcept { return margins.has_value(); }
};

inline MarginsLoadResult load_margins(std::string_view bytes) {
  MarginsLoadResult out;
  auto doc = parse_json(bytes, out.errors);
  if (!doc) return out;
  detail::Reader r(out.errors);
  if (!r.expect_object(*doc, "")) return out;
  r.reject_unknown(*doc, {"schema", "company", "year", "basis", "gtn_rebate_rate", "cost_of_sales", "marketing",
                          "diseconomy_fractions"},
                   "");
  detail::check_schema(r, *doc);
  MarginsDocument m;
  m.company = r.string(*doc, "company", "", false).value_or("");
  if (doc->contains("year")) m.year = r.integer(*doc, "year", "");
  const auto basis = r.string(*doc, "basis", "", true).value_or("net");
  if (basis == "net") {
    m.statement.basis = financials::Basis::Net;
  } else if (basis == "gross") {
    m.statement.basis = financials::Basis::Gross;
  } else {
    r.fail(ErrorCode::ParseError, "basis", "expected \"net\" or \"gross\"");
  }
  auto rate_field = [&](const char* key, Rate& dst) {
    if (auto v = r.decimal(*doc, key, "", true)) {
      dst = Rate(*v);
      if (!in_unit_interval(dst)) r.fail(ErrorCode::RateOutOfRange, key, "must lie in [0, 1]");
    }
  };
  rate_field("gtn_rebate_rate", m.statement.gtn_rebate_rate);
  rate_field("cost_of_sales", m.statement.cost_of_sales);
  rate_field("marketing", m.statement.marketing);
  if (doc->contains("diseconomy_fractions") &&
      r.expect_object((*doc)["diseconomy_fractions"], "diseconomy_fractions")) {
    const auto& f = (*doc)["diseconomy_fractions"];
    r.reject_unknown(f, {"production", "marketing"}, "diseconomy_fractions");
    auto p = r.decimal(f, "production", "diseconomy_fractions", true);
    auto k = r.decimal(f, "marketing", "diseconomy_fractions", true);
    if (p && k) m.fractions = financials::DiseconomyFractions{Rate(*p), Rate(*k)};
  }
  if (out.errors.empty()) out.margins = m;
  return out;
}

// ---------------------------------------------------------------------------
// Reports

enum class Format { Json, Text, CsvCurve };

inline std::optional<Format> parse_format(std::string_view text) {
  if (text == "json") return Format::Json;
  if (text == "text") return Format::Text;
  if (text == "csv" || text == "csv-curve") return Format::CsvCurve;
  return std::nullopt;
}

struct SolvePayload {
  Scenario scenario;
  SolveReport report;
  std::vector<compliance::ComplianceFinding> findings;
  std::optional<std::size_t> top;  // truncates ranked and switching
};

struct CheckPayload {
  Scenario scenario;
  std::vector<compliance::ComplianceFinding> findings;
  Rate bid_down_limit;
  Rate tier3_share;
};

struct DuopolyPayload {
  Rate b1;
  std::optional<Rate> b2;
  Rate b3;
  std::optional<Rate> delta;
  Rate tier3_share;
  std::optional<duopoly::EqualizingShare> equalizing;
  std::optional<duopoly::EqualizingShare> equalizing_limited;
  std::optional<Rate> ld_minimum;
  std::optional<Rate> x;
  std::optional<duopoly::Favorability> at_x;
};

struct CurvePayload {
  std::vector<duopoly::CurvePoint> points;
};

struct BundlePayload {
  compliance::BundleOffer offer;
  compliance::BundleComparison comparison;
};

struct GtnPayload {
  MarginsDocument margins;
  financials::MarginStatement net;
  financials::MarginStatement gross;
  financials::Preset preset = financials::Preset::Table;
  financials::DiseconomyFractions fractions;
  std::optional<financials::DiseconomyEstimate> estimate;
  std::string estimate_error;
};

using ReportPayload =
    std::variant<SolvePayload, CheckPayload, DuopolyPayload, CurvePayload, BundlePayload, GtnPayload>;

namespace detail {

inline Json header(std::string_view command) {
  return Json{{"schema", kSchema}, {"tool_version", kToolVersion}, {"command", command}};
}

inline std::string measure_text(const compliance::Measure& m) {
  if (const auto* r = std::get_if<Rate>(&m)) return format_rate(*r);
  return format_money(std::get<Money>(m));
}

inline Json finding_json(const compliance::ComplianceFinding& f) {
  Json j{{"rule", compliance::to_string(f.rule)}, {"severity", compliance::to_string(f.severity)},
         {"drug_id", f.drug_id}};
  if (f.observed) {
    j["unit"] = std::holds_alternative<Rate>(*f.observed) ? "rate" : "usd";
    j["observed"] = measure_text(*f.observed);
    j["threshold"] = f.threshold ? measure_text(*f.threshold) : "";
  } else {
    j["unit"] = nullptr;
    j["observed"] = nullptr;
    j["threshold"] = nullptr;
  }
  j["explanation"] = f.explanation;
  return j;
}

inline Json findings_json(const std::vector<compliance::ComplianceFinding>& findings) {
  Json arr = Json::array();
  for (const auto& f : findings) arr.push_back(finding_json(f));
  return arr;
}

inline Json outcome_json(const AssignmentOutcome& o, const Scenario& s, std::size_t rank) {
  Json statuses = Json::object();
  Json shares = Json::object();
  Json rates = Json::object();
  for (std::size_t i = 0; i < s.menus.size(); ++i) {
    statuses[s.menus[i].drug_id] = o.assignment.statuses[i].label();
    shares[s.menus[i].drug_id] = format_rate(o.shares[i]);
    rates[s.menus[i].drug_id] = format_rate(o.effective_rates[i]);
  }
  Json lds = Json::array();
  for (const auto& ld : o.assignment.active_ld) {
    const auto& opt = s.menus[ld.menu].exclusionary_options[ld.option];
    lds.push_back(Json{{"drug_id", s.menus[ld.menu].drug_id},
                       {"option", ld.option},
                       {"excludes", opt.excluded_competitors},
                       {"incremental_rate", format_rate(opt.incremental_rate)}});
  }
  return Json{{"rank", rank},
              {"label", o.label},
              {"assignment", statuses},
              {"active_ld", lds},
              {"shares", shares},
              {"effective_rates", rates},
              {"sponsor_cost", format_money(o.sponsor_cost)},
              {"gross_rebate_total", format_money(o.gross_rebate_total)},
              {"objective_value", format_money(o.objective_value)},
              {"warnings", o.warnings}};
}

inline Json switching_json(const SwitchingEntry& e) {
  Json drugs = Json::array();
  for (const auto& d : e.drugs) {
    drugs.push_back(Json{{"drug_id", d.drug_id},
                         {"winner_status", d.winner_status.label()},
                         {"alternative_status", d.alternative_status.label()},
                         {"share_delta", format_rate(d.share_delta)},
                         {"rate_delta", format_rate(d.rate_delta)}});
  }
  return Json{{"rank", e.rank},
              {"label", e.label},
              {"delta_sponsor_cost", format_money(e.delta_sponsor_cost)},
              {"delta_gross_rebates", format_money(e.delta_gross_rebates)},
              {"delta_objective", format_money(e.delta_objective)},
              {"drugs", drugs}};
}

inline Json price_protection_json(const Scenario& s) {
  Json arr = Json::array();
  for (const auto& m : s.menus) {
    if (!m.price_protection) continue;
    arr.push_back(Json{{"drug_id", m.drug_id},
                       {"factor", format_rate(m.price_protection->factor)},
                       {"baseline_wac_date", m.price_protection->baseline_wac_date},
                       {"year_start_date", m.price_protection->year_start_date}});
  }
  return arr;
}

inline std::vector<std::string> scenario_notes(const Scenario& s) {
  std::vector<std::string> notes;
  for (const auto& m : s.menus) {
    if (m.price_protection) {
      notes.push_back("price protection terms for '" + m.drug_id + "' are echoed, not priced");
    }
  }
  return notes;
}

inline std::string eq_json_ratio(const duopoly::EqualizingShare& e) {
  return format_rate(e.bid_down) + "/" + format_rate(e.bid_difference);
}

inline Json equalizing_json(const duopoly::EqualizingShare& e) {
  return Json{{"value", format_rate(e.share)},
              {"bid_down", format_rate(e.bid_down)},
              {"bid_difference", format_rate(e.bid_difference)},
              {"dominance", duopoly::to_string(e.dominance)}};
}

inline void text_findings(std::ostringstream& os, const std::vector<compliance::ComplianceFinding>& findings) {
  if (findings.empty()) {
    os << "  (none)\n";
    return;
  }
  for (const auto& f : findings) {
    os << "  " << (f.severity == compliance::Severity::Reject ? "REJECT" : "WARN  ") << "  "
       << compliance::to_string(f.rule) << "  " << f.drug_id;
    if (f.observed && f.threshold) {
      os << "  observed " << measure_text(*f.observed) << " vs threshold " << measure_text(*f.threshold);
    }
    os << "\n      " << f.explanation << "\n";
  }
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

inline std::string render(const SolvePayload& p, Format fmt) {
  const auto& rep = p.report;
  const std::size_t shown = std::min(rep.ranked.size(), p.top.value_or(rep.ranked.size()));
  std::vector<std::string> warnings = scenario_notes(p.scenario);
  warnings.insert(warnings.end(), rep.winner().warnings.begin(), rep.winner().warnings.end());
  if (fmt == Format::Json) {
    Json doc = header("solve");
    doc["scenario_digest"] = scenario_digest(p.scenario);
    doc["class_name"] = p.scenario.class_name;
    doc["winner"] = outcome_json(rep.winner(), p.scenario, 1);
    doc["ranked_total"] = rep.ranked.size();
    Json ranked = Json::array();
    for (std::size_t i = 0; i < shown; ++i) ranked.push_back(outcome_json(rep.ranked[i], p.scenario, i + 1));
    doc["ranked"] = ranked;
    Json switching = Json::array();
    for (std::size_t i = 0; i + 1 < shown && i < rep.switching.size(); ++i) {
      switching.push_back(switching_json(rep.switching[i]));
    }
    doc["switching"] = switching;
    doc["findings"] = findings_json(p.findings);
    doc["price_protection"] = price_protection_json(p.scenario);
    doc["warnings"] = warnings;
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  const auto& w = rep.winner();
  os << "class: " << p.scenario.class_name << " (" << p.scenario.total_units << " units, " << rep.ranked.size()
     << " feasible assignments)\n";
  os << "winner: " << w.label << "\n";
  os << "  sponsor cost  $" << format_money(w.sponsor_cost) << "\n";
  os << "  gross rebates $" << format_money(w.gross_rebate_total) << "\n";
  os << "  objective     $" << format_money(w.objective_value) << "\n";
  os << "\nranked:\n";
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& o = rep.ranked[i];
    os << "  " << lpad(std::to_string(i + 1), 3) << ". " << lpad("$" + format_money(o.objective_value), 20) << "  "
       << o.label << "\n";
  }
  if (shown > 1) {
    os << "\nswitching (winner minus alternative):\n";
    for (std::size_t i = 0; i + 1 < shown && i < rep.switching.size(); ++i) {
      const auto& e = rep.switching[i];
      os << "  #" << e.rank << " " << e.label << ": cost " << format_money(e.delta_sponsor_cost) << ", rebates "
         << format_money(e.delta_gross_rebates) << "\n";
    }
  }
  os << "\nfindings:\n";
  text_findings(os, p.findings);
  if (!warnings.empty()) {
    os << "\nwarnings:\n";
    for (const auto& wn : warnings) os << "  " << wn << "\n";
  }
  return os.str();
}

inline std::string render(const CheckPayload& p, Format fmt) {
  if (fmt == Format::Json) {
    Json doc = header("check");
    doc["scenario_digest"] = scenario_digest(p.scenario);
    doc["class_name"] = p.scenario.class_name;
    doc["policy"] = Json{{"bid_down_limit", format_rate(p.bid_down_limit)}, {"tier3_share", format_rate(p.tier3_share)}};
    doc["findings"] = findings_json(p.findings);
    doc["price_protection"] = price_protection_json(p.scenario);
    doc["warnings"] = scenario_notes(p.scenario);
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "class: " << p.scenario.class_name << "  (bid-down limit " << format_rate(p.bid_down_limit)
     << ", tier-3 share " << format_rate(p.tier3_share) << ")\n";
  os << "findings:\n";
  text_findings(os, p.findings);
  return os.str();
}

inline std::string render(const DuopolyPayload& p, Format fmt) {
  if (fmt == Format::Json) {
    Json doc = header("duopoly");
    Json bids{{"b1", format_rate(p.b1)}};
    if (p.b2) bids["b2"] = format_rate(*p.b2);
    bids["b3"] = format_rate(p.b3);
    if (p.delta) bids["delta"] = format_rate(*p.delta);
    doc["bids"] = bids;
    doc["equalizing_share"] = p.equalizing ? equalizing_json(*p.equalizing) : Json(nullptr);
    if (p.delta) {
      doc["equalizing_share_limited"] = p.equalizing_limited ? equalizing_json(*p.equalizing_limited) : Json(nullptr);
      doc["tier3_share"] = format_rate(p.tier3_share);
      doc["ld_minimum"] = p.ld_minimum ? Json(format_rate(*p.ld_minimum)) : Json(nullptr);
    }
    if (p.x && p.at_x) {
      doc["at_x"] = Json{{"x", format_rate(*p.x)},
                         {"decision", duopoly::to_string(p.at_x->decision)},
                         {"margin", format_rate(p.at_x->margin)}};
    }
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "b1 = " << format_rate(p.b1);
  if (p.b2) os << "  b2 = " << format_rate(*p.b2);
  os << "  b3 = " << format_rate(p.b3);
  if (p.delta) os << "  delta = " << format_rate(*p.delta);
  os << "\n";
  if (p.equalizing) {
    os << "x* = " << format_rate(p.equalizing->share) << " (" << format_percent(p.equalizing->share) << ") = "
       << eq_json_ratio(*p.equalizing);
    if (p.equalizing->dominance != duopoly::Dominance::None) os << "  [" << duopoly::to_string(p.equalizing->dominance) << "]";
    os << "\n";
  }
  if (p.equalizing_limited) {
    os << "x* limited = " << format_rate(p.equalizing_limited->share) << " ("
       << format_percent(p.equalizing_limited->share) << ") = " << eq_json_ratio(*p.equalizing_limited);
    if (p.equalizing_limited->dominance != duopoly::Dominance::None) {
      os << "  [" << duopoly::to_string(p.equalizing_limited->dominance) << "]";
    }
    os << "\n";
  }
  if (p.ld_minimum) os << "LD minimum = " << format_rate(*p.ld_minimum) << " (" << format_percent(*p.ld_minimum, 2) << ")\n";
  if (p.x && p.at_x) {
    os << "at x = " << format_rate(*p.x) << ": " << duopoly::to_string(p.at_x->decision) << " (margin "
       << format_rate(p.at_x->margin) << ")\n";
  }
  return os.str();
}

inline std::string render(const CurvePayload& p, Format fmt) {
  if (fmt == Format::CsvCurve) {
    std::string out = "x,decision,margin\n";
    for (const auto& pt : p.points) {
      out += format_rate(pt.x) + "," + std::string(duopoly::to_string(pt.decision)) + "," + format_rate(pt.margin) + "\n";
    }
    return out;
  }
  if (fmt == Format::Json) {
    Json doc = header("duopoly");
    Json rows = Json::array();
    for (const auto& pt : p.points) {
      rows.push_back(Json{{"x", format_rate(pt.x)},
                          {"decision", duopoly::to_string(pt.decision)},
                          {"margin", format_rate(pt.margin)}});
    }
    doc["curve"] = rows;
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  for (const auto& pt : p.points) {
    os << format_rate(pt.x) << "  " << pad(std::string(duopoly::to_string(pt.decision)), 9) << "  "
       << format_rate(pt.margin) << "\n";
  }
  return os.str();
}

inline std::string render(const BundlePayload& p, Format fmt) {
  if (fmt == Format::Json) {
    Json doc = header("bundle");
    doc["offer"] = Json{{"bundled_rebate_total", format_money(p.offer.bundled_rebate_total)},
                        {"tying_drug", p.offer.tying_drug},
                        {"tied_drugs", p.offer.tied_drugs},
                        {"market_gross", format_money(p.offer.market_gross)},
                        {"pbm_share", format_rate(p.offer.pbm_share)},
                        {"expected_winning_rate", format_rate(p.offer.expected_winning_rate)}};
    doc["standard_proceeds"] = format_money(p.comparison.standard_proceeds);
    doc["bundle_total"] = format_money(p.comparison.bundle_total);
    Json findings = Json::array();
    if (p.comparison.finding) findings.push_back(finding_json(*p.comparison.finding));
    doc["findings"] = findings;
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "standard auction proceeds  $" << format_money(p.comparison.standard_proceeds) << "\n";
  os << "bundled rebate             $" << format_money(p.comparison.bundle_total) << "\n";
  os << "findings:\n";
  std::vector<compliance::ComplianceFinding> f;
  if (p.comparison.finding) f.push_back(*p.comparison.finding);
  text_findings(os, f);
  return os.str();
}

inline std::string render(const GtnPayload& p, Format fmt) {
  if (fmt == Format::Json) {
    Json doc = header("gtn");
    doc["company"] = p.margins.company;
    doc["year"] = p.margins.year ? Json(*p.margins.year) : Json(nullptr);
    auto statement = [](const financials::MarginStatement& m) {
      return Json{{"basis", financials::to_string(m.basis)},
                  {"net_sales", format_rate(m.net_sales())},
                  {"cost_of_sales", format_rate(m.cost_of_sales)},
                  {"marketing", format_rate(m.marketing)},
                  {"contribution_margin", format_rate(m.contribution_margin())},
                  {"max_unit_rebate", format_rate(m.max_unit_rebate())}};
    };
    doc["gtn_rebate_rate"] = format_rate(p.net.gtn_rebate_rate);
    doc["net_basis"] = statement(p.net);
    doc["gross_basis"] = statement(p.gross);
    doc["preset"] = financials::to_string(p.preset);
    doc["fractions"] = Json{{"production", format_rate(p.fractions.production)},
                            {"marketing", format_rate(p.fractions.marketing)}};
    if (p.estimate) {
      doc["diseconomies"] = Json{{"production_loss", format_rate(p.estimate->production_loss)},
                                 {"marketing_loss", format_rate(p.estimate->marketing_loss)},
                                 {"bid_down_limit", format_rate(p.estimate->total)}};
    } else {
      doc["diseconomies"] = nullptr;
      doc["error"] = p.estimate_error;
    }
    return doc.dump(2) + "\n";
  }
  auto pct = [](const Rate& r) { return lpad(format_percent(r), 8); };
  const std::string blank(8, ' ');
  std::ostringstream os;
  std::string title = p.margins.company.empty() ? "Margins" : p.margins.company;
  if (p.margins.year) title += " " + std::to_string(*p.margins.year);
  os << title << " on net and gross basis\n";
  os << pad("", 22) << "   Net    " << "  Gross   " << "  GtN     " << "  Shared-position diseconomies\n";
  os << pad("Gross sales", 22) << blank << "  " << pct(one_rate()) << "\n";
  os << pad("Net sales", 22) << pct(p.net.net_sales()) << "  " << pct(p.gross.net_sales()) << "  "
     << pct(p.net.gtn_rebate_rate) << "\n";
  std::string prod = p.estimate ? pct(p.estimate->production_loss) : "";
  std::string mktg = p.estimate ? pct(p.estimate->marketing_loss) : "";
  os << pad("Cost of sales", 22) << pct(p.net.cost_of_sales) << "  " << pct(p.gross.cost_of_sales) << "  "
     << lpad(">>>", 8) << "  " << prod << "\n";
  os << pad("Marketing", 22) << pct(p.net.marketing) << "  " << pct(p.gross.marketing) << "  " << lpad(">>>", 8)
     << "  " << mktg << "\n";
  if (p.estimate) {
    os << pad("Bid-down limit", 22) << blank << "  " << blank << "  " << blank << "  " << pct(p.estimate->total)
       << "\n";
  }
  os << pad("Contribution margin", 22) << pct(p.net.contribution_margin()) << "  "
     << pct(p.gross.contribution_margin()) << "\n";
  os << pad("Max unit rebate", 22) << pct(p.net.max_unit_rebate()) << "  " << pct(p.gross.max_unit_rebate()) << "\n";
  os << "preset: " << financials::to_string(p.preset) << " (production fraction " << format_rate(p.fractions.production)
     << ", marketing fraction " << format_rate(p.fractions.marketing) << ")\n";
  if (!p.estimate) os << "bid-down limit unavailable: " << p.estimate_error << "\n";
  return os.str();
}

}  // namespace detail

/// Canonical serialization. JSON output is byte-deterministic; csv-curve is
/// only defined for favorability curves.
inline std::string emit_report(const ReportPayload& payload, Format fmt) {
  if (fmt == Format::CsvCurve && !std::holds_alternative<CurvePayload>(payload)) {
    throw Error(ErrorCode::UnsupportedFormat, "csv-curve output is only available for duopoly curves");
  }
  return std::visit([fmt](const auto& p) { return detail::render(p, fmt); }, payload);
}

}  // namespace formwdp::io
