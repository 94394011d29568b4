// formwdp: formulary winner determination, duopoly analysis and rebate
// compliance screens.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "formwdp/formwdp.hpp"

namespace {

using namespace formwdp;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitReject = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << bytes)) throw Error(ErrorCode::InvalidValue, "cannot write '" + path + "'");
}

Rate rate_arg(const std::string& flag, const std::string& text) {
  auto r = io::parse_rate_text(text);
  if (!r) throw UsageError(flag + ": expected a rate such as 57.5% or 0.575 (at most 4 decimals), got '" + text + "'");
  return *r;
}

Money money_arg(const std::string& flag, const std::string& text) {
  auto m = io::parse_money_text(text);
  if (!m) throw UsageError(flag + ": expected an amount such as 80M or 96201000, got '" + text + "'");
  return *m;
}

io::Format format_arg(const std::string& text) {
  auto f = io::parse_format(text);
  if (!f) throw UsageError("--format: expected json, text or csv-curve");
  return *f;
}

int report_errors(const std::vector<ValidationError>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e.to_string() << "\n";
  return kExitError;
}

SolveOptions solve_options_from_env() {
  SolveOptions opts;
  if (const char* cap = std::getenv("FORMWDP_MAX_DRUGS"); cap && *cap) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (*end != '\0' || v < 1 || v > 24) throw UsageError("FORMWDP_MAX_DRUGS must be an integer in 1..24");
    opts.max_drugs = static_cast<std::size_t>(v);
  }
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formulary winner determination and rebate compliance screens", "formwdp"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  std::string format_text = "text";

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "rank every feasible formulary assignment");
  std::string solve_path;
  std::string report_path;
  std::size_t top = 0;
  unsigned threads = 1;
  solve_cmd->add_option("scenario", solve_path, "scenario JSON")->required();
  solve_cmd->add_option("--report", report_path, "write the JSON report here");
  solve_cmd->add_option("--top", top, "show only the N best assignments");
  solve_cmd->add_option("--threads", threads, "worker threads (output does not depend on it)")
      ->check(CLI::Range(1u, 256u));
  solve_cmd->add_option("--format", format_text, "stdout format: text or json");

  // duopoly
  auto* duo_cmd = app.add_subcommand("duopoly", "exclusive versus shared comparison for two bidders");
  std::string b1_text, b2_text, b3_text, x_text, delta_text, t3_text;
  int curve_points = 0;
  duo_cmd->add_option("--b1", b1_text, "incumbent exclusive bid")->required();
  duo_cmd->add_option("--b2", b2_text, "incumbent shared bid");
  duo_cmd->add_option("--b3", b3_text, "entrant shared bid")->required();
  auto* x_opt = duo_cmd->add_option("--x", x_text, "entrant share in the shared position");
  auto* curve_opt = duo_cmd->add_option("--curve", curve_points, "favorability curve over N shares in [0, 1]");
  x_opt->excludes(curve_opt);
  duo_cmd->add_option("--delta", delta_text, "bid-down limit; pins b2 to (1 - delta) b1 when --b2 is absent");
  duo_cmd->add_option("--t3-share", t3_text, "tier-3 share for the LD minimum (default 0.10)");
  duo_cmd->add_option("--format", format_text, "text, json or csv-curve");

  // check
  auto* check_cmd = app.add_subcommand("check", "run the compliance screens on a scenario");
  std::string check_path, check_delta_text, check_t3_text;
  check_cmd->add_option("scenario", check_path, "scenario JSON")->required();
  check_cmd->add_option("--delta", check_delta_text, "bid-down limit (default: scenario policy)");
  check_cmd->add_option("--t3-share", check_t3_text, "tier-3 share (default: scenario policy)");
  check_cmd->add_option("--format", format_text, "text or json");

  // bundle
  auto* bundle_cmd = app.add_subcommand("bundle", "compare a bundled rebate with a standard auction");
  std::string offer_text, market_text, share_text, rate_text, tying;
  std::vector<std::string> tied;
  bundle_cmd->add_option("--offer", offer_text, "bundled rebate per year")->required();
  bundle_cmd->add_option("--market", market_text, "class gross sales per year")->required();
  bundle_cmd->add_option("--share", share_text, "PBM share of the class")->required();
  bundle_cmd->add_option("--rate", rate_text, "expected winning rebate rate")->required();
  bundle_cmd->add_option("--tying", tying, "tying drug id");
  bundle_cmd->add_option("--tied", tied, "tied drug ids");
  bundle_cmd->add_option("--format", format_text, "text or json");

  // gtn
  auto* gtn_cmd = app.add_subcommand("gtn", "restate margins on a gross basis and derive a bid-down limit");
  std::string margins_path;
  std::string preset_text = "table";
  gtn_cmd->add_option("margins", margins_path, "margins JSON")->required();
  gtn_cmd->add_option("--preset", preset_text, "diseconomy calibration")->check(CLI::IsMember({"table", "text"}));
  gtn_cmd->add_option("--format", format_text, "text or json");

  // canon
  auto* canon_cmd = app.add_subcommand("canon", "print the canonical form and digest of a scenario");
  std::string canon_path;
  canon_cmd->add_option("scenario", canon_path, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    const io::Format fmt = format_arg(format_text);

    if (*solve_cmd) {
      const auto loaded = io::load_scenario(read_file(solve_path));
      if (!loaded.ok()) return report_errors(loaded.errors);
      auto opts = solve_options_from_env();
      opts.threads = threads;
      io::SolvePayload payload{*loaded.scenario, solve(*loaded.scenario, opts),
                               compliance::compliance_report(*loaded.scenario,
                                                             compliance::ComplianceOptions::from_policy(
                                                                 loaded.scenario->policy)),
                               top > 0 ? std::optional<std::size_t>(top) : std::nullopt};
      if (!report_path.empty()) write_file(report_path, io::emit_report(payload, io::Format::Json));
      std::cout << io::emit_report(payload, fmt);
      return kExitOk;
    }

    if (*duo_cmd) {
      const Rate b1 = rate_arg("--b1", b1_text);
      const Rate b3 = rate_arg("--b3", b3_text);
      std::optional<Rate> b2;
      if (!b2_text.empty()) b2 = rate_arg("--b2", b2_text);
      std::optional<Rate> delta;
      if (!delta_text.empty()) delta = rate_arg("--delta", delta_text);
      if (!b2 && !delta) throw UsageError("duopoly needs --b2 or --delta");
      const Rate t3 = t3_text.empty() ? from_basis_points(1000) : rate_arg("--t3-share", t3_text);

      if (curve_points > 0) {
        duopoly::IncumbentSharedBid shared = b2 ? duopoly::IncumbentSharedBid(duopoly::ExplicitSharedBid{*b2})
                                                : duopoly::IncumbentSharedBid(duopoly::BidDownLimit{*delta});
        std::cout << io::emit_report(io::CurvePayload{duopoly::favorability_curve(b1, b3, shared, curve_points)}, fmt);
        return kExitOk;
      }
      io::DuopolyPayload p;
      p.b1 = b1;
      p.b2 = b2;
      p.b3 = b3;
      p.delta = delta;
      p.tier3_share = t3;
      if (b2) p.equalizing = duopoly::equalizing_share(b1, *b2, b3);
      if (delta) {
        p.equalizing_limited = duopoly::equalizing_share_limited(b1, b3, *delta);
        p.ld_minimum = duopoly::ld_minimum(b1, *delta, t3);
      }
      if (!x_text.empty()) {
        p.x = rate_arg("--x", x_text);
        const Rate shared_bid = b2 ? *b2 : (one_rate() - *delta) * b1;
        p.at_x = duopoly::favors_exclusive({b1, shared_bid, b3, *p.x});
      }
      std::cout << io::emit_report(p, fmt);
      return kExitOk;
    }

    if (*check_cmd) {
      ValidationOptions vopts;
      vopts.reject_nonlinear_terms = false;
      const auto loaded = io::load_scenario(read_file(check_path), vopts);
      if (!loaded.ok()) return report_errors(loaded.errors);
      auto copts = compliance::ComplianceOptions::from_policy(loaded.scenario->policy);
      if (!check_delta_text.empty()) copts.bid_down_limit = rate_arg("--delta", check_delta_text);
      if (!check_t3_text.empty()) copts.tier3_share = rate_arg("--t3-share", check_t3_text);
      auto findings = compliance::compliance_report(*loaded.scenario, copts);
      for (const auto& raw : loaded.document["drugs"]) {
        auto nl = compliance::check_linear_basis(raw);
        findings.insert(findings.end(), nl.begin(), nl.end());
      }
      compliance::sort_findings(findings);
      const bool reject = compliance::has_reject(findings);
      std::cout << io::emit_report(
          io::CheckPayload{*loaded.scenario, std::move(findings), copts.bid_down_limit, copts.tier3_share}, fmt);
      return reject ? kExitReject : kExitOk;
    }

    if (*bundle_cmd) {
      compliance::BundleOffer offer{money_arg("--offer", offer_text), tying, tied, money_arg("--market", market_text),
                                    rate_arg("--share", share_text), rate_arg("--rate", rate_text)};
      io::BundlePayload p{offer, compliance::bundle_counterfactual(offer)};
      const bool dominated = p.comparison.finding.has_value();
      std::cout << io::emit_report(p, fmt);
      return dominated ? kExitReject : kExitOk;
    }

    if (*gtn_cmd) {
      const auto loaded = io::load_margins(read_file(margins_path));
      if (!loaded.ok()) return report_errors(loaded.errors);
      const auto& m = *loaded.margins;
      if (m.statement.basis != financials::Basis::Net) {
        throw Error(ErrorCode::InvalidValue, "gtn expects a net-basis statement");
      }
      io::GtnPayload p;
      p.margins = m;
      p.net = m.statement;
      p.gross = financials::margin_statement_gross(m.statement);
      p.preset = preset_text == "text" ? financials::Preset::Text : financials::Preset::Table;
      p.fractions = m.fractions ? *m.fractions : financials::preset_fractions(p.preset);
      try {
        p.estimate = financials::derive_bid_down_limit(p.gross, p.fractions);
      } catch (const Error& e) {
        p.estimate_error = e.what();
      }
      std::cout << io::emit_report(p, fmt);
      return p.estimate ? kExitOk : kExitError;
    }

    if (*canon_cmd) {
      const auto loaded = io::load_scenario(read_file(canon_path));
      if (!loaded.ok()) return report_errors(loaded.errors);
      std::cout << io::emit_scenario(*loaded.scenario);
      std::cerr << io::scenario_digest(*loaded.scenario) << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
