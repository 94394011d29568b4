#pragma once

#include <string_view>

#include "formwdp/error.hpp"
#include "formwdp/quantity.hpp"

namespace formwdp::financials {

enum class Basis { Net, Gross };

constexpr std::string_view to_string(Basis b) noexcept { return b == Basis::Net ? "net" : "gross"; }

/// A margin line expressed as a share of net sales, restated as a share of
/// gross (WAC) sales.
inline Rate to_gross_basis(const Rate& margin_net, const Rate& gtn_rebate_rate) {
  return margin_net * (one_rate() - gtn_rebate_rate);
}

/// Manufacturer income statement reduced to the lines that matter for
/// sharing diseconomies. Line items are fractions of the basis' sales.
struct MarginStatement {
  Basis basis = Basis::Net;
  Rate gtn_rebate_rate;
  Rate cost_of_sales;
  Rate marketing;

  /// Net sales as a fraction of the basis: 1 on net, 1 - gtn on gross.
  [[nodiscard]] Rate net_sales() const {
    return basis == Basis::Net ? one_rate() : one_rate() - gtn_rebate_rate;
  }
  [[nodiscard]] Rate contribution_margin() const { return net_sales() - cost_of_sales - marketing; }
  [[nodiscard]] Rate max_unit_rebate() const { return one_rate() - contribution_margin(); }
};

inline MarginStatement margin_statement_gross(const MarginStatement& net) {
  if (net.basis != Basis::Net) throw Error(ErrorCode::InvalidValue, "statement is already on a gross basis");
  for (const Rate* r : {&net.gtn_rebate_rate, &net.cost_of_sales, &net.marketing}) {
    if (!in_unit_interval(*r)) throw Error(ErrorCode::RateOutOfRange, "margin lines must lie in [0, 1]");
  }
  return {Basis::Gross, net.gtn_rebate_rate, to_gross_basis(net.cost_of_sales, net.gtn_rebate_rate),
          to_gross_basis(net.marketing, net.gtn_rebate_rate)};
}

struct DiseconomyFractions {
  Rate production;  // share of gross cost of sales lost to sharing
  Rate marketing;   // share of gross marketing spend added by sharing
};

struct DiseconomyEstimate {
  Rate production_loss;
  Rate marketing_loss;
  Rate total;  // the bid-down limit
};

/// Two calibrations of the 10% limit for the 2023 Novo Nordisk statement:
/// Table gives 3% production + 7% marketing, Text gives 2% + 8%.
enum class Preset { Table, Text };

constexpr std::string_view to_string(Preset p) noexcept { return p == Preset::Table ? "table" : "text"; }

inline DiseconomyFractions preset_fractions(Preset p) {
  // Fractions of gross cost of sales (0.101332) and gross marketing
  // (0.160552) that round to the target losses at basis-point resolution.
  if (p == Preset::Table) return {from_basis_points(2961), from_basis_points(4360)};
  return {from_basis_points(1974), from_basis_points(4983)};
}

/// Components are rounded to basis points; the total is their exact sum.
inline DiseconomyEstimate derive_bid_down_limit(const MarginStatement& gross, const DiseconomyFractions& f) {
  if (gross.basis != Basis::Gross) throw Error(ErrorCode::InvalidValue, "bid-down limit needs a gross statement");
  if (!in_unit_interval(f.production) || !in_unit_interval(f.marketing)) {
    throw Error(ErrorCode::RateOutOfRange, "diseconomy fractions must lie in [0, 1]");
  }
  DiseconomyEstimate e;
  e.production_loss = (f.production * gross.cost_of_sales).rounded(kRateScale);
  e.marketing_loss = (f.marketing * gross.marketing).rounded(kRateScale);
  e.total = e.production_loss + e.marketing_loss;
  if (e.total > gross.max_unit_rebate()) {
    throw Error(ErrorCode::ExceedsMaxRebate, "bid-down limit " + format_rate(e.total) +
                                                 " exceeds the max unit rebate " +
                                                 format_rate(gross.max_unit_rebate()));
  }
  return e;
}

}  // namespace formwdp::financials
