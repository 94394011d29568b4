#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "formwdp/domain.hpp"

namespace formwdp {

struct EffectiveRate {
  Rate value;
  bool supra_unit = false;  // value > 1, net price goes negative
};

/// Base rate for `status`, plus the incremental rate of every active
/// exclusionary option, plus the admin fee when the policy counts it.
/// Exclusionary increments never stack on a tier-3 rate.
inline EffectiveRate effective_rebate_rate(const BidMenu& menu, FormularyStatus status,
                                           std::span<const std::size_t> active_options,
                                           const Policy& policy) {
  auto base = menu.base_rate(status);
  if (!base) {
    throw Error(ErrorCode::MissingStatusRate,
                "menu for '" + menu.drug_id + "' offers no " + status.label() + " rate");
  }
  Rate total = *base;
  if (status.is_preferred()) {
    for (std::size_t idx : active_options) {
      if (idx >= menu.exclusionary_options.size()) {
        throw Error(ErrorCode::InvalidValue,
                    "menu for '" + menu.drug_id + "' has no exclusionary option " + std::to_string(idx));
      }
      total += menu.exclusionary_options[idx].incremental_rate;
    }
  }
  if (policy.count_admin_fee_in_cost && menu.admin_fee) total += *menu.admin_fee;
  return {total, total > one_rate()};
}

inline Money net_unit_price(const Money& wac, const Rate& effective_rate) {
  return wac * (one_rate() - effective_rate);
}

inline Money rebate_dollars(const Rate& share, std::int64_t total_units, const Money& wac, const Rate& rate) {
  return wac * share * rate * Decimal(total_units);
}

}  // namespace formwdp
