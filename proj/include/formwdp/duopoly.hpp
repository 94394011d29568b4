#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "formwdp/error.hpp"
#include "formwdp/quantity.hpp"

namespace formwdp::duopoly {

/// Two-bidder bid menu. Labels follow the prose of the model: the incumbent
/// bids for the exclusive position and bids down for the shared one; the
/// entrant bids only for the shared position.
struct DuopolyBids {
  Rate incumbent_exclusive;  // b1
  Rate incumbent_shared;     // b2
  Rate entrant_shared;       // b3
  Rate entrant_share;        // x, entrant's expected share when shared
};

enum class Preference { Exclusive, Shared };

constexpr std::string_view to_string(Preference p) noexcept {
  return p == Preference::Exclusive ? "exclusive" : "shared";
}

struct Favorability {
  Preference decision = Preference::Shared;
  /// b1 - (b2 + x (b3 - b2)); positive favors the exclusive assignment.
  Rate margin;
};

/// Exclusive iff b1 > b2 + x (b3 - b2). Exact ties go to Shared.
inline Favorability favors_exclusive(const DuopolyBids& bids) {
  const Rate blended = bids.incumbent_shared + bids.entrant_share * (bids.entrant_shared - bids.incumbent_shared);
  const Rate margin = bids.incumbent_exclusive - blended;
  return {margin.sign() > 0 ? Preference::Exclusive : Preference::Shared, margin};
}

enum class Dominance {
  None,
  ExclusiveEverywhere,  // x* > 1
  SharedEverywhere,     // x* < 0
};

constexpr std::string_view to_string(Dominance d) noexcept {
  switch (d) {
    case Dominance::None: return "none";
    case Dominance::ExclusiveEverywhere: return "exclusive_dominates";
    case Dominance::SharedEverywhere: return "shared_dominates";
  }
  return "?";
}

/// Entrant share at which both assignments cost the same, kept as an exact
/// ratio; `share` is that ratio rounded to a basis point.
struct EqualizingShare {
  Rate bid_down;        // numerator
  Rate bid_difference;  // denominator, always positive
  Rate share;
  Dominance dominance = Dominance::None;

  /// Exact form of x < x*.
  [[nodiscard]] bool exclusive_preferred_at(const Rate& x) const { return x * bid_difference < bid_down; }
};

namespace detail {

inline EqualizingShare make_equalizing(const Rate& numerator, const Rate& denominator) {
  if (denominator.sign() <= 0) {
    throw Error(ErrorCode::DegenerateBids,
                "entrant shared bid must exceed the incumbent's shared bid (bid difference " +
                    denominator.value().to_string() + ")");
  }
  EqualizingShare eq{numerator, denominator, Rate(numerator.value().divide(denominator.value(), kRateScale)),
                     Dominance::None};
  if (numerator > denominator) {
    eq.dominance = Dominance::ExclusiveEverywhere;
  } else if (numerator.sign() < 0) {
    eq.dominance = Dominance::SharedEverywhere;
  }
  return eq;
}

}  // namespace detail

/// x* = (b1 - b2) / (b3 - b2).
inline EqualizingShare equalizing_share(const Rate& b1, const Rate& b2, const Rate& b3) {
  return detail::make_equalizing(b1 - b2, b3 - b2);
}

/// x* with the incumbent's shared bid pinned to (1 - delta) b1:
/// (delta b1) / (b3 - (1 - delta) b1).
inline EqualizingShare equalizing_share_limited(const Rate& b1, const Rate& b3, const Rate& delta) {
  const Rate limited_shared = (one_rate() - delta) * b1;
  return detail::make_equalizing(delta * b1, b3 - limited_shared);
}

/// Smallest acceptable exclusionary increment: the tier-3 rebates forgone
/// when the competitor is excluded instead, (1 - delta) b1 t3_share.
inline Rate ld_minimum(const Rate& b1, const Rate& delta, const Rate& t3_share) {
  return (one_rate() - delta) * b1 * t3_share;
}

struct ExplicitSharedBid {
  Rate incumbent_shared;
};
struct BidDownLimit {
  Rate delta;
};
using IncumbentSharedBid = std::variant<ExplicitSharedBid, BidDownLimit>;

struct CurvePoint {
  Rate x;
  Preference decision = Preference::Shared;
  Rate margin;
};

/// `grid_points` evenly spaced shares over [0, 1], each rounded to a basis
/// point and evaluated with favors_exclusive. Under a bid-down limit the
/// incumbent's shared bid is (1 - delta) b1 and degenerate bids are rejected.
inline std::vector<CurvePoint> favorability_curve(const Rate& b1, const Rate& b3, const IncumbentSharedBid& shared,
                                                  int grid_points) {
  if (grid_points < 2) throw Error(ErrorCode::InvalidValue, "curve needs at least 2 grid points");
  Rate b2;
  if (const auto* limit = std::get_if<BidDownLimit>(&shared)) {
    equalizing_share_limited(b1, b3, limit->delta);  // throws on degenerate bids
    b2 = (one_rate() - limit->delta) * b1;
  } else {
    b2 = std::get<ExplicitSharedBid>(shared).incumbent_shared;
  }
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(grid_points));
  const Decimal steps(grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const Rate x(Decimal(i).divide(steps, kRateScale));
    const auto f = favors_exclusive({b1, b2, b3, x});
    out.push_back({x, f.decision, f.margin});
  }
  return out;
}

}  // namespace formwdp::duopoly
