#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "formwdp/decimal.hpp"

namespace formwdp {

/// Strong wrapper around Decimal. The tag keeps dimensionless rates and
/// dollar amounts from being mixed by accident.
template <class Tag>
class Quantity {
 public:
  constexpr Quantity() = default;
  explicit Quantity(Decimal value) : value_(value) {}
  explicit Quantity(std::int64_t integer) : value_(integer) {}

  [[nodiscard]] const Decimal& value() const noexcept { return value_; }
  [[nodiscard]] int sign() const noexcept { return value_.sign(); }
  [[nodiscard]] bool is_zero() const noexcept { return value_.is_zero(); }

  friend Quantity operator+(const Quantity& a, const Quantity& b) {
    return Quantity(a.value_ + b.value_);
  }
  friend Quantity operator-(const Quantity& a, const Quantity& b) {
    return Quantity(a.value_ - b.value_);
  }
  friend Quantity operator-(const Quantity& a) { return Quantity(-a.value_); }
  Quantity& operator+=(const Quantity& o) { return *this = *this + o; }
  Quantity& operator-=(const Quantity& o) { return *this = *this - o; }

  /// Scales by a dimensionless factor (units, counts).
  friend Quantity operator*(const Quantity& a, const Decimal& factor) {
    return Quantity(a.value_ * factor);
  }
  friend Quantity operator*(const Decimal& factor, const Quantity& a) { return a * factor; }

  [[nodiscard]] Quantity rounded(int scale, Rounding mode = Rounding::HalfUp) const {
    return Quantity(value_.rounded(scale, mode));
  }

  friend bool operator==(const Quantity& a, const Quantity& b) noexcept {
    return a.value_ == b.value_;
  }
  friend std::strong_ordering operator<=>(const Quantity& a, const Quantity& b) {
    return a.value_ <=> b.value_;
  }

 private:
  Decimal value_;
};

struct RateTag {};
struct MoneyTag {};

/// Dimensionless fraction (a bid as % off WAC, a market share, a margin).
/// Bid inputs carry at most four decimals; derived rates stay exact.
using Rate = Quantity<RateTag>;

/// Dollar amount, per unit or total depending on the field it lives in.
using Money = Quantity<MoneyTag>;

inline Rate operator*(const Rate& a, const Rate& b) { return Rate(a.value() * b.value()); }
inline Money operator*(const Money& m, const Rate& r) { return Money(m.value() * r.value()); }
inline Money operator*(const Rate& r, const Money& m) { return m * r; }

inline constexpr int kRateScale = 4;

inline Rate one_rate() { return Rate(std::int64_t{1}); }

inline bool in_unit_interval(const Rate& r) { return r.sign() >= 0 && r <= one_rate(); }

/// True when the rate is representable in basis points.
inline bool at_basis_point_resolution(const Rate& r) { return r.value().scale() <= kRateScale; }

/// Integer basis points; nullopt when the rate carries finer resolution.
inline std::optional<std::int64_t> basis_points(const Rate& r) {
  if (!at_basis_point_resolution(r)) return std::nullopt;
  const Decimal::Mantissa m = r.value().mantissa() * Decimal::pow10(kRateScale - r.value().scale());
  return static_cast<std::int64_t>(m);
}

inline Rate from_basis_points(std::int64_t bp) {
  return Rate(Decimal::from_scaled(bp, kRateScale));
}

/// Four-decimal fixed text, the canonical rate rendering.
inline std::string format_rate(const Rate& r) { return r.value().to_fixed(kRateScale); }

/// Exact text with at least cents.
inline std::string format_money(const Money& m) { return m.value().to_string(2); }

inline std::string format_percent(const Rate& r, int decimals = 1) {
  return (r.value() * Decimal(100)).to_fixed(decimals) + "%";
}

namespace literals {

inline Rate operator""_rate(const char* text, std::size_t n) {
  return Rate(Decimal::parse_or_throw(std::string_view(text, n)));
}

inline Money operator""_usd(const char* text, std::size_t n) {
  return Money(Decimal::parse_or_throw(std::string_view(text, n)));
}

inline Decimal operator""_dec(const char* text, std::size_t n) {
  return Decimal::parse_or_throw(std::string_view(text, n));
}

}  // namespace literals

}  // namespace formwdp
