#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace formwdp {

/// Raised when an exact decimal operation would overflow its 128-bit
/// mantissa or exceed the maximum supported scale.
class DecimalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Rounding {
  HalfUp,    // ties away from zero
  HalfEven,  // ties to even
  Down,      // toward zero
};

/// Exact base-10 fixed point number: mantissa * 10^-scale.
///
/// Values are kept normalized (no trailing zeros in the mantissa), so two
/// equal numbers always share one representation. Addition, subtraction and
/// multiplication are exact; division always names its result scale and
/// rounding mode.
class Decimal {
 public:
  using Mantissa = __int128;
  static constexpr int kMaxScale = 30;

  constexpr Decimal() noexcept = default;
  constexpr explicit Decimal(std::int64_t integer) noexcept : mantissa_(integer) {}

  static Decimal from_scaled(Mantissa mantissa, int scale) {
    if (scale < 0 || scale > kMaxScale) {
      throw DecimalError("decimal scale out of range");
    }
    Decimal d;
    d.mantissa_ = mantissa;
    d.scale_ = scale;
    d.normalize();
    return d;
  }

  /// Parses `[-]digits[.digits]`. No exponents, no leading '+', no bare '.'.
  static std::optional<Decimal> parse(std::string_view text) noexcept {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t pos = 0;
    if (text[0] == '-') {
      negative = true;
      pos = 1;
    }
    Mantissa m = 0;
    int scale = 0;
    int digits = 0;
    bool seen_point = false;
    bool digit_before_point = false;
    bool digit_after_point = false;
    for (; pos < text.size(); ++pos) {
      const char c = text[pos];
      if (c == '.') {
        if (seen_point || !digit_before_point) return std::nullopt;
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') return std::nullopt;
      if (seen_point) {
        digit_after_point = true;
        if (++scale > kMaxScale) return std::nullopt;
      } else {
        digit_before_point = true;
      }
      if (m != 0 || c != '0') ++digits;
      if (digits > 36) return std::nullopt;
      m = m * 10 + (c - '0');
    }
    if (!digit_before_point || (seen_point && !digit_after_point)) return std::nullopt;
    return from_scaled(negative ? -m : m, scale);
  }

  static Decimal parse_or_throw(std::string_view text) {
    auto d = parse(text);
    if (!d) throw DecimalError("invalid decimal literal '" + std::string(text) + "'");
    return *d;
  }

  [[nodiscard]] constexpr Mantissa mantissa() const noexcept { return mantissa_; }
  [[nodiscard]] constexpr int scale() const noexcept { return scale_; }
  [[nodiscard]] constexpr int sign() const noexcept {
    return mantissa_ > 0 ? 1 : (mantissa_ < 0 ? -1 : 0);
  }
  [[nodiscard]] constexpr bool is_zero() const noexcept { return mantissa_ == 0; }

  friend Decimal operator+(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    return from_scaled(checked_add(a.rescaled(s), b.rescaled(s)), s);
  }
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }
  friend Decimal operator-(const Decimal& a) {
    Decimal d = a;
    d.mantissa_ = -d.mantissa_;
    return d;
  }
  friend Decimal operator*(const Decimal& a, const Decimal& b) {
    Mantissa m = 0;
    if (__builtin_mul_overflow(a.mantissa_, b.mantissa_, &m)) {
      throw DecimalError("decimal multiplication overflow");
    }
    return from_scaled(m, a.scale_ + b.scale_);
  }
  Decimal& operator+=(const Decimal& o) { return *this = *this + o; }
  Decimal& operator-=(const Decimal& o) { return *this = *this - o; }
  Decimal& operator*=(const Decimal& o) { return *this = *this * o; }

  /// this / divisor, rounded to `scale` fractional digits.
  [[nodiscard]] Decimal divide(const Decimal& divisor, int scale,
                               Rounding mode = Rounding::HalfUp) const {
    if (divisor.is_zero()) throw DecimalError("decimal division by zero");
    if (scale < 0 || scale > kMaxScale) throw DecimalError("decimal scale out of range");
    // q = (a * 10^-sa) / (b * 10^-sb) * 10^scale = a * 10^(scale + sb - sa) / b
    Mantissa num = mantissa_;
    Mantissa den = divisor.mantissa_;
    const int e = scale + divisor.scale_ - scale_;
    if (e >= 0) {
      num = checked_mul(num, pow10(e));
    } else {
      den = checked_mul(den, pow10(-e));
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
    return from_scaled(round_quotient(num / den, num % den, den, mode), scale);
  }

  [[nodiscard]] Decimal rounded(int scale, Rounding mode = Rounding::HalfUp) const {
    if (scale_ <= scale) return *this;
    const Mantissa div = pow10(scale_ - scale);
    return from_scaled(round_quotient(mantissa_ / div, mantissa_ % div, div, mode), scale);
  }

  /// Exact representation with at least `min_scale` fractional digits.
  [[nodiscard]] std::string to_string(int min_scale = 0) const {
    const int s = scale_ > min_scale ? scale_ : min_scale;
    return render(rescaled(s), s);
  }

  /// Rounded to exactly `scale` fractional digits.
  [[nodiscard]] std::string to_fixed(int scale, Rounding mode = Rounding::HalfUp) const {
    const Decimal r = rounded(scale, mode);
    return render(r.rescaled(scale), scale);
  }

  [[nodiscard]] double to_double() const noexcept {
    return static_cast<double>(mantissa_) / static_cast<double>(pow10(scale_));
  }

  friend bool operator==(const Decimal& a, const Decimal& b) noexcept {
    return a.mantissa_ == b.mantissa_ && a.scale_ == b.scale_;
  }
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    if (a.sign() != b.sign()) return a.sign() <=> b.sign();
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    const Mantissa x = a.rescaled(s);
    const Mantissa y = b.rescaled(s);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  static constexpr Mantissa pow10(int n) {
    if (n < 0 || n > 38) throw DecimalError("power of ten out of range");
    Mantissa p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
  }

 private:
  static Mantissa checked_mul(Mantissa a, Mantissa b) {
    Mantissa r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw DecimalError("decimal overflow");
    return r;
  }
  static Mantissa checked_add(Mantissa a, Mantissa b) {
    Mantissa r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw DecimalError("decimal overflow");
    return r;
  }

  static Mantissa round_quotient(Mantissa q, Mantissa r, Mantissa div, Rounding mode) {
    if (r == 0 || mode == Rounding::Down) return q;
    const Mantissa abs_r = r < 0 ? -r : r;
    const int dir = r < 0 ? -1 : 1;
    const Mantissa twice = abs_r * 2;
    bool up = false;
    if (mode == Rounding::HalfUp) {
      up = twice >= div;
    } else {
      up = twice > div || (twice == div && (q % 2 != 0));
    }
    return up ? q + dir : q;
  }

  [[nodiscard]] Mantissa rescaled(int target) const {
    if (target == scale_) return mantissa_;
    return checked_mul(mantissa_, pow10(target - scale_));
  }

  static std::string render(Mantissa m, int scale) {
    const bool negative = m < 0;
    // Work with the unsigned magnitude to cover the minimum value.
    unsigned __int128 u = negative ? static_cast<unsigned __int128>(-(m + 1)) + 1
                                   : static_cast<unsigned __int128>(m);
    std::string digits;
    do {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
      u /= 10;
    } while (u != 0);
    if (static_cast<int>(digits.size()) <= scale) {
      digits.insert(0, static_cast<std::size_t>(scale) + 1 - digits.size(), '0');
    }
    if (scale > 0) digits.insert(digits.size() - static_cast<std::size_t>(scale), 1, '.');
    if (negative) digits.insert(digits.begin(), '-');
    return digits;
  }

  void normalize() noexcept {
    if (mantissa_ == 0) {
      scale_ = 0;
      return;
    }
    while (scale_ > 0 && mantissa_ % 10 == 0) {
      mantissa_ /= 10;
      --scale_;
    }
  }

  Mantissa mantissa_ = 0;
  int scale_ = 0;
};

}  // namespace formwdp
