#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace adamra {

__extension__ using int128_t = __int128;

// Exact positive-or-zero rational used for compression rates such as 1/32.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  // Reduced form; throws std::invalid_argument on a zero denominator.
  static Rational make(std::int64_t num, std::int64_t den);
  // "3", "1/4" or a finite decimal such as "0.125".
  static Rational parse(std::string_view text);

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  // round(n · num/den), halves rounded up, computed in integers.
  std::int64_t round_times(std::int64_t n) const noexcept;

  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num == b.num && a.den == b.den;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
    return static_cast<int128_t>(a.num) * b.den <=> static_cast<int128_t>(b.num) * a.den;
  }
};

}  // namespace adamra
