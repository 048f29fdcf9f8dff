#include "adamra/rational.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace adamra {
namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("invalid rational '" + std::string(whole) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return {num / g, den / g};
}

Rational Rational::parse(std::string_view text) {
  const auto t = trim(text);
  if (const auto slash = t.find('/'); slash != std::string_view::npos) {
    return make(parse_int(trim(t.substr(0, slash)), text), parse_int(trim(t.substr(slash + 1)), text));
  }
  if (const auto dot = t.find('.'); dot != std::string_view::npos) {
    const auto frac = t.substr(dot + 1);
    if (frac.size() > 15) throw std::invalid_argument("too many decimals in '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const auto int_part = t.substr(0, dot);
    const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, text);
    const std::int64_t part = frac.empty() ? 0 : parse_int(frac, text);
    if (part < 0) throw std::invalid_argument("invalid rational '" + std::string(text) + "'");
    const bool negative = !int_part.empty() && int_part.front() == '-';
    return make(whole * den + (negative ? -part : part), den);
  }
  return make(parse_int(t, text), 1);
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::int64_t Rational::round_times(std::int64_t n) const noexcept {
  const int128_t scaled = static_cast<int128_t>(2) * n * num + den;
  return static_cast<std::int64_t>(scaled / (static_cast<int128_t>(2) * den));
}

}  // namespace adamra
