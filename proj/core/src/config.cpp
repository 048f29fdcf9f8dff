#include "adamra/config.hpp"

#include <algorithm>

namespace adamra {

std::string_view to_string(Routing r) noexcept {
  return r == Routing::learned ? "learned" : "random";
}

Routing parse_routing(std::string_view name) {
  if (name == "learned") return Routing::learned;
  if (name == "random") return Routing::random;
  throw ConfigError("unknown routing mode '" + std::string(name) + "'");
}

std::size_t AdamraConfig::landmarks(std::size_t head, std::size_t n) const {
  if (head >= rates.size()) throw ConfigError("landmarks: head index out of range");
  const auto m = rates[head].round_times(static_cast<std::int64_t>(n));
  return static_cast<std::size_t>(std::max<std::int64_t>(1, m));
}

std::size_t AdamraConfig::total_landmarks(std::size_t n) const {
  std::size_t total = 0;
  for (std::size_t h = 0; h < rates.size(); ++h) total += landmarks(h, n);
  return total;
}

bool AdamraConfig::single_resolution() const noexcept {
  return std::adjacent_find(rates.begin(), rates.end(), std::not_equal_to<>{}) == rates.end();
}

void AdamraConfig::validate() const {
  if (d == 0) throw ConfigError("adamra: d must be >= 1");
  if (heads == 0) throw ConfigError("adamra: heads must be >= 1");
  if (subheads == 0) throw ConfigError("adamra: subheads must be >= 1");
  if (d % subheads != 0) {
    throw ConfigError("adamra: d=" + std::to_string(d) + " not divisible by subheads=" +
                      std::to_string(subheads));
  }
  if (rates.size() != heads) {
    throw ConfigError("adamra: " + std::to_string(rates.size()) + " compression rates for " +
                      std::to_string(heads) + " heads");
  }
  for (const auto& c : rates) {
    if (c.num <= 0 || c.num > c.den) {
      throw ConfigError("adamra: compression rate " + c.str() + " outside (0, 1]");
    }
  }
  if (!(eps > 0.0)) throw ConfigError("adamra: eps must be > 0");
}

std::string AdamraConfig::rates_string() const {
  std::string out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (i) out += ',';
    out += rates[i].str();
  }
  return out;
}

std::vector<Rational> parse_rates(std::string_view text) {
  std::vector<Rational> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(Rational::parse(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty compression rate list");
  return out;
}

}  // namespace adamra
