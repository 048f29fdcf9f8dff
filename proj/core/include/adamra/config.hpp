#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adamra/attention.hpp"
#include "adamra/feature_map.hpp"
#include "adamra/rational.hpp"

namespace adamra {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Routing { learned, random };

std::string_view to_string(Routing r) noexcept;
Routing parse_routing(std::string_view name);

// Hyperparameters of one AdaMRA layer.
struct AdamraConfig {
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t subheads = 2;
  // One compression rate per head, each in (0, 1].
  std::vector<Rational> rates = {Rational{1, 4}, Rational{1, 8}, Rational{1, 16},
                                 Rational{1, 32}};
  FeatureMap phi = FeatureMap::relu;
  double eps = kDefaultKernelEps;
  Routing routing = Routing::learned;
  // Scale each token's head output by its winning router probability.
  bool gate_scaling = true;

  // d_k = d_v = d / S
  std::size_t head_dim() const noexcept { return d / subheads; }

  // m_h = max(1, round(n · c_h))
  std::size_t landmarks(std::size_t head, std::size_t n) const;
  std::size_t total_landmarks(std::size_t n) const;

  // True when every head shares one compression rate.
  bool single_resolution() const noexcept;

  // Throws ConfigError on any violated invariant.
  void validate() const;

  std::string rates_string() const;
};

// Parses "1/4,1/8,1/16".
std::vector<Rational> parse_rates(std::string_view text);

}  // namespace adamra
