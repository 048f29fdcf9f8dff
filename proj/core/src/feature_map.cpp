#include "adamra/feature_map.hpp"

#include <cmath>
#include <stdexcept>

namespace adamra {
namespace {

[[noreturn]] void not_factorizable(FeatureMap f) {
  throw std::invalid_argument("feature map '" + std::string(to_string(f)) +
                              "' has no kernel factorization");
}

}  // namespace

std::string_view to_string(FeatureMap f) noexcept {
  switch (f) {
    case FeatureMap::relu: return "relu";
    case FeatureMap::elu_plus_one: return "elu+1";
    case FeatureMap::softmax: return "softmax";
  }
  return "?";
}

FeatureMap parse_feature_map(std::string_view name) {
  if (name == "relu") return FeatureMap::relu;
  if (name == "elu+1" || name == "elu_plus_one") return FeatureMap::elu_plus_one;
  if (name == "softmax") return FeatureMap::softmax;
  throw std::invalid_argument("unknown feature map '" + std::string(name) + "'");
}

bool is_factorizable(FeatureMap f) noexcept { return f != FeatureMap::softmax; }

Matrix apply_feature_map(FeatureMap f, const Matrix& x) {
  switch (f) {
    case FeatureMap::relu: return relu(x);
    case FeatureMap::elu_plus_one: return elu_plus_one(x);
    case FeatureMap::softmax: break;
  }
  not_factorizable(f);
}

Matrix feature_map_derivative(FeatureMap f, const Matrix& x) {
  if (!is_factorizable(f)) not_factorizable(f);
  Matrix d(x.rows(), x.cols());
  auto src = x.values();
  auto dst = d.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (f == FeatureMap::relu) {
      dst[i] = src[i] > 0.0 ? 1.0 : 0.0;
    } else {
      dst[i] = src[i] > 0.0 ? 1.0 : std::exp(src[i]);
    }
  }
  return d;
}

}  // namespace adamra
