#pragma once

#include <string>
#include <string_view>

#include "adamra/matrix.hpp"

namespace adamra {

// Similarity used inside an attention head. `relu` and `elu_plus_one` are
// factorizable feature maps (sim = φ(q)ᵀφ(k)); `softmax` selects exact
// exp-similarity attention and has no feature map.
enum class FeatureMap { relu, elu_plus_one, softmax };

std::string_view to_string(FeatureMap f) noexcept;
// Accepts "relu", "elu+1"/"elu_plus_one", "softmax". Throws std::invalid_argument.
FeatureMap parse_feature_map(std::string_view name);

bool is_factorizable(FeatureMap f) noexcept;

// φ applied elementwise. Throws std::invalid_argument for FeatureMap::softmax.
Matrix apply_feature_map(FeatureMap f, const Matrix& x);
// dφ/dx evaluated at the pre-activation x (ReLU derivative at 0 is taken as 0).
Matrix feature_map_derivative(FeatureMap f, const Matrix& x);

}  // namespace adamra
