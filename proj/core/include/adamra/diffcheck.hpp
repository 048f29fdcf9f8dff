#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adamra/adamra.hpp"

namespace adamra::diffcheck {

struct BlockLayout {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

// Flat parameter vector plus the (name, rows, cols) blocks it was built from.
struct ParamVector {
  std::vector<double> values;
  std::vector<BlockLayout> layout;

  // Σ rows·cols over the layout.
  std::size_t expected_size() const noexcept;
};

struct NamedBlock {
  std::string name;
  const Matrix* block;
};

ParamVector flatten_blocks(const std::vector<NamedBlock>& blocks);
ParamVector flatten(const AdamraParams& p);
// Throws std::invalid_argument when the layout does not match cfg.
AdamraParams unflatten(const ParamVector& v, const AdamraConfig& cfg);

// Layout AdamraParams would flatten to, without building the parameters.
std::vector<BlockLayout> param_layout(const AdamraConfig& cfg);

using Loss = std::function<double(const ParamVector&)>;

// Central differences (f(θ + h·e_i) − f(θ − h·e_i)) / 2h. A non-finite loss
// evaluation throws std::domain_error naming the coordinate.
ParamVector finite_diff_grad(const Loss& loss, const ParamVector& theta, double h = 1e-5);

// ‖a − b‖₂ / max(‖a‖₂, ‖b‖₂, 1e-12)
double grad_rel_error(const ParamVector& a, const ParamVector& b);

struct BlockError {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

std::vector<BlockError> blockwise_rel_error(const ParamVector& analytic,
                                            const ParamVector& numeric);

// ---- layer gradient check --------------------------------------------------

struct LayerCheckOptions {
  double h = 1e-5;
  // Instances whose router logit gap or ReLU pre-activation magnitude falls
  // below these margins are resampled.
  double router_margin = 1e-3;
  double feature_margin = 1e-3;
  std::size_t max_resamples = 200;
};

struct LayerCheckReport {
  std::uint64_t seed = 0;       // seed of the accepted instance
  std::size_t resamples = 0;
  std::vector<BlockError> blocks;  // parameter blocks followed by "x"
  double max_rel_error = 0.0;      // worst single block
  double total_rel_error = 0.0;    // whole gradient vector, parameters and x
};

struct LayerInstance {
  AdamraConfig cfg;
  AdamraParams params;
  Matrix x;
  Matrix target;
};

// Seeded random instance: x and target uniform in [-1, 1].
LayerInstance make_layer_instance(const AdamraConfig& cfg, std::size_t n, std::uint64_t seed);

// Σ (adamra_forward(x) − target)²
double layer_loss(const LayerInstance& inst);

// Compares adamra_backward against finite differences of layer_loss for
// every parameter block and the input.
LayerCheckReport check_layer_gradients(const AdamraConfig& cfg, std::size_t n,
                                       std::uint64_t seed, const LayerCheckOptions& opts = {});

// Gradient check of the attention baselines w.r.t. q, k and v.
struct AttentionCheckReport {
  std::vector<BlockError> blocks;  // "q", "k", "v"
  double max_rel_error = 0.0;
  double total_rel_error = 0.0;
};
AttentionCheckReport check_kernel_attention_gradients(std::size_t n_q, std::size_t n_k,
                                                      std::size_t dim, FeatureMap phi,
                                                      std::uint64_t seed, double h = 1e-5);
AttentionCheckReport check_softmax_attention_gradients(std::size_t n_q, std::size_t n_k,
                                                       std::size_t dim, std::uint64_t seed,
                                                       double h = 1e-5);

}  // namespace adamra::diffcheck
