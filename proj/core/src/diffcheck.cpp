#include "adamra/diffcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace adamra::diffcheck {
namespace {

double norm2(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x * x;
  return std::sqrt(total);
}

double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(diff) / std::max({norm2(a), norm2(b), 1e-12});
}

void require_same_layout(const ParamVector& a, const ParamVector& b) {
  if (a.layout != b.layout || a.values.size() != b.values.size()) {
    throw std::invalid_argument("diffcheck: parameter layouts differ");
  }
}

// Applies fn to each block's slice of values.
template <class F>
void for_each_slice(const ParamVector& v, F&& fn) {
  std::size_t offset = 0;
  for (const auto& block : v.layout) {
    const std::size_t len = block.rows * block.cols;
    fn(block, offset, len);
    offset += len;
  }
}

std::uint64_t resample_seed(std::uint64_t seed, std::size_t attempt) {
  return seed + 0x9E3779B97F4A7C15ULL * attempt;
}

double min_abs_entry(const Matrix& m) {
  double best = std::numeric_limits<double>::infinity();
  for (double v : m.values()) best = std::min(best, std::abs(v));
  return best;
}

// Smallest |pre-activation| fed to a ReLU feature map anywhere in the layer.
double min_feature_margin(const ForwardTrace& t) {
  double best = std::numeric_limits<double>::infinity();
  if (t.cfg.phi != FeatureMap::relu) return best;
  for (const auto& head : t.heads) {
    for (const auto& sub : head.subheads) {
      best = std::min({best, min_abs_entry(sub.q), min_abs_entry(sub.k)});
    }
  }
  return best;
}

ParamVector with_input_block(ParamVector v, const Matrix& x) {
  v.layout.push_back({"x", x.rows(), x.cols()});
  v.values.insert(v.values.end(), x.values().begin(), x.values().end());
  return v;
}

// Splits a parameter-plus-input vector back into an instance.
LayerInstance split_instance(const ParamVector& theta, const LayerInstance& base) {
  ParamVector params;
  params.layout.assign(theta.layout.begin(), theta.layout.end() - 1);
  const std::size_t count = params.expected_size();
  params.values.assign(theta.values.begin(),
                       theta.values.begin() + static_cast<std::ptrdiff_t>(count));
  LayerInstance inst{base.cfg, unflatten(params, base.cfg),
                     Matrix(base.x.rows(), base.x.cols(),
                            std::span<const double>(theta.values).subspan(count)),
                     base.target};
  return inst;
}

AttentionCheckReport finish_attention_check(const ParamVector& analytic,
                                             const ParamVector& numeric) {
  AttentionCheckReport report;
  report.blocks = blockwise_rel_error(analytic, numeric);
  report.total_rel_error = grad_rel_error(analytic, numeric);
  for (const auto& b : report.blocks) {
    report.max_rel_error = std::max(report.max_rel_error, b.rel_error);
  }
  return report;
}

struct AttentionOperands {
  Matrix q, k, v, weights;
};

AttentionOperands attention_operands(std::size_t n_q, std::size_t n_k, std::size_t dim,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AttentionOperands ops{random_uniform(n_q, dim, -1, 1, rng), random_uniform(n_k, dim, -1, 1, rng),
                        random_uniform(n_k, dim, -1, 1, rng), random_uniform(n_q, dim, -1, 1, rng)};
  // Keep ReLU pre-activations away from the kink.
  for (Matrix* m : {&ops.q, &ops.k}) {
    for (double& x : m->values()) {
      if (std::abs(x) < 0.05) x = x < 0 ? -0.05 - std::abs(x) : 0.05 + x;
    }
  }
  return ops;
}

template <class Forward, class Backward>
AttentionCheckReport check_attention(const AttentionOperands& ops, double h, Forward forward,
                                     Backward backward) {
  const AttentionGrads g = backward(ops.q, ops.k, ops.v, ops.weights);
  const ParamVector theta = flatten_blocks({{"q", &ops.q}, {"k", &ops.k}, {"v", &ops.v}});
  const ParamVector analytic = flatten_blocks({{"q", &g.dq}, {"k", &g.dk}, {"v", &g.dv}});
  const auto loss = [&](const ParamVector& t) {
    std::span<const double> vals(t.values);
    const std::size_t nq = ops.q.size();
    const std::size_t nk = ops.k.size();
    const Matrix q(ops.q.rows(), ops.q.cols(), vals.subspan(0, nq));
    const Matrix k(ops.k.rows(), ops.k.cols(), vals.subspan(nq, nk));
    const Matrix v(ops.v.rows(), ops.v.cols(), vals.subspan(nq + nk));
    return sum(hadamard(forward(q, k, v), ops.weights));
  };
  return finish_attention_check(analytic, finite_diff_grad(loss, theta, h));
}

}  // namespace

std::size_t ParamVector::expected_size() const noexcept {
  std::size_t total = 0;
  for (const auto& b : layout) total += b.rows * b.cols;
  return total;
}

ParamVector flatten_blocks(const std::vector<NamedBlock>& blocks) {
  ParamVector v;
  for (const auto& b : blocks) {
    v.layout.push_back({b.name, b.block->rows(), b.block->cols()});
    v.values.insert(v.values.end(), b.block->values().begin(), b.block->values().end());
  }
  return v;
}

ParamVector flatten(const AdamraParams& p) {
  std::vector<NamedBlock> blocks;
  p.for_each_block([&blocks](const std::string& name, const Matrix& m) {
    blocks.push_back({name, &m});
  });
  return flatten_blocks(blocks);
}

std::vector<BlockLayout> param_layout(const AdamraConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d;
  const std::size_t dk = cfg.head_dim();
  std::vector<BlockLayout> layout = {
      {"qkv.w_q", d, d}, {"qkv.w_k", d, d}, {"qkv.w_v", d, d}, {"w_router", d, cfg.heads}};
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    for (std::size_t s = 0; s < cfg.subheads; ++s) {
      const std::string prefix = "head" + std::to_string(h) + ".sub" + std::to_string(s) + ".";
      layout.push_back({prefix + "w_q", d, dk});
      layout.push_back({prefix + "w_k", d, dk});
      layout.push_back({prefix + "w_v", d, dk});
    }
  }
  layout.push_back({"w_o", cfg.subheads * dk, d});
  return layout;
}

AdamraParams unflatten(const ParamVector& v, const AdamraConfig& cfg) {
  if (v.layout != param_layout(cfg) || v.values.size() != v.expected_size()) {
    throw std::invalid_argument("unflatten: layout does not match the layer configuration");
  }
  AdamraParams p = AdamraParams::zeros(cfg);
  std::size_t offset = 0;
  p.for_each_block([&](const std::string&, Matrix& m) {
    std::copy_n(v.values.begin() + static_cast<std::ptrdiff_t>(offset), m.size(),
                m.values().begin());
    offset += m.size();
  });
  return p;
}

ParamVector finite_diff_grad(const Loss& loss, const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be > 0");
  ParamVector grad{std::vector<double>(theta.values.size(), 0.0), theta.layout};
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.values.size(); ++i) {
    const double orig = theta.values[i];
    probe.values[i] = orig + h;
    const double up = loss(probe);
    probe.values[i] = orig - h;
    const double down = loss(probe);
    probe.values[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("finite_diff_grad: non-finite loss at coordinate " +
                              std::to_string(i));
    }
    grad.values[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double grad_rel_error(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b);
  return rel_error(a.values, b.values);
}

std::vector<BlockError> blockwise_rel_error(const ParamVector& analytic,
                                            const ParamVector& numeric) {
  require_same_layout(analytic, numeric);
  std::vector<BlockError> out;
  for_each_slice(analytic, [&](const BlockLayout& block, std::size_t offset, std::size_t len) {
    std::span<const double> a(analytic.values.data() + offset, len);
    std::span<const double> b(numeric.values.data() + offset, len);
    out.push_back({block.name, rel_error(a, b), norm2(a), norm2(b)});
  });
  return out;
}

LayerInstance make_layer_instance(const AdamraConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LayerInstance inst{cfg, AdamraParams::init(cfg, rng), Matrix(), Matrix()};
  inst.x = random_uniform(n, cfg.d, -1.0, 1.0, rng);
  inst.target = random_uniform(n, cfg.d, -1.0, 1.0, rng);
  return inst;
}

double layer_loss(const LayerInstance& inst) {
  const Matrix y = adamra_forward(inst.x, inst.params, inst.cfg).output;
  const Matrix r = subtract(y, inst.target);
  double total = 0.0;
  for (double v : r.values()) total += v * v;
  return total;
}

LayerCheckReport check_layer_gradients(const AdamraConfig& cfg, std::size_t n,
                                       std::uint64_t seed, const LayerCheckOptions& opts) {
  LayerCheckReport report;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt > opts.max_resamples) {
      throw std::runtime_error("check_layer_gradients: no instance clear of routing and "
                               "feature-map kinks after " +
                               std::to_string(opts.max_resamples) + " resamples");
    }
    const std::uint64_t s = resample_seed(seed, attempt);
    const LayerInstance inst = make_layer_instance(cfg, n, s);
    const ForwardResult fwd = adamra_forward(inst.x, inst.params, cfg);
    if (cfg.routing == Routing::learned &&
        min_router_margin(fwd.trace.qkv.q, inst.params.w_router) < opts.router_margin) {
      continue;
    }
    if (min_feature_margin(fwd.trace) < opts.feature_margin) continue;

    const Matrix upstream = scale(subtract(fwd.output, inst.target), 2.0);
    const AdamraGradients g = adamra_backward(fwd.trace, inst.params, upstream);
    const ParamVector analytic = with_input_block(flatten(g.params), g.dx);
    const ParamVector theta = with_input_block(flatten(inst.params), inst.x);
    const ParamVector numeric = finite_diff_grad(
        [&inst](const ParamVector& t) { return layer_loss(split_instance(t, inst)); }, theta,
        opts.h);

    report.seed = s;
    report.resamples = attempt;
    report.blocks = blockwise_rel_error(analytic, numeric);
    report.total_rel_error = grad_rel_error(analytic, numeric);
    for (const auto& b : report.blocks) {
      report.max_rel_error = std::max(report.max_rel_error, b.rel_error);
    }
    return report;
  }
}

AttentionCheckReport check_kernel_attention_gradients(std::size_t n_q, std::size_t n_k,
                                                      std::size_t dim, FeatureMap phi,
                                                      std::uint64_t seed, double h) {
  const AttentionOperands ops = attention_operands(n_q, n_k, dim, seed);
  return check_attention(
      ops, h,
      [phi](const Matrix& q, const Matrix& k, const Matrix& v) {
        return kernel_attention(q, k, v, phi);
      },
      [phi](const Matrix& q, const Matrix& k, const Matrix& v, const Matrix& up) {
        return kernel_attention_backward(q, k, v, phi, kDefaultKernelEps, up);
      });
}

AttentionCheckReport check_softmax_attention_gradients(std::size_t n_q, std::size_t n_k,
                                                       std::size_t dim, std::uint64_t seed,
                                                       double h) {
  const AttentionOperands ops = attention_operands(n_q, n_k, dim, seed);
  const double s = default_softmax_scale(dim);
  return check_attention(
      ops, h,
      [s](const Matrix& q, const Matrix& k, const Matrix& v) {
        return softmax_attention(q, k, v, s);
      },
      [s](const Matrix& q, const Matrix& k, const Matrix& v, const Matrix& up) {
        return softmax_attention_backward(q, k, v, s, up);
      });
}

}  // namespace adamra::diffcheck
