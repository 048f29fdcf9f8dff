#include "adamra/model.hpp"

#include <algorithm>
#include <cmath>

namespace adamra {
namespace {

constexpr double kLayerNormEps = 1e-5;

LayerNormParams layer_norm_identity(std::size_t d) { return {Matrix(1, d, 1.0), Matrix(1, d)}; }

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, LayerNormCache& cache) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  cache.normalized = Matrix(n, d);
  cache.inv_std.assign(n, 0.0);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (row[j] - mean) * inv;
      cache.normalized(i, j) = xhat;
      out(i, j) = xhat * p.gamma(0, j) + p.beta(0, j);
    }
  }
  return out;
}

// Returns dx; accumulates weighted dγ, dβ.
Matrix layer_norm_backward(const Matrix& upstream, const LayerNormParams& p,
                           const LayerNormCache& cache, LayerNormParams& grads, double weight) {
  const std::size_t n = upstream.rows();
  const std::size_t d = upstream.cols();
  Matrix dx(n, d);
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = upstream(i, j);
      const double xhat = cache.normalized(i, j);
      grads.gamma(0, j) += weight * g * xhat;
      grads.beta(0, j) += weight * g;
      dxhat[j] = g * p.gamma(0, j);
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat;
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      dx(i, j) = cache.inv_std[i] *
                 (dxhat[j] - mean_dxhat - cache.normalized(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias(0, j);
  }
}

void accumulate_bias_grad(Matrix& grad, const Matrix& upstream, double weight) {
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    auto row = upstream.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) grad(0, j) += weight * row[j];
  }
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  return seed * 0x9E3779B97F4A7C15ULL + layer + 1;
}

}  // namespace

void ModelConfig::validate() const {
  if (layers == 0) throw ConfigError("model: layers must be >= 1");
  if (d == 0 || ffn == 0 || classifier == 0) throw ConfigError("model: widths must be >= 1");
  if (attention.d != d) {
    throw ConfigError("model: attention width " + std::to_string(attention.d) +
                      " differs from model width " + std::to_string(d));
  }
  attention.validate();
  if (vocab_size == 0 || num_classes < 2 || max_len == 0) {
    throw ConfigError("model: vocab_size, num_classes and max_len must be set");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.tok_emb = Matrix(cfg.vocab_size, cfg.d);
  p.pos_emb = Matrix(cfg.positional ? cfg.max_len : 0, cfg.d);
  p.blocks.resize(cfg.layers);
  for (auto& b : p.blocks) {
    b.ln1 = {Matrix(1, cfg.d), Matrix(1, cfg.d)};
    b.attn = AdamraParams::zeros(cfg.attention);
    b.ln2 = {Matrix(1, cfg.d), Matrix(1, cfg.d)};
    b.w1 = Matrix(cfg.d, cfg.ffn);
    b.b1 = Matrix(1, cfg.ffn);
    b.w2 = Matrix(cfg.ffn, cfg.d);
    b.b2 = Matrix(1, cfg.d);
  }
  p.ln_f = {Matrix(1, cfg.d), Matrix(1, cfg.d)};
  p.wc1 = Matrix(cfg.d, cfg.classifier);
  p.bc1 = Matrix(1, cfg.classifier);
  p.wc2 = Matrix(cfg.classifier, cfg.num_classes);
  p.bc2 = Matrix(1, cfg.num_classes);
  return p;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::mt19937_64& rng) {
  ModelParams p = zeros(cfg);
  p.tok_emb = random_uniform(cfg.vocab_size, cfg.d, -1.0, 1.0, rng);
  if (cfg.positional) p.pos_emb = random_uniform(cfg.max_len, cfg.d, -1.0, 1.0, rng);
  for (auto& b : p.blocks) {
    b.ln1 = layer_norm_identity(cfg.d);
    b.attn = AdamraParams::init(cfg.attention, rng);
    b.ln2 = layer_norm_identity(cfg.d);
    b.w1 = init_weight(cfg.d, cfg.ffn, rng);
    b.w2 = init_weight(cfg.ffn, cfg.d, rng);
  }
  p.ln_f = layer_norm_identity(cfg.d);
  p.wc1 = init_weight(cfg.d, cfg.classifier, rng);
  p.wc2 = init_weight(cfg.classifier, cfg.num_classes, rng);
  return p;
}

ModelForward model_forward(const ModelParams& p, const ModelConfig& cfg,
                           std::span<const tasks::Token> tokens, std::uint64_t routing_seed) {
  const std::size_t n = tokens.size();
  if (n == 0 || n > cfg.max_len) {
    throw ShapeError("model_forward: sequence length " + std::to_string(n) + " outside [1, " +
                     std::to_string(cfg.max_len) + "]");
  }
  ModelForward fwd;
  fwd.tokens.assign(tokens.begin(), tokens.end());

  Matrix x(n, cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(tokens[i]);
    if (tokens[i] < 0 || t >= cfg.vocab_size) {
      throw std::out_of_range("model_forward: token " + std::to_string(tokens[i]) +
                              " outside vocabulary");
    }
    auto row = x.row(i);
    for (std::size_t j = 0; j < cfg.d; ++j) {
      row[j] = p.tok_emb(t, j) + (cfg.positional ? p.pos_emb(i, j) : 0.0);
    }
  }

  fwd.blocks.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const BlockParams& b = p.blocks[l];
    BlockCache& c = fwd.blocks[l];
    const Matrix h1 = layer_norm(x, b.ln1, c.ln1);
    ForwardResult attn = adamra_forward(h1, b.attn, cfg.attention, layer_seed(routing_seed, l));
    c.attn = std::move(attn.trace);
    add_inplace(x, attn.output);
    c.ffn_in = layer_norm(x, b.ln2, c.ln2);
    c.hidden_pre = matmul(c.ffn_in, b.w1);
    add_row_bias(c.hidden_pre, b.b1);
    c.hidden = relu(c.hidden_pre);
    Matrix f = matmul(c.hidden, b.w2);
    add_row_bias(f, b.b2);
    add_inplace(x, f);
  }

  const Matrix hf = layer_norm(x, p.ln_f, fwd.ln_f);
  fwd.pooled = Matrix(1, cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cfg.d; ++j) fwd.pooled(0, j) += hf(i, j);
  }
  for (double& v : fwd.pooled.values()) v /= static_cast<double>(n);
  fwd.head_pre = matmul(fwd.pooled, p.wc1);
  add_row_bias(fwd.head_pre, p.bc1);
  fwd.head_hidden = relu(fwd.head_pre);
  fwd.logits = matmul(fwd.head_hidden, p.wc2);
  add_row_bias(fwd.logits, p.bc2);
  return fwd;
}

double cross_entropy(const Matrix& logits, int label) {
  const Matrix probs = softmax_rows(logits);
  return -std::log(std::max(probs(0, static_cast<std::size_t>(label)), 1e-300));
}

double model_backward(const ModelForward& fwd, const ModelParams& p, const ModelConfig& cfg,
                      int label, ModelParams& grads, double weight) {
  const std::size_t n = fwd.tokens.size();
  const Matrix probs = softmax_rows(fwd.logits);
  const double loss = -std::log(std::max(probs(0, static_cast<std::size_t>(label)), 1e-300));

  Matrix d_logits = probs;
  d_logits(0, static_cast<std::size_t>(label)) -= 1.0;

  axpy_inplace(grads.wc2, weight, matmul_tn(fwd.head_hidden, d_logits));
  accumulate_bias_grad(grads.bc2, d_logits, weight);
  Matrix d_head = matmul_nt(d_logits, p.wc2);
  for (std::size_t j = 0; j < d_head.cols(); ++j) {
    if (fwd.head_pre(0, j) <= 0.0) d_head(0, j) = 0.0;
  }
  axpy_inplace(grads.wc1, weight, matmul_tn(fwd.pooled, d_head));
  accumulate_bias_grad(grads.bc1, d_head, weight);
  const Matrix d_pooled = matmul_nt(d_head, p.wc1);

  Matrix d_hf(n, cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cfg.d; ++j) d_hf(i, j) = d_pooled(0, j) / static_cast<double>(n);
  }
  Matrix dx = layer_norm_backward(d_hf, p.ln_f, fwd.ln_f, grads.ln_f, weight);

  for (std::size_t l = cfg.layers; l-- > 0;) {
    const BlockParams& b = p.blocks[l];
    const BlockCache& c = fwd.blocks[l];
    BlockParams& gb = grads.blocks[l];

    // Feed-forward sublayer; dx also flows straight through the residual.
    axpy_inplace(gb.w2, weight, matmul_tn(c.hidden, dx));
    accumulate_bias_grad(gb.b2, dx, weight);
    Matrix d_hidden = matmul_nt(dx, b.w2);
    auto pre = c.hidden_pre.values();
    auto dh = d_hidden.values();
    for (std::size_t i = 0; i < dh.size(); ++i) {
      if (pre[i] <= 0.0) dh[i] = 0.0;
    }
    axpy_inplace(gb.w1, weight, matmul_tn(c.ffn_in, d_hidden));
    accumulate_bias_grad(gb.b1, d_hidden, weight);
    add_inplace(dx, layer_norm_backward(matmul_nt(d_hidden, b.w1), b.ln2, c.ln2, gb.ln2, weight));

    // Attention sublayer.
    AdamraGradients ga = adamra_backward(c.attn, b.attn, dx);
    std::vector<Matrix*> dst;
    gb.attn.for_each_block([&dst](const std::string&, Matrix& m) { dst.push_back(&m); });
    std::size_t k = 0;
    ga.params.for_each_block(
        [&](const std::string&, const Matrix& m) { axpy_inplace(*dst[k++], weight, m); });
    add_inplace(dx, layer_norm_backward(ga.dx, b.ln1, c.ln1, gb.ln1, weight));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(fwd.tokens[i]);
    for (std::size_t j = 0; j < cfg.d; ++j) {
      grads.tok_emb(t, j) += weight * dx(i, j);
      if (cfg.positional) grads.pos_emb(i, j) += weight * dx(i, j);
    }
  }
  return loss;
}

int predict(const Matrix& logits) {
  auto row = logits.row(0);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace adamra
