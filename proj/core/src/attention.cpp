#include "adamra/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace adamra {
namespace {

void require_attention_shapes(const char* op, const Matrix& q, const Matrix& k,
                              const Matrix& v) {
  if (q.cols() != k.cols()) {
    throw ShapeError(std::string(op) + ": query width " + shape_string(q) +
                     " does not match key width " + shape_string(k));
  }
  if (k.rows() != v.rows()) {
    throw ShapeError(std::string(op) + ": key rows " + shape_string(k) +
                     " do not match value rows " + shape_string(v));
  }
}

void require_upstream(const char* op, const Matrix& upstream, std::size_t rows,
                      std::size_t cols) {
  if (upstream.rows() != rows || upstream.cols() != cols) {
    throw ShapeError(std::string(op) + ": upstream " + shape_string(upstream) +
                     " does not match output " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

// Column sums of m as a length-cols vector.
std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += r[j];
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

void QkvParams::check() const {
  const std::size_t d = w_q.rows();
  for (const Matrix* w : {&w_q, &w_k, &w_v}) {
    if (w->rows() != d || w->cols() != d) {
      throw ShapeError("QkvParams: expected square " + std::to_string(d) + "x" +
                       std::to_string(d) + " projections, got " + shape_string(*w));
    }
  }
}

QkvProjection project_qkv(const Matrix& x, const QkvParams& p) {
  p.check();
  if (x.cols() != p.width()) {
    throw ShapeError("project_qkv: input " + shape_string(x) + " vs projection " +
                     shape_string(p.w_q));
  }
  return {matmul(x, p.w_q), matmul(x, p.w_k), matmul(x, p.w_v)};
}

double default_softmax_scale(std::size_t key_dim) {
  return 1.0 / std::sqrt(static_cast<double>(key_dim));
}

Matrix softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                         std::optional<double> scale) {
  require_attention_shapes("softmax_attention", q, k, v);
  if (k.rows() == 0) throw ShapeError("softmax_attention: no keys");
  const double s = scale.value_or(default_softmax_scale(q.cols()));
  Matrix scores = matmul_nt(q, k);
  for (double& x : scores.values()) x *= s;
  return matmul(softmax_rows(scores), v);
}

Matrix detail::kernel_attention_unchecked(const Matrix& q, const Matrix& k, const Matrix& v,
                                          FeatureMap phi, double eps) {
  const Matrix phi_q = apply_feature_map(phi, q);
  const Matrix phi_k = apply_feature_map(phi, k);
  const Matrix summary = matmul_tn(phi_k, v);  // d_k × d_v
  const std::vector<double> key_sum = column_sums(phi_k);

  Matrix out = matmul(phi_q, summary);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double den = dot(phi_q.row(i), key_sum) + eps;
    for (double& x : out.row(i)) x /= den;
  }
  return out;
}

Matrix kernel_attention(const Matrix& q, const Matrix& k, const Matrix& v, FeatureMap phi,
                        double eps) {
  require_attention_shapes("kernel_attention", q, k, v);
  if (!is_factorizable(phi)) {
    throw std::invalid_argument("kernel_attention: feature map '" +
                                std::string(to_string(phi)) + "' is not a kernel feature map");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_attention: eps must be > 0");
  return detail::kernel_attention_unchecked(q, k, v, phi, eps);
}

AttentionGrads kernel_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         FeatureMap phi, double eps, const Matrix& upstream) {
  require_attention_shapes("kernel_attention_backward", q, k, v);
  require_upstream("kernel_attention_backward", upstream, q.rows(), v.cols());
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_attention_backward: eps must be > 0");

  const Matrix phi_q = apply_feature_map(phi, q);
  const Matrix phi_k = apply_feature_map(phi, k);
  const Matrix summary = matmul_tn(phi_k, v);
  const std::vector<double> key_sum = column_sums(phi_k);
  const std::size_t dk = q.cols();
  const std::size_t dv = v.cols();

  // Per query: out = num/den. d num = g/den, d den = -(g·out)/den.
  Matrix d_num(q.rows(), dv);
  Matrix d_den(q.rows(), 1);
  const Matrix num = matmul(phi_q, summary);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const double den = dot(phi_q.row(i), key_sum) + eps;
    auto g = upstream.row(i);
    auto n = num.row(i);
    double g_dot_num = 0.0;
    for (std::size_t c = 0; c < dv; ++c) {
      d_num(i, c) = g[c] / den;
      g_dot_num += g[c] * n[c];
    }
    d_den(i, 0) = -g_dot_num / (den * den);
  }

  // φ(q) feeds both num (through the summary) and den (through key_sum).
  Matrix d_phi_q = matmul_nt(d_num, summary);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto row = d_phi_q.row(i);
    for (std::size_t c = 0; c < dk; ++c) row[c] += d_den(i, 0) * key_sum[c];
  }
  const Matrix d_summary = matmul_tn(phi_q, d_num);  // d_k × d_v
  const Matrix d_key_sum = matmul_tn(phi_q, d_den);  // d_k × 1

  Matrix d_phi_k = matmul_nt(v, d_summary);
  for (std::size_t j = 0; j < k.rows(); ++j) {
    auto row = d_phi_k.row(j);
    for (std::size_t c = 0; c < dk; ++c) row[c] += d_key_sum(c, 0);
  }

  return {hadamard(d_phi_q, feature_map_derivative(phi, q)),
          hadamard(d_phi_k, feature_map_derivative(phi, k)), matmul(phi_k, d_summary)};
}

AttentionGrads softmax_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                          double scale, const Matrix& upstream) {
  require_attention_shapes("softmax_attention_backward", q, k, v);
  require_upstream("softmax_attention_backward", upstream, q.rows(), v.cols());
  Matrix scores = matmul_nt(q, k);
  for (double& x : scores.values()) x *= scale;
  const Matrix probs = softmax_rows(scores);

  const Matrix d_probs = matmul_nt(upstream, v);
  Matrix d_scores(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double inner = dot(d_probs.row(i), probs.row(i));
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      d_scores(i, j) = probs(i, j) * (d_probs(i, j) - inner) * scale;
    }
  }
  return {matmul(d_scores, k), matmul_tn(d_scores, q), matmul_tn(probs, upstream)};
}

void MultiHeadParams::check(std::size_t d) const {
  const std::size_t h = heads();
  if (h == 0 || w_k.size() != h || w_v.size() != h) {
    throw ShapeError("MultiHeadParams: inconsistent head count");
  }
  if (d % h != 0) {
    throw ShapeError("MultiHeadParams: width " + std::to_string(d) +
                     " not divisible by head count " + std::to_string(h));
  }
  const std::size_t sub = d / h;
  for (std::size_t i = 0; i < h; ++i) {
    for (const Matrix* w : {&w_q[i], &w_k[i], &w_v[i]}) {
      if (w->rows() != d || w->cols() != sub) {
        throw ShapeError("MultiHeadParams: head " + std::to_string(i) + " projection " +
                         shape_string(*w) + ", expected " + std::to_string(d) + "x" +
                         std::to_string(sub));
      }
    }
  }
  if (w_o.rows() != d || w_o.cols() != d) {
    throw ShapeError("MultiHeadParams: output projection " + shape_string(w_o) +
                     ", expected " + std::to_string(d) + "x" + std::to_string(d));
  }
}

MultiHeadParams MultiHeadParams::init(std::size_t d, std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("MultiHeadParams::init: d must be a multiple of heads");
  }
  MultiHeadParams p;
  for (std::size_t h = 0; h < heads; ++h) {
    p.w_q.push_back(init_weight(d, d / heads, rng));
    p.w_k.push_back(init_weight(d, d / heads, rng));
    p.w_v.push_back(init_weight(d, d / heads, rng));
  }
  p.w_o = init_weight(d, d, rng);
  return p;
}

Matrix multi_head_attention(const Matrix& x, const MultiHeadParams& p, AttentionMode mode,
                            FeatureMap phi, double eps) {
  p.check(x.cols());
  std::vector<Matrix> heads;
  heads.reserve(p.heads());
  for (std::size_t h = 0; h < p.heads(); ++h) {
    const Matrix q = matmul(x, p.w_q[h]);
    const Matrix k = matmul(x, p.w_k[h]);
    const Matrix v = matmul(x, p.w_v[h]);
    heads.push_back(mode == AttentionMode::softmax ? softmax_attention(q, k, v)
                                                   : kernel_attention(q, k, v, phi, eps));
  }
  return matmul(concat_cols(heads), p.w_o);
}

Matrix init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  return random_uniform(rows, cols, -bound, bound, rng);
}

}  // namespace adamra
