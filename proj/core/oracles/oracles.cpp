#include "adamra/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace adamra::oracles {
namespace {

double feature(double x, FeatureMap phi) {
  switch (phi) {
    case FeatureMap::relu:
      return x > 0.0 ? x : 0.0;
    case FeatureMap::elu_plus_one:
      return x > 0.0 ? x + 1.0 : std::exp(x);
    case FeatureMap::softmax:
      break;
  }
  throw std::invalid_argument("oracle: feature map has no explicit form");
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(idx[r], c);
  }
  return out;
}

}  // namespace

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("naive_matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix quadratic_kernel_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                  FeatureMap phi, double eps) {
  Matrix out(q.rows(), v.cols());
  std::vector<double> sim(k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += feature(q(i, c), phi) * feature(k(j, c), phi);
      sim[j] = s;
      norm += s;
    }
    for (std::size_t c = 0; c < v.cols(); ++c) {
      double num = 0.0;
      for (std::size_t j = 0; j < k.rows(); ++j) num += sim[j] * v(j, c);
      out(i, c) = num / (norm + eps);
    }
  }
  return out;
}

Matrix naive_softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v, double scale) {
  Matrix out(q.rows(), v.cols());
  std::vector<double> w(k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double top = -INFINITY;
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
      w[j] = s * scale;
      top = std::max(top, w[j]);
    }
    double total = 0.0;
    for (double& x : w) {
      x = std::exp(x - top);
      total += x;
    }
    for (std::size_t c = 0; c < v.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k.rows(); ++j) acc += w[j] * v(j, c);
      out(i, c) = acc / total;
    }
  }
  return out;
}

std::size_t oracle_landmarks(double rate, std::size_t n) {
  const double m = std::floor(rate * static_cast<double>(n) + 0.5);
  return m < 1.0 ? 1 : static_cast<std::size_t>(m);
}

Matrix adamra_oracle(const Matrix& x, const AdamraParams& p, const AdamraConfig& cfg) {
  if (cfg.routing != Routing::learned) {
    throw std::invalid_argument("adamra_oracle: only learned routing has an oracle");
  }
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t H = cfg.heads;
  const std::size_t S = cfg.subheads;
  const std::size_t dk = d / S;

  const Matrix q = naive_matmul(x, p.qkv.w_q);
  const Matrix k = naive_matmul(x, p.qkv.w_k);
  const Matrix v = naive_matmul(x, p.qkv.w_v);

  // Router: softmax over explicit logits, first maximum wins.
  std::vector<std::size_t> head_of(n);
  std::vector<double> gate(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logit(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t c = 0; c < d; ++c) logit[h] += q(i, c) * p.w_router(c, h);
    }
    const double top = *std::max_element(logit.begin(), logit.end());
    double total = 0.0;
    for (double l : logit) total += std::exp(l - top);
    std::size_t best = 0;
    for (std::size_t h = 1; h < H; ++h) {
      if (logit[h] > logit[best]) best = h;
    }
    head_of[i] = best;
    gate[i] = std::exp(logit[best] - top) / total;
  }

  Matrix mixed(n, S * dk, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<std::size_t> tokens;
    for (std::size_t i = 0; i < n; ++i) {
      if (head_of[i] == h) tokens.push_back(i);
    }
    if (tokens.empty()) continue;

    const double rate = static_cast<double>(cfg.rates[h].num) / static_cast<double>(cfg.rates[h].den);
    const std::size_t m = oracle_landmarks(rate, n);
    Matrix kt(m, d, 0.0);
    Matrix vt(m, d, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t lo = s * n / m;
      const std::size_t hi = (s + 1) * n / m;
      for (std::size_t r = lo; r < hi; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          kt(s, c) += k(r, c);
          vt(s, c) += v(r, c);
        }
      }
      for (std::size_t c = 0; c < d; ++c) {
        kt(s, c) /= static_cast<double>(hi - lo);
        vt(s, c) /= static_cast<double>(hi - lo);
      }
    }

    const Matrix qh = rows_of(q, tokens);
    for (std::size_t s = 0; s < S; ++s) {
      const auto& sub = p.heads[h][s];
      const Matrix qs = naive_matmul(qh, sub.w_q);
      const Matrix ks = naive_matmul(kt, sub.w_k);
      const Matrix vs = naive_matmul(vt, sub.w_v);
      const Matrix o = cfg.phi == FeatureMap::softmax
                           ? naive_softmax_attention(qs, ks, vs,
                                                     1.0 / std::sqrt(static_cast<double>(dk)))
                           : quadratic_kernel_attention(qs, ks, vs, cfg.phi, cfg.eps);
      for (std::size_t r = 0; r < tokens.size(); ++r) {
        for (std::size_t c = 0; c < dk; ++c) mixed(tokens[r], s * dk + c) = o(r, c);
      }
    }
  }
  if (cfg.gate_scaling) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < mixed.cols(); ++c) mixed(i, c) *= gate[i];
    }
  }
  return naive_matmul(mixed, p.w_o);
}

}  // namespace adamra::oracles
