#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "adamra/feature_map.hpp"
#include "adamra/matrix.hpp"

namespace adamra {

inline constexpr double kDefaultKernelEps = 1e-6;

// Full-width query/key/value projections, each d×d.
struct QkvParams {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;

  std::size_t width() const noexcept { return w_q.rows(); }
  void check() const;
};

struct QkvProjection {
  Matrix q;
  Matrix k;
  Matrix v;
};

QkvProjection project_qkv(const Matrix& x, const QkvParams& p);

// 1/sqrt(d_k)
double default_softmax_scale(std::size_t key_dim);

// softmax_rows(scale · q·kᵀ)·v. Materializes the q.rows() × k.rows() score matrix.
Matrix softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                         std::optional<double> scale = std::nullopt);

// Linearized attention: row i is φ(q_i)ᵀ·S / (φ(q_i)ᵀ·z + eps) with
// S = Σ_j φ(k_j) v_jᵀ and z = Σ_j φ(k_j), both accumulated once. A query whose
// features are all zero yields a zero row. Requires eps > 0 and a
// factorizable `phi`.
Matrix kernel_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                        FeatureMap phi = FeatureMap::relu, double eps = kDefaultKernelEps);

struct AttentionGrads {
  Matrix dq;
  Matrix dk;
  Matrix dv;
};

// Reverse-mode adjoints of kernel_attention for the given upstream gradient.
AttentionGrads kernel_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         FeatureMap phi, double eps, const Matrix& upstream);

AttentionGrads softmax_attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                          double scale, const Matrix& upstream);

namespace detail {
// kernel_attention without the eps > 0 precondition. Only the verification
// suite's fault injection calls this with eps == 0.
Matrix kernel_attention_unchecked(const Matrix& q, const Matrix& k, const Matrix& v,
                                  FeatureMap phi, double eps);
}  // namespace detail

// ---- vanilla multi-head baseline ------------------------------------------

enum class AttentionMode { softmax, kernel };

// Per-head projections into d/H-wide subspaces plus the output mixing W^O.
struct MultiHeadParams {
  std::vector<Matrix> w_q;
  std::vector<Matrix> w_k;
  std::vector<Matrix> w_v;
  Matrix w_o;

  std::size_t heads() const noexcept { return w_q.size(); }
  // Enforces H·d_k == H·d_v == d.
  void check(std::size_t d) const;

  // Uniform(±1/sqrt(fan_in)) initialization.
  static MultiHeadParams init(std::size_t d, std::size_t heads, std::mt19937_64& rng);
};

Matrix multi_head_attention(const Matrix& x, const MultiHeadParams& p, AttentionMode mode,
                            FeatureMap phi = FeatureMap::relu,
                            double eps = kDefaultKernelEps);

// Uniform(±1/sqrt(rows)) draw used for every weight matrix in the project.
Matrix init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace adamra
