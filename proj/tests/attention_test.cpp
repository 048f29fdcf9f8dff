#include "adamra/attention.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adamra/oracles.hpp"

namespace adamra {
namespace {

QkvParams identity_qkv(std::size_t d) {
  return {Matrix::identity(d), Matrix::identity(d), Matrix::identity(d)};
}

TEST(ProjectQkv, IdentityWeights) {
  std::mt19937_64 rng(1);
  const Matrix x = random_uniform(4, 3, -1, 1, rng);
  const QkvProjection p = project_qkv(x, identity_qkv(3));
  EXPECT_EQ(p.q, x);
  EXPECT_EQ(p.k, x);
  EXPECT_EQ(p.v, x);
}

TEST(ProjectQkv, ZeroInput) {
  std::mt19937_64 rng(2);
  const QkvParams w{random_uniform(3, 3, -1, 1, rng), random_uniform(3, 3, -1, 1, rng),
                    random_uniform(3, 3, -1, 1, rng)};
  const QkvProjection p = project_qkv(Matrix(5, 3, 0.0), w);
  for (const Matrix* m : {&p.q, &p.k, &p.v}) {
    for (double v : m->values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ProjectQkv, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  const Matrix x = random_uniform(4, 8, -1, 1, rng);
  const QkvParams w{init_weight(8, 8, rng), init_weight(8, 8, rng), init_weight(8, 8, rng)};
  const QkvProjection p = project_qkv(x, w);
  EXPECT_LE(relative_error(p.q, oracles::naive_matmul(x, w.w_q)), 1e-12);
  EXPECT_LE(relative_error(p.k, oracles::naive_matmul(x, w.w_k)), 1e-12);
  EXPECT_LE(relative_error(p.v, oracles::naive_matmul(x, w.w_v)), 1e-12);
}

TEST(ProjectQkv, WidthMismatch) {
  EXPECT_THROW((void)project_qkv(Matrix(2, 4), identity_qkv(3)), ShapeError);
}

TEST(SoftmaxAttention, SingleKeyReturnsValueRow) {
  std::mt19937_64 rng(4);
  const Matrix q = random_uniform(5, 3, -2, 2, rng);
  const Matrix k = random_uniform(1, 3, -2, 2, rng);
  const Matrix v = Matrix::from_rows({{0.25, -1.5}});
  const Matrix out = softmax_attention(q, k, v);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(out(i, 0), 0.25);
    EXPECT_DOUBLE_EQ(out(i, 1), -1.5);
  }
}

TEST(SoftmaxAttention, OrthogonalQueryAveragesValues) {
  const Matrix q = Matrix::from_rows({{0, 1}});
  const Matrix k = Matrix::from_rows({{1, 0}, {2, 0}, {-3, 0}});
  const Matrix v = Matrix::from_rows({{1}, {2}, {6}});
  EXPECT_NEAR(softmax_attention(q, k, v)(0, 0), 3.0, 1e-15);
}

TEST(SoftmaxAttention, MatchesDirectSummation) {
  std::mt19937_64 rng(5);
  const Matrix q = random_uniform(6, 4, -1, 1, rng);
  const Matrix k = random_uniform(6, 4, -1, 1, rng);
  const Matrix v = random_uniform(6, 4, -1, 1, rng);
  const double scale = default_softmax_scale(4);
  EXPECT_DOUBLE_EQ(scale, 0.5);
  EXPECT_LE(relative_error(softmax_attention(q, k, v),
                           oracles::naive_softmax_attention(q, k, v, scale)),
            1e-12);
  EXPECT_LE(relative_error(softmax_attention(q, k, v, 1.0),
                           oracles::naive_softmax_attention(q, k, v, 1.0)),
            1e-12);
}

TEST(SoftmaxAttention, ShiftingKeysAlongQueryIsInvariant) {
  // Adding the same vector u to every key shifts row i's scores by q_i·u,
  // a per-row constant.
  std::mt19937_64 rng(6);
  const Matrix q = random_uniform(4, 3, -1, 1, rng);
  const Matrix k = random_uniform(5, 3, -1, 1, rng);
  const Matrix v = random_uniform(5, 2, -1, 1, rng);
  Matrix shifted = k;
  for (std::size_t j = 0; j < 5; ++j) {
    shifted(j, 0) += 3.0;
    shifted(j, 2) -= 1.0;
  }
  EXPECT_LE(max_abs_diff(softmax_attention(q, k, v), softmax_attention(q, shifted, v)), 1e-13);
}

TEST(SoftmaxAttention, ShapeMismatch) {
  EXPECT_THROW((void)softmax_attention(Matrix(2, 3), Matrix(4, 2), Matrix(4, 1)), ShapeError);
  EXPECT_THROW((void)softmax_attention(Matrix(2, 3), Matrix(4, 3), Matrix(3, 1)), ShapeError);
}

TEST(KernelAttention, MatchesQuadraticFormEightByFour) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix q = random_uniform(8, 4, -1, 1, rng);
    const Matrix k = random_uniform(8, 4, -1, 1, rng);
    const Matrix v = random_uniform(8, 4, -1, 1, rng);
    for (FeatureMap phi : {FeatureMap::relu, FeatureMap::elu_plus_one}) {
      const Matrix want = oracles::quadratic_kernel_attention(q, k, v, phi, kDefaultKernelEps);
      EXPECT_LE(relative_error(kernel_attention(q, k, v, phi), want), 1e-10);
    }
  }
}

TEST(KernelAttention, ZeroFeatureQueryGivesZeroRow) {
  const Matrix q = Matrix::from_rows({{-1, -0.5}, {0.3, 0.2}});
  const Matrix k = Matrix::from_rows({{1, 2}, {0.5, 0.1}});
  const Matrix v = Matrix::from_rows({{3, 4}, {5, 6}});
  const Matrix out = kernel_attention(q, k, v);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(0, 1), 0.0);
  EXPECT_NE(out(1, 0), 0.0);
}

TEST(KernelAttention, SingleKeyWithinEpsOfValue) {
  std::mt19937_64 rng(7);
  const Matrix q = random_uniform(6, 3, 0.1, 1, rng);
  const Matrix k = random_uniform(1, 3, 0.1, 1, rng);
  const Matrix v = Matrix::from_rows({{2.0, -4.0}});
  const Matrix out = kernel_attention(q, k, v);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(out(i, 0), 2.0, 2.0 * 1e-4);
    EXPECT_NEAR(out(i, 1), -4.0, 4.0 * 1e-4);
  }
}

TEST(KernelAttention, OutputsStayInValueHull) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix q = random_uniform(10, 4, -1, 1, rng);
    const Matrix k = random_uniform(12, 4, -1, 1, rng);
    const Matrix v = random_uniform(12, 3, -5, 5, rng);
    const Matrix out = kernel_attention(q, k, v, FeatureMap::elu_plus_one);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = v(0, c), hi = v(0, c);
      for (std::size_t j = 0; j < 12; ++j) {
        lo = std::min(lo, v(j, c));
        hi = std::max(hi, v(j, c));
      }
      // The eps term only pulls outputs towards 0.
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
      for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_GE(out(i, c), lo - 1e-12);
        EXPECT_LE(out(i, c), hi + 1e-12);
      }
    }
  }
}

TEST(KernelAttention, RejectsSoftmaxFeatureAndBadEps) {
  const Matrix m(2, 2, 1.0);
  EXPECT_THROW((void)kernel_attention(m, m, m, FeatureMap::softmax), std::invalid_argument);
  EXPECT_THROW((void)kernel_attention(m, m, m, FeatureMap::relu, 0.0), std::invalid_argument);
  EXPECT_THROW((void)kernel_attention(m, m, m, FeatureMap::relu, -1.0), std::invalid_argument);
}

TEST(MultiHead, SingleHeadIdentityCollapses) {
  std::mt19937_64 rng(9);
  const Matrix x = random_uniform(7, 4, -1, 1, rng);
  MultiHeadParams p;
  p.w_q = {Matrix::identity(4)};
  p.w_k = {Matrix::identity(4)};
  p.w_v = {Matrix::identity(4)};
  p.w_o = Matrix::identity(4);
  EXPECT_EQ(multi_head_attention(x, p, AttentionMode::softmax), softmax_attention(x, x, x));
  EXPECT_EQ(multi_head_attention(x, p, AttentionMode::kernel), kernel_attention(x, x, x));
}

TEST(MultiHead, OutputShape) {
  std::mt19937_64 rng(10);
  const Matrix x = random_uniform(9, 64, -1, 1, rng);
  for (std::size_t heads : {2u, 4u}) {
    const MultiHeadParams p = MultiHeadParams::init(64, heads, rng);
    for (AttentionMode mode : {AttentionMode::softmax, AttentionMode::kernel}) {
      const Matrix out = multi_head_attention(x, p, mode);
      EXPECT_EQ(out.rows(), 9u);
      EXPECT_EQ(out.cols(), 64u);
    }
  }
}

TEST(MultiHead, HeadPermutationWithPermutedOutputBlocks) {
  std::mt19937_64 rng(11);
  const std::size_t d = 8, H = 4, dv = d / H;
  const Matrix x = random_uniform(6, d, -1, 1, rng);
  const MultiHeadParams p = MultiHeadParams::init(d, H, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  MultiHeadParams q = p;
  for (std::size_t h = 0; h < H; ++h) {
    q.w_q[h] = p.w_q[perm[h]];
    q.w_k[h] = p.w_k[perm[h]];
    q.w_v[h] = p.w_v[perm[h]];
    for (std::size_t r = 0; r < dv; ++r) {
      for (std::size_t c = 0; c < d; ++c) q.w_o(h * dv + r, c) = p.w_o(perm[h] * dv + r, c);
    }
  }
  for (AttentionMode mode : {AttentionMode::softmax, AttentionMode::kernel}) {
    EXPECT_LE(max_abs_diff(multi_head_attention(x, p, mode), multi_head_attention(x, q, mode)),
              1e-13);
  }
}

TEST(MultiHead, RejectsWidthNotDivisible) {
  std::mt19937_64 rng(12);
  EXPECT_THROW((void)MultiHeadParams::init(6, 4, rng), std::invalid_argument);
}

}  // namespace
}  // namespace adamra
