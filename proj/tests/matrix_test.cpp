#include "adamra/matrix.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adamra/memory_stats.hpp"
#include "adamra/oracles.hpp"

namespace adamra {
namespace {

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix m = Matrix::from_rows({{1, -2, 3}, {0.5, 4, 7}, {9, 8, -6}});
  EXPECT_EQ(matmul(Matrix::identity(3), m), m);
  EXPECT_EQ(matmul(m, Matrix::identity(3)), m);
}

TEST(Matmul, HandCheckedTwoByTwo) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0}, {1}});
  EXPECT_EQ(matmul(a, b), Matrix::from_rows({{2}, {4}}));
}

TEST(Matmul, MatchesScalarLoop) {
  std::mt19937_64 rng(7);
  const Matrix a = random_uniform(5, 7, -1, 1, rng);
  const Matrix b = random_uniform(7, 3, -1, 1, rng);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 7; ++k) acc += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), acc, 1e-14);
    }
  }
}

TEST(Matmul, RandomEightByEightAgainstOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix a = random_uniform(8, 8, -3, 3, rng);
    const Matrix b = random_uniform(8, 8, -3, 3, rng);
    EXPECT_LE(relative_error(matmul(a, b), oracles::naive_matmul(a, b)), 1e-12);
  }
}

TEST(Matmul, TransposedVariantsAgree) {
  std::mt19937_64 rng(3);
  const Matrix a = random_uniform(6, 4, -1, 1, rng);
  const Matrix b = random_uniform(6, 5, -1, 1, rng);
  const Matrix c = random_uniform(3, 4, -1, 1, rng);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)), 1e-14);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))), 1e-14);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  const Matrix a(2, 3);
  const Matrix b(4, 2);
  try {
    (void)matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
}

TEST(Matmul, RejectsNonFiniteOperands) {
  Matrix a(2, 2, 1.0);
  a(1, 0) = std::nan("");
  EXPECT_THROW((void)matmul(a, Matrix::identity(2)), std::domain_error);
}

TEST(SoftmaxRows, UniformRow) {
  const Matrix p = softmax_rows(Matrix::from_rows({{0, 0, 0}}));
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(SoftmaxRows, LargeLogitsDoNotOverflow) {
  const Matrix p = softmax_rows(Matrix::from_rows({{1000, 1000}}));
  EXPECT_EQ(p, Matrix::from_rows({{0.5, 0.5}}));
}

TEST(SoftmaxRows, MatchesExtendedPrecision) {
  const Matrix p = softmax_rows(Matrix::from_rows({{1, 2, 3}}));
  const long double total = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int j = 0; j < 3; ++j) {
    const long double want = std::exp(static_cast<long double>(j + 1)) / total;
    EXPECT_NEAR(p(0, j), static_cast<double>(want), 1e-15);
  }
}

TEST(SoftmaxRows, RowsAreStochastic) {
  std::mt19937_64 rng(11);
  const Matrix p = softmax_rows(random_uniform(20, 9, -30, 30, rng));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double total = 0.0;
    for (double v : p.row(i)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SoftmaxRows, EmptyInputRejected) {
  EXPECT_THROW((void)softmax_rows(Matrix()), std::invalid_argument);
}

TEST(FeatureFunctions, Relu) {
  EXPECT_EQ(relu(Matrix::from_rows({{-1, 0, 2}})), Matrix::from_rows({{0, 0, 2}}));
}

TEST(FeatureFunctions, EluPlusOne) {
  EXPECT_EQ(elu_plus_one(Matrix::from_rows({{0}})), Matrix::from_rows({{1}}));
  const Matrix tiny = elu_plus_one(Matrix::from_rows({{-50}}));
  EXPECT_DOUBLE_EQ(tiny(0, 0), std::exp(-50.0));
  EXPECT_GT(tiny(0, 0), 0.0);
}

TEST(FeatureFunctions, OutputsNonNegative) {
  std::mt19937_64 rng(5);
  const Matrix x = random_uniform(10, 10, -40, 40, rng);
  const Matrix r = relu(x);
  const Matrix e = elu_plus_one(x);
  for (double v : r.values()) EXPECT_GE(v, 0.0);
  for (double v : e.values()) EXPECT_GT(v, 0.0);
}

TEST(SegmentMean, FullRateIsBitwiseIdentity) {
  std::mt19937_64 rng(2);
  const Matrix m = random_uniform(7, 3, -1, 1, rng);
  EXPECT_EQ(segment_mean(m, 7), m);
}

TEST(SegmentMean, ConstantInput) {
  const Matrix m(9, 4, 2.5);
  const Matrix s = segment_mean(m, 4);
  EXPECT_EQ(s.rows(), 4u);
  for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(SegmentMean, EqualSegmentsPreserveGlobalMean) {
  std::mt19937_64 rng(4);
  const Matrix m = random_uniform(6, 5, -1, 1, rng);
  const Matrix s = segment_mean(m, 3);
  for (std::size_t c = 0; c < 5; ++c) {
    double in = 0.0, out = 0.0;
    for (std::size_t r = 0; r < 6; ++r) in += m(r, c);
    for (std::size_t r = 0; r < 3; ++r) out += s(r, c);
    EXPECT_NEAR(in / 6.0, out / 3.0, 1e-12);
  }
}

TEST(SegmentMean, DivisibleLengthsPreserveColumnMeans) {
  std::mt19937_64 rng(8);
  for (std::size_t m : {1u, 2u, 4u, 8u, 16u}) {
    const Matrix x = random_uniform(32, 3, -1, 1, rng);
    const Matrix s = segment_mean(x, m);
    for (std::size_t c = 0; c < 3; ++c) {
      double in = 0.0, out = 0.0;
      for (std::size_t r = 0; r < 32; ++r) in += x(r, c);
      for (std::size_t r = 0; r < m; ++r) out += s(r, c);
      EXPECT_NEAR(in / 32.0, out / static_cast<double>(m), 1e-12);
    }
  }
}

TEST(SegmentMean, FloorBoundsForUnevenSplit) {
  // 7 rows into 3 segments: [0,2), [2,4), [4,7).
  EXPECT_EQ(segment_bounds(7, 3, 0).end, 2u);
  EXPECT_EQ(segment_bounds(7, 3, 1).begin, 2u);
  EXPECT_EQ(segment_bounds(7, 3, 1).end, 4u);
  EXPECT_EQ(segment_bounds(7, 3, 2).begin, 4u);
  EXPECT_EQ(segment_bounds(7, 3, 2).end, 7u);
  Matrix m(7, 1);
  for (std::size_t r = 0; r < 7; ++r) m(r, 0) = static_cast<double>(r);
  EXPECT_EQ(segment_mean(m, 3), Matrix::from_rows({{0.5}, {2.5}, {5.0}}));
}

TEST(SegmentMean, LandmarksOutOfRange) {
  const Matrix m(4, 2);
  EXPECT_THROW((void)segment_mean(m, 0), std::out_of_range);
  EXPECT_THROW((void)segment_mean(m, 5), std::out_of_range);
}

TEST(SegmentMean, BackwardIsAdjoint) {
  std::mt19937_64 rng(9);
  const Matrix x = random_uniform(11, 3, -1, 1, rng);
  const Matrix g = random_uniform(4, 3, -1, 1, rng);
  // <segment_mean(x), g> == <x, segment_mean_backward(g)>
  const double lhs = sum(hadamard(segment_mean(x, 4), g));
  const double rhs = sum(hadamard(x, segment_mean_backward(g, 11)));
  EXPECT_NEAR(lhs, rhs, 1e-13);
}

TEST(RowOps, GatherScatterRoundTrip) {
  std::mt19937_64 rng(1);
  const Matrix m = random_uniform(5, 2, -1, 1, rng);
  const std::vector<std::size_t> rows{4, 1, 3};
  const Matrix g = gather_rows(m, rows);
  Matrix back(5, 2, 0.0);
  scatter_add_rows(back, g, rows);
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(back(r, c), m(r, c));
  }
  EXPECT_EQ(back(0, 0), 0.0);
}

TEST(RowOps, ConcatAndSlice) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  const std::vector<Matrix> parts{a, b};
  const Matrix c = concat_cols(parts);
  EXPECT_EQ(c, Matrix::from_rows({{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(slice_cols(c, 2, 1), b);
}

TEST(Comparisons, MaxAbsDiffPropagatesNan) {
  Matrix a(1, 2, 0.0);
  a(0, 1) = std::nan("");
  EXPECT_TRUE(std::isnan(max_abs_diff(a, Matrix(1, 2, 0.0))));
}

TEST(MemoryStats, PeakScopeSeesMatrixStorage) {
  memory::PeakScope scope;
  {
    const Matrix big(100, 100, 1.0);
    (void)big;
  }
  EXPECT_GE(scope.peak_above_baseline(), 100 * 100 * static_cast<std::int64_t>(sizeof(double)));
}

}  // namespace
}  // namespace adamra
