#include "adamra/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adamra {
namespace {

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": shape mismatch " << shape_string(a) << " vs " << shape_string(b);
  throw ShapeError(os.str());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a, b);
}

template <class F>
Matrix map(const Matrix& m, F f) {
  Matrix out(m.rows(), m.cols());
  auto src = m.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Matrix zip(const char* op, const Matrix& a, const Matrix& b, F f) {
  require_same_shape(op, a, b);
  Matrix out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

// c += a·b for row-major a (rows × inner) and b (inner × width). The j loop
// is the only vectorized one, so every c entry sums over k in order and the
// AVX2 clone gives the same bits as the baseline.
__attribute__((target_clones("avx2", "default"))) void product_kernel(
    const double* __restrict a, const double* __restrict b, double* __restrict c,
    std::size_t rows, std::size_t inner, std::size_t width) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* ci = c + i * width;
    const double* ai = a + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = b + k * width;
      for (std::size_t j = 0; j < width; ++j) ci[j] += aik * bk[j];
    }
  }
}

// c += aᵀ·b for a (depth × cols) and b (depth × width).
__attribute__((target_clones("avx2", "default"))) void transposed_product_kernel(
    const double* __restrict a, const double* __restrict b, double* __restrict c,
    std::size_t depth, std::size_t cols, std::size_t width) {
  for (std::size_t k = 0; k < depth; ++k) {
    const double* ak = a + k * cols;
    const double* bk = b + k * width;
    for (std::size_t i = 0; i < cols; ++i) {
      const double aki = ak[i];
      double* ci = c + i * width;
      for (std::size_t j = 0; j < width; ++j) ci[j] += aki * bk[j];
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::span<const double> values)
    : rows_(rows), cols_(cols), data_(values.begin(), values.end()) {
  if (values.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(values.size()) +
                     " values cannot fill a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " matrix");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) { return eye(n, n); }

Matrix Matrix::eye(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Matrix& m, const char* where) {
  if (!m.all_finite()) {
    throw std::domain_error(std::string(where) + ": non-finite entry in " + shape_string(m) +
                            " operand");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  require_finite(a, "matmul");
  require_finite(b, "matmul");
  Matrix c(a.rows(), b.cols());
  if (!c.empty() && a.cols() > 0) {
    product_kernel(a.values().data(), b.values().data(), c.values().data(), a.rows(), a.cols(),
                   b.cols());
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_mismatch("matmul_tn", a, b);
  require_finite(a, "matmul_tn");
  require_finite(b, "matmul_tn");
  Matrix c(a.cols(), b.cols());
  if (!c.empty() && a.rows() > 0) {
    transposed_product_kernel(a.values().data(), b.values().data(), c.values().data(), a.rows(),
                              a.cols(), b.cols());
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_mismatch("matmul_nt", a, b);
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip("add", a, b, [](double x, double y) { return x + y; });
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  return zip("subtract", a, b, [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip("hadamard", a, b, [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& m, double s) {
  return map(m, [s](double x) { return x * s; });
}

void add_inplace(Matrix& acc, const Matrix& m) {
  require_same_shape("add_inplace", acc, m);
  auto dst = acc.values();
  auto src = m.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void axpy_inplace(Matrix& acc, double alpha, const Matrix& m) {
  require_same_shape("axpy_inplace", acc, m);
  auto dst = acc.values();
  auto src = m.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

Matrix relu(const Matrix& m) {
  return map(m, [](double x) { return x > 0.0 ? x : 0.0; });
}

Matrix elu_plus_one(const Matrix& m) {
  return map(m, [](double x) { return x > 0.0 ? x + 1.0 : std::exp(x); });
}

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) throw ShapeError("softmax_rows: empty matrix");
  require_finite(m, "softmax_rows");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    auto dst = out.row(i);
    const double peak = *std::max_element(src.begin(), src.end());
    double total = 0.0;
    for (std::size_t j = 0; j < src.size(); ++j) {
      dst[j] = std::exp(src[j] - peak);
      total += dst[j];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " outside " +
                       shape_string(m));
    }
    std::copy_n(m.row(rows[r]).begin(), m.cols(), out.row(r).begin());
  }
  return out;
}

void scatter_add_rows(Matrix& dst, const Matrix& src, std::span<const std::size_t> rows) {
  if (src.rows() != rows.size() || src.cols() != dst.cols()) {
    shape_mismatch("scatter_add_rows", dst, src);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= dst.rows()) {
      throw ShapeError("scatter_add_rows: row " + std::to_string(rows[r]) + " outside " +
                       shape_string(dst));
    }
    auto out = dst.row(rows[r]);
    auto in = src.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += in[j];
  }
}

Matrix concat_cols(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t width = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) shape_mismatch("concat_cols", blocks.front(), b);
    width += b.cols();
  }
  Matrix out(rows, width);
  for (std::size_t i = 0; i < rows; ++i) {
    auto dst = out.row(i).begin();
    for (const auto& b : blocks) dst = std::copy(b.row(i).begin(), b.row(i).end(), dst);
  }
  return out;
}

Matrix slice_cols(const Matrix& m, std::size_t first, std::size_t count) {
  if (first + count > m.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside " + shape_string(m));
  }
  Matrix out(m.rows(), count);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::copy_n(m.row(i).begin() + static_cast<std::ptrdiff_t>(first), count,
                out.row(i).begin());
  }
  return out;
}

RowRange segment_bounds(std::size_t n, std::size_t segments, std::size_t s) {
  return {s * n / segments, (s + 1) * n / segments};
}

Matrix segment_mean(const Matrix& m, std::size_t landmarks) {
  if (landmarks < 1 || landmarks > m.rows()) {
    throw std::out_of_range("segment_mean: landmarks=" + std::to_string(landmarks) +
                            " outside [1, " + std::to_string(m.rows()) + "]");
  }
  const std::size_t n = m.rows();
  Matrix out(landmarks, m.cols());
  for (std::size_t s = 0; s < landmarks; ++s) {
    const RowRange seg = segment_bounds(n, landmarks, s);
    auto dst = out.row(s);
    // Start from the first row (not from zero) so singleton segments copy exactly.
    std::copy_n(m.row(seg.begin).begin(), m.cols(), dst.begin());
    for (std::size_t r = seg.begin + 1; r < seg.end; ++r) {
      auto src = m.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    const double count = static_cast<double>(seg.size());
    for (double& v : dst) v /= count;
  }
  return out;
}

Matrix segment_mean_backward(const Matrix& grad, std::size_t rows) {
  const std::size_t landmarks = grad.rows();
  if (landmarks < 1 || landmarks > rows) {
    throw std::out_of_range("segment_mean_backward: landmarks=" + std::to_string(landmarks) +
                            " outside [1, " + std::to_string(rows) + "]");
  }
  Matrix out(rows, grad.cols());
  for (std::size_t s = 0; s < landmarks; ++s) {
    const RowRange seg = segment_bounds(rows, landmarks, s);
    const double inv = 1.0 / static_cast<double>(seg.size());
    auto src = grad.row(s);
    for (std::size_t r = seg.begin; r < seg.end; ++r) {
      auto dst = out.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] * inv;
    }
  }
  return out;
}

double sum(const Matrix& m) noexcept {
  double total = 0.0;
  for (double v : m.values()) total += v;
  return total;
}

double frobenius_norm(const Matrix& m) noexcept {
  double total = 0.0;
  for (double v : m.values()) total += v * v;
  return std::sqrt(total);
}

double max_abs(const Matrix& m) noexcept {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape("max_abs_diff", a, b);
  double best = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    if (!(d <= best)) best = d;  // propagates NaN
  }
  return best;
}

double relative_error(const Matrix& actual, const Matrix& expected, double floor) {
  return max_abs_diff(actual, expected) / std::max(max_abs(expected), floor);
}

Matrix random_uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace adamra
