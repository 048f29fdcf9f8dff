#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adamra/memory_stats.hpp"

namespace adamra {

// Raised when operand shapes do not conform. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles. Storage is counted by
// memory::CountingAllocator so forward passes can be audited.
class Matrix {
 public:
  using Storage = std::vector<double, memory::CountingAllocator<double>>;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::span<const double> values);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  // Rectangular identity: ones on the leading diagonal, zeros elsewhere.
  static Matrix eye(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;
  void fill(double v) noexcept;

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Storage data_;
};

// "RxC"
std::string shape_string(const Matrix& m);

// Throws std::domain_error naming `where` if `m` holds NaN or Inf.
void require_finite(const Matrix& m, const char* where);

// ---- products -------------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// ---- elementwise ----------------------------------------------------------

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
void add_inplace(Matrix& acc, const Matrix& m);
void axpy_inplace(Matrix& acc, double alpha, const Matrix& m);

Matrix relu(const Matrix& m);
// x > 0 ? x + 1 : exp(x)
Matrix elu_plus_one(const Matrix& m);

// exp(x - rowmax) normalized per row.
Matrix softmax_rows(const Matrix& m);

// ---- row reshuffling ------------------------------------------------------

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
// dst.row(rows[r]) += src.row(r)
void scatter_add_rows(Matrix& dst, const Matrix& src, std::span<const std::size_t> rows);
Matrix concat_cols(std::span<const Matrix> blocks);
// Copies columns [first, first + count) of m.
Matrix slice_cols(const Matrix& m, std::size_t first, std::size_t count);

// ---- segment means --------------------------------------------------------

// Half-open row range [begin, end) of segment `s` when `n` rows are split
// into `segments` contiguous parts: [floor(s·n/segments), floor((s+1)·n/segments)).
struct RowRange {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
};
RowRange segment_bounds(std::size_t n, std::size_t segments, std::size_t s);

// Mean of each contiguous segment of rows; output is landmarks × m.cols().
Matrix segment_mean(const Matrix& m, std::size_t landmarks);
// Adjoint of segment_mean: spreads each landmark gradient row evenly over
// the `rows` rows of its segment.
Matrix segment_mean_backward(const Matrix& grad, std::size_t rows);

// ---- reductions and comparisons -------------------------------------------

double sum(const Matrix& m) noexcept;
double frobenius_norm(const Matrix& m) noexcept;
double max_abs(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
// max|a-b| / max(max|b|, floor)
double relative_error(const Matrix& actual, const Matrix& expected, double floor = 1e-12);

// ---- random fill ----------------------------------------------------------

Matrix random_uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                      std::mt19937_64& rng);

}  // namespace adamra
