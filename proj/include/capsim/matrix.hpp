#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace capsim {

/// Dense row-major matrix of doubles. The only numeric carrier in the
/// project; sized for small MLP workloads (at most ~1000x1000), so every
/// operation copies and nothing aliases. Immutable use after construction
/// is safe across threads.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

  bool operator==(const Matrix& other) const;

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a(m x k) * b(k x n). Throws std::invalid_argument on dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a(m x k) * b(n x k)^T -> m x n. Inner dimension is the column count of both.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// a(k x m)^T * b(k x n) -> m x n. Inner dimension is the row count of both.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Elementwise map, shape preserved.
template <class F>
Matrix elementwise(const Matrix& a, F g) {
  Matrix out(a.rows(), a.cols());
  const double* src = a.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = g(src[i]);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// a(n x d) with row(1 x d) added to every row.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);

/// Column sums as a 1 x cols matrix.
Matrix col_sums(const Matrix& a);

double max_abs(const Matrix& a);

}  // namespace capsim
