#include "capsim/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "capsim/rng.hpp"
#include "doctest.h"

using namespace capsim;

namespace {

// Independent naive triple-loop product the library implementation is
// checked against.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) acc += a(i, t) * b(t, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix random_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(i, j) = 2.0 * rng.next_uniform01() - 1.0;
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
    }
  }
  return worst;
}

Matrix identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

}  // namespace

TEST_CASE("matmul identity and zero cases") {
  RngStream rng = derive_stream(7, "matrix_test");
  const Matrix m = random_matrix(rng, 3, 3);
  CHECK(matmul(identity(3), m) == m);

  const Matrix z(2, 4);
  const Matrix b = random_matrix(rng, 4, 3);
  const Matrix out = matmul(z, b);
  CHECK(out.rows() == 2);
  CHECK(out.cols() == 3);
  CHECK(max_abs(out) == 0.0);
}

TEST_CASE("matmul hand example") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  CHECK(matmul(a, b) == Matrix::from_rows({{19, 22}, {43, 50}}));
}

TEST_CASE("matmul agrees with the naive triple loop") {
  RngStream rng = derive_stream(11, "matrix_test");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.next_u64() % 12;
    const std::size_t k = 1 + rng.next_u64() % 12;
    const std::size_t n = 1 + rng.next_u64() % 12;
    const Matrix a = random_matrix(rng, m, k);
    const Matrix b = random_matrix(rng, k, n);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("matmul_nt and matmul_tn match their transpose compositions") {
  RngStream rng = derive_stream(13, "matrix_test");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.next_u64() % 10;
    const std::size_t k = 1 + rng.next_u64() % 10;
    const std::size_t n = 1 + rng.next_u64() % 10;
    const Matrix a = random_matrix(rng, m, k);
    const Matrix b = random_matrix(rng, n, k);
    CHECK(max_abs_diff(matmul_nt(a, b), naive_matmul(a, transpose(b))) < 1e-12);
    const Matrix c = random_matrix(rng, k, m);
    const Matrix d = random_matrix(rng, k, n);
    CHECK(max_abs_diff(matmul_tn(c, d), naive_matmul(transpose(c), d)) < 1e-12);
  }
}

TEST_CASE("matmul rejects mismatched dimensions") {
  const Matrix a(2, 3);
  const Matrix b(4, 2);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(hadamard(Matrix(2, 2), Matrix(3, 2)), std::invalid_argument);
}

TEST_CASE("transpose") {
  RngStream rng = derive_stream(17, "matrix_test");
  const Matrix m = random_matrix(rng, 4, 7);
  CHECK(transpose(transpose(m)) == m);

  const Matrix one = Matrix::from_rows({{3.5}});
  CHECK(transpose(one) == one);

  const Matrix row = Matrix::from_rows({{1, 2, 3}});
  CHECK(transpose(row) == Matrix::from_rows({{1}, {2}, {3}}));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      CHECK(transpose(m)(j, i) == m(i, j));
    }
  }
}

TEST_CASE("elementwise") {
  RngStream rng = derive_stream(19, "matrix_test");
  const Matrix m = random_matrix(rng, 3, 5);
  CHECK(elementwise(m, [](double x) { return x; }) == m);
  CHECK(max_abs(elementwise(m, [](double) { return 0.0; })) == 0.0);

  const Matrix t = elementwise(Matrix::from_rows({{0.0, 40.0}}),
                               [](double x) { return std::tanh(x); });
  CHECK(t(0, 0) == 0.0);
  CHECK(t(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matmul associativity and distributivity on random 8x8") {
  RngStream rng = derive_stream(23, "matrix_test");
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 8, 8);
    const Matrix b = random_matrix(rng, 8, 8);
    const Matrix c = random_matrix(rng, 8, 8);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(max_abs_diff(left, right) / std::max(1.0, max_abs(left)) < 1e-9);

    const Matrix dist_l = matmul(a, add(b, c));
    const Matrix dist_r = add(matmul(a, b), matmul(a, c));
    CHECK(max_abs_diff(dist_l, dist_r) / std::max(1.0, max_abs(dist_l)) < 1e-9);

    CHECK(max_abs_diff(transpose(matmul(a, b)),
                       matmul(transpose(b), transpose(a))) < 1e-12);
  }
}

TEST_CASE("helpers: add, sub, scale, hadamard, broadcast, col_sums, max_abs") {
  const Matrix a = Matrix::from_rows({{1, -2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {-7, 8}});
  CHECK(add(a, b) == Matrix::from_rows({{6, 4}, {-4, 12}}));
  CHECK(sub(a, b) == Matrix::from_rows({{-4, -8}, {10, -4}}));
  CHECK(scale(a, 2.0) == Matrix::from_rows({{2, -4}, {6, 8}}));
  CHECK(hadamard(a, b) == Matrix::from_rows({{5, -12}, {-21, 32}}));
  CHECK(add_row_broadcast(a, Matrix::from_rows({{10, 20}})) ==
        Matrix::from_rows({{11, 18}, {13, 24}}));
  CHECK(col_sums(a) == Matrix::from_rows({{4, 2}}));
  CHECK(max_abs(a) == 4.0);
  CHECK(a.all_finite());
}

TEST_CASE("matrix construction invariants") {
  const Matrix z(3, 4);
  CHECK(z.size() == 12);
  CHECK(max_abs(z) == 0.0);
  const Matrix m(2, 2, {1, 2, 3, 4});
  CHECK(m(1, 0) == 3.0);
  CHECK_THROWS_AS(Matrix(2, 2, {1, 2, 3}), std::invalid_argument);
}
