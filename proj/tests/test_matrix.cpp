#include <doctest.h>

#include <cmath>

#include "netad/errors.hpp"
#include "netad/format.hpp"
#include "netad/matrix.hpp"
#include "test_support.hpp"

using namespace netad;
using netad::testing::max_abs_diff;
using netad::testing::random_matrix;

namespace {

// Triple loop in the textbook order; independent of the library kernels.
Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("matmul small examples") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  CHECK(matmul(a, b) == Matrix::from_rows({{17}, {39}}));

  const Matrix m = Matrix::from_rows({{1, -2, 3}, {0.5, 4, -1}, {7, 8, 9}});
  CHECK(matmul(Matrix::identity(3), m) == m);
  CHECK(matmul(m, Matrix::identity(3)) == m);

  CHECK(matmul(Matrix::from_rows({{3}}), Matrix::from_rows({{-2.5}}))(0, 0) == -7.5);
}

TEST_CASE("transposed products agree with explicit transposes") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.index(5), k = 1 + rng.index(5), c = 1 + rng.index(5);
    const Matrix a = random_matrix(rng, r, k);
    const Matrix b = random_matrix(rng, c, k);
    const Matrix a2 = random_matrix(rng, k, r);
    CHECK(max_abs_diff(matmul_transposed(a, b), naive_product(a, transpose(b))) < 1e-14);
    const Matrix b2 = random_matrix(rng, k, c);
    CHECK(max_abs_diff(transposed_matmul(a2, b2), naive_product(transpose(a2), b2)) < 1e-14);
    CHECK(max_abs_diff(matmul(a, transpose(b)), naive_product(a, transpose(b))) < 1e-14);
  }
}

TEST_CASE("matmul is associative up to rounding") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + rng.index(6), q = 1 + rng.index(6), r = 1 + rng.index(6), s = 1 + rng.index(6);
    const Matrix a = random_matrix(rng, p, q), b = random_matrix(rng, q, r), c = random_matrix(rng, r, s);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-12);
  }
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  CHECK_THROWS_AS(Matrix(0, 3), ShapeError);
  CHECK(shape_string(Matrix(2, 3)) == "2x3");
}

TEST_CASE("row softmax examples") {
  const Matrix uniform = row_softmax(Matrix::from_rows({{0, 0, 0}}));
  for (double v : uniform.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Matrix big = row_softmax(Matrix::from_rows({{1000, 0}}));
  CHECK(big.all_finite());
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) < 1e-300);

  const Matrix two = row_softmax(Matrix::from_rows({{1, 2}}));
  CHECK(two(0, 0) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(two(0, 1) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("row softmax rows sum to one, including extreme logits") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double scale = trial % 2 == 0 ? 1.0 : 1e3;
    const Matrix s = row_softmax(random_matrix(rng, 1 + rng.index(8), 1 + rng.index(8), scale));
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double sum = 0.0;
      for (double v : s.row(r)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("finite difference checker") {
  SUBCASE("quadratic") {
    ParamTensor p(Matrix::from_rows({{1.5, -0.5, 2.0}}));
    auto f = [&] {
      double s = 0.0;
      for (double v : p.value.values()) s += v * v;
      return s;
    };
    for (std::size_t i = 0; i < 3; ++i) p.grad.values()[i] = 2.0 * p.value.values()[i];
    const Matrix before = p.value;
    const GradCheckReport report = finite_diff_check(f, p, {.samples = 0});
    CHECK(report.passed);
    CHECK(report.coordinates_checked == 3);
    CHECK(report.max_relative_error < 1e-8);
    CHECK(p.value == before);
  }
  SUBCASE("linear with a wrong gradient is reported") {
    ParamTensor p(Matrix::from_rows({{1.0, 2.0}}));
    auto f = [&] { return 3.0 * p.value(0, 0) - 4.0 * p.value(0, 1); };
    p.grad = Matrix::from_rows({{3.0, 4.0}});
    const GradCheckReport report = finite_diff_check(f, p, {.samples = 0});
    CHECK_FALSE(report.passed);
    CHECK(report.worst_index == 1);
    CHECK_FALSE(report.failure.has_value());
  }
  SUBCASE("non-finite objective") {
    ParamTensor p(Matrix::from_rows({{1.0}}));
    auto f = [&] { return std::log(p.value(0, 0) - 1.0); };
    const GradCheckReport report = finite_diff_check(f, p, {.samples = 0});
    CHECK_FALSE(report.passed);
    CHECK(report.failure.has_value());
  }
}

TEST_CASE("number formatting and field splitting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "NaN");
  CHECK(format_double(-INFINITY) == "-Infinity");
  const auto fields = split_fields("a,\"b,c\",d", ',');
  REQUIRE(fields.size() == 3);
  CHECK(fields[1] == "b,c");
  CHECK(trim("  x \t") == "x");
}
