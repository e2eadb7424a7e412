#include <doctest.h>

#include <cmath>

#include "netad/attention.hpp"
#include "netad/errors.hpp"
#include "test_support.hpp"

using namespace netad;
using netad::testing::max_abs_diff;
using netad::testing::random_matrix;

namespace {

double weighted_sum(const Matrix& weights, const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += weights.values()[i] * m.values()[i];
  return s;
}

}  // namespace

TEST_CASE("zero projections give uniform attention and column means") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 1 + rng.index(12), n = 1 + rng.index(6), dk = 1 + rng.index(5);
    const Matrix x = random_matrix(rng, t, n, 10.0);
    const AttentionOutput out = attend_forward(x, Matrix(n, dk), Matrix(n, dk));
    for (double a : out.attention.values()) CHECK(std::abs(a - 1.0 / static_cast<double>(t)) < 1e-12);
    for (std::size_t j = 0; j < n; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < t; ++r) mean += x(r, j);
      mean /= static_cast<double>(t);
      for (std::size_t r = 0; r < t; ++r) CHECK(std::abs(out.context(r, j) - mean) < 1e-12);
    }
  }
}

TEST_CASE("single step window attends to itself") {
  Rng rng(2);
  const Matrix x = random_matrix(rng, 1, 4);
  const AttentionOutput out = attend_forward(x, random_matrix(rng, 4, 3), random_matrix(rng, 4, 3));
  CHECK(out.attention(0, 0) == 1.0);
  CHECK(max_abs_diff(out.context, x) < 1e-15);
}

TEST_CASE("two step scalar window matches closed form") {
  const double a = 0.7, b = -1.3, q = 0.9, k = 1.4;
  const Matrix x = Matrix::from_rows({{a}, {b}});
  const AttentionOutput out = attend_forward(x, Matrix::from_rows({{q}}), Matrix::from_rows({{k}}));
  // Row i weights: softmax over j of (x_i q)(x_j k).
  for (int i = 0; i < 2; ++i) {
    const double xi = i == 0 ? a : b;
    const double l0 = xi * q * a * k, l1 = xi * q * b * k;
    const double w0 = 1.0 / (1.0 + std::exp(l1 - l0));
    CHECK(out.attention(i, 0) == doctest::Approx(w0).epsilon(1e-14));
    CHECK(out.context(i, 0) == doctest::Approx(w0 * a + (1 - w0) * b).epsilon(1e-14));
  }
}

TEST_CASE("logits are scaled by the key width") {
  Rng rng(4);
  const Matrix x = random_matrix(rng, 5, 3);
  const Matrix wq = random_matrix(rng, 3, 4), wk = random_matrix(rng, 3, 4);
  const AttentionOutput out = attend_forward(x, wq, wk);
  const Matrix raw = matmul(matmul(x, wq), transpose(matmul(x, wk)));
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(out.logits.values()[i] == doctest::Approx(raw.values()[i] / 2.0));
}

TEST_CASE("attention rows are stochastic for extreme inputs") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 1 + rng.index(10), n = 1 + rng.index(5);
    const double scale = trial % 3 == 0 ? 30.0 : 1.0;
    const AttentionOutput out = attend_forward(random_matrix(rng, t, n, scale), random_matrix(rng, n, 3, scale),
                                               random_matrix(rng, n, 3, scale));
    CHECK(out.attention.all_finite());
    for (std::size_t r = 0; r < t; ++r) {
      double sum = 0.0;
      for (double v : out.attention.row(r)) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(8);
  const Matrix x = random_matrix(rng, 4, 3);
  const Matrix wq = random_matrix(rng, 3, 2), wk = random_matrix(rng, 3, 2);
  const AttentionOutput out = attend_forward(x, wq, wk);
  const AttentionGradients g = attend_backward(out, Matrix(4, 3), x, wq, wk);
  for (const Matrix* m : {&g.d_x, &g.d_w_q, &g.d_w_k})
    for (double v : m->values()) CHECK(v == 0.0);
}

TEST_CASE("backward matches finite differences on random instances") {
  Rng rng(10);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t t = 1 + rng.index(6), n = 1 + rng.index(5), dk = 1 + rng.index(4);
    ParamTensor x(random_matrix(rng, t, n));
    ParamTensor wq(random_matrix(rng, n, dk, 0.8));
    ParamTensor wk(random_matrix(rng, n, dk, 0.8));
    const Matrix g_context = random_matrix(rng, t, n);
    const Matrix g_attention = random_matrix(rng, t, t);
    const bool direct = trial % 2 == 1;

    auto f = [&] {
      const AttentionOutput o = attend_forward(x.value, wq.value, wk.value);
      return weighted_sum(g_context, o.context) + (direct ? weighted_sum(g_attention, o.attention) : 0.0);
    };
    const AttentionOutput out = attend_forward(x.value, wq.value, wk.value);
    const AttentionGradients g =
        attend_backward(out, g_context, x.value, wq.value, wk.value, direct ? &g_attention : nullptr);
    x.grad = g.d_x;
    wq.grad = g.d_w_q;
    wk.grad = g.d_w_k;
    const GradCheckOptions opts{.samples = 0, .seed = static_cast<std::uint64_t>(trial)};
    for (ParamTensor* p : {&x, &wq, &wk}) {
      const GradCheckReport report = finite_diff_check(f, *p, opts);
      CHECK_MESSAGE(report.passed, "trial ", trial, " error ", report.max_relative_error);
    }
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(12);
  const Matrix x = random_matrix(rng, 16, 8);
  const AttentionParams params(random_matrix(rng, 8, 16), random_matrix(rng, 8, 16));
  const AttentionOutput a = attend_forward(x, params);
  const AttentionOutput b = attend_forward(x, params);
  CHECK(a.attention == b.attention);
  CHECK(a.context == b.context);
}

TEST_CASE("backward rejects a mismatched cache") {
  Rng rng(14);
  const Matrix x = random_matrix(rng, 4, 3);
  const Matrix wq = random_matrix(rng, 3, 2), wk = random_matrix(rng, 3, 2);
  const AttentionOutput out = attend_forward(x, wq, wk);
  CHECK_THROWS_AS(attend_backward(out, Matrix(4, 3), random_matrix(rng, 5, 3), wq, wk), ContractViolation);
  CHECK_THROWS_AS(attend_forward(x, random_matrix(rng, 4, 2), wk), ShapeError);
}
