#include "netad/attention.hpp"

#include <cmath>

#include "netad/errors.hpp"

namespace netad {

AttentionParams::AttentionParams(Matrix query, Matrix key) : w_q(std::move(query)), w_k(std::move(key)) {
  if (w_q.value.rows() != w_k.value.rows() || w_q.value.cols() != w_k.value.cols()) {
    throw ShapeError("query and key projections must share shape, got " + shape_string(w_q.value) + " and " +
                     shape_string(w_k.value));
  }
}

AttentionOutput attend_forward(const Matrix& x, const Matrix& w_q, const Matrix& w_k) {
  if (x.cols() != w_q.rows() || w_q.rows() != w_k.rows() || w_q.cols() != w_k.cols()) {
    throw ShapeError("attend_forward: window " + shape_string(x) + " incompatible with projections " +
                     shape_string(w_q) + " / " + shape_string(w_k));
  }
  AttentionOutput out;
  out.queries = matmul(x, w_q);
  out.keys = matmul(x, w_k);
  out.logits = matmul_transposed(out.queries, out.keys);
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_q.cols()));
  for (double& v : out.logits.values()) v *= scale;
  out.attention = row_softmax(out.logits);
  out.context = matmul(out.attention, x);
  return out;
}

AttentionOutput attend_forward(const Matrix& x, const AttentionParams& params) {
  return attend_forward(x, params.w_q.value, params.w_k.value);
}

AttentionGradients attend_backward(const AttentionOutput& output, const Matrix& d_context, const Matrix& x,
                                   const Matrix& w_q, const Matrix& w_k, const Matrix* d_attention) {
  const std::size_t t = x.rows();
  const std::size_t dk = w_q.cols();
  const bool cache_ok = output.attention.rows() == t && output.attention.cols() == t &&
                        output.queries.rows() == t && output.queries.cols() == dk && output.keys.rows() == t &&
                        output.keys.cols() == dk && output.context.rows() == t &&
                        output.context.cols() == x.cols() && w_q.rows() == x.cols();
  if (!cache_ok) throw ContractViolation("attend_backward: cached forward output does not match inputs");
  if (d_context.rows() != t || d_context.cols() != x.cols()) {
    throw ShapeError("attend_backward: dZ shape " + shape_string(d_context) + " does not match window " +
                     shape_string(x));
  }

  const Matrix& a = output.attention;
  // Z = A X
  Matrix d_a = matmul_transposed(d_context, x);
  if (d_attention != nullptr) {
    if (d_attention->rows() != t || d_attention->cols() != t) {
      throw ShapeError("attend_backward: dA must be " + shape_string(a));
    }
    for (std::size_t i = 0; i < d_a.size(); ++i) d_a.values()[i] += d_attention->values()[i];
  }
  AttentionGradients g;
  g.d_x = transposed_matmul(a, d_context);

  // Softmax Jacobian per row: dS_ij = A_ij (dA_ij - sum_k dA_ik A_ik).
  Matrix d_logits(t, t);
  for (std::size_t i = 0; i < t; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < t; ++k) dot += d_a(i, k) * a(i, k);
    for (std::size_t j = 0; j < t; ++j) d_logits(i, j) = a(i, j) * (d_a(i, j) - dot);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  for (double& v : d_logits.values()) v *= scale;

  // S = Q K^T
  const Matrix d_q = matmul(d_logits, output.keys);
  const Matrix d_k = transposed_matmul(d_logits, output.queries);
  g.d_w_q = transposed_matmul(x, d_q);
  g.d_w_k = transposed_matmul(x, d_k);

  const Matrix dx_q = matmul_transposed(d_q, w_q);
  const Matrix dx_k = matmul_transposed(d_k, w_k);
  auto dx = g.d_x.values();
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dx_q.values()[i] + dx_k.values()[i];
  return g;
}

AttentionGradients attend_backward(const AttentionOutput& output, const Matrix& d_context, const Matrix& x,
                                   const AttentionParams& params, const Matrix* d_attention) {
  return attend_backward(output, d_context, x, params.w_q.value, params.w_k.value, d_attention);
}

}  // namespace netad
