#pragma once

#include <cstddef>

#include "netad/matrix.hpp"

namespace netad {

// Query and key projections of the single-head self-attention encoder.
// There is no value projection: the context is A * X.
struct AttentionParams {
  ParamTensor w_q;  // n x d_k
  ParamTensor w_k;  // n x d_k

  AttentionParams() = default;
  AttentionParams(Matrix query, Matrix key);

  std::size_t n_features() const noexcept { return w_q.value.rows(); }
  std::size_t d_k() const noexcept { return w_q.value.cols(); }

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

struct AttentionOutput {
  Matrix attention;  // T x T, row-stochastic
  Matrix context;    // T x n
  // Cached for the backward pass.
  Matrix queries;    // T x d_k
  Matrix keys;       // T x d_k
  Matrix logits;     // T x T, already divided by sqrt(d_k)
};

struct AttentionGradients {
  Matrix d_x;
  Matrix d_w_q;
  Matrix d_w_k;
};

// logits = (X Wq)(X Wk)^T / sqrt(d_k); A = row_softmax(logits); Z = A X.
AttentionOutput attend_forward(const Matrix& x, const Matrix& w_q, const Matrix& w_k);
AttentionOutput attend_forward(const Matrix& x, const AttentionParams& params);

// Back-propagates dL/dZ (and optionally a direct dL/dA term) through the
// softmax and both projections. d_x covers X's roles as query, key and value.
AttentionGradients attend_backward(const AttentionOutput& output, const Matrix& d_context, const Matrix& x,
                                   const Matrix& w_q, const Matrix& w_k,
                                   const Matrix* d_attention = nullptr);
AttentionGradients attend_backward(const AttentionOutput& output, const Matrix& d_context, const Matrix& x,
                                   const AttentionParams& params, const Matrix* d_attention = nullptr);

}  // namespace netad
