#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace netad {

// Dense row-major matrix of doubles. All reductions run in a fixed index
// order so results are bit-reproducible.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v);
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Numerically stable softmax of every row (max subtracted before exp).
Matrix row_softmax(const Matrix& m);

// A trainable tensor and its accumulated gradient, always the same shape.
struct ParamTensor {
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  explicit ParamTensor(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates to sample; 0 checks every coordinate.
  std::size_t samples = 20;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  bool passed = true;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
  std::optional<std::string> failure;
};

// Compares param.grad against central differences of f, perturbing
// param.value in place and restoring it afterwards. The relative error of a
// coordinate is |a - b| / max(1, |a|, |b|).
GradCheckReport finite_diff_check(const std::function<double()>& f, ParamTensor& param,
                                  const GradCheckOptions& options = {});

}  // namespace netad
