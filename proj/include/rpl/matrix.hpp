#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rpl {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

// Row i: scores for the token predicted at target position i.
using LogitMatrix = Matrix;
// Row i: d loss / d one-hot indicator of attack-sequence token i, per candidate token.
using GradientMatrix = Matrix;

}  // namespace rpl
