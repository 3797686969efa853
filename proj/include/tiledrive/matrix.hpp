#pragma once

#include <cstdint>
#include <vector>

#include "tiledrive/error.hpp"

namespace td {

// Dense row-major int32 matrix.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int32_t> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c)
      : rows(r), cols(c), data(static_cast<size_t>(r * c), 0) {
    if (r < 1 || c < 1) fail(Err::InvalidArg, "matrix extent must be positive");
  }

  int32_t& at(int64_t r, int64_t c) {
    return data[static_cast<size_t>(r * cols + c)];
  }
  int32_t at(int64_t r, int64_t c) const {
    return data[static_cast<size_t>(r * cols + c)];
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

}  // namespace td
