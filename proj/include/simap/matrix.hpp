#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace simap {

/// Minimal dense row-major matrix. The library only needs small closed-form
/// matrices ((n+1) square at most), so there is no linear algebra here beyond
/// row-vector * matrix products.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }

  /// Returns v * this, with v a row vector of length rows().
  std::vector<double> left_multiply(const std::vector<double>& v) const {
    if (v.size() != rows_) {
      throw std::invalid_argument("Matrix::left_multiply: length mismatch");
    }
    std::vector<double> out(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double s = v[r];
      if (s == 0.0) continue;
      for (std::size_t c = 0; c < cols_; ++c) {
        out[c] += s * data_[r * cols_ + c];
      }
    }
    return out;
  }

  /// this * other.
  Matrix multiply(const Matrix& other) const {
    if (cols_ != other.rows_) {
      throw std::invalid_argument("Matrix::multiply: shape mismatch");
    }
    Matrix out(rows_, other.cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t k = 0; k < cols_; ++k) {
        const double s = at(r, k);
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < other.cols_; ++c) {
          out.at(r, c) += s * other.at(k, c);
        }
      }
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace simap
