#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace unlinked {

/// Closed interval [lo, hi]; used for density supports and credible intervals.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Dense row-major matrix. Just enough for covariate storage and projections;
/// not a linear-algebra type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t k) { return data_[i * cols_ + k]; }
  double operator()(std::size_t i, std::size_t k) const { return data_[i * cols_ + k]; }

  /// Dot product of row i with a coefficient vector of length cols().
  double row_dot(std::size_t i, const std::vector<double>& w) const {
    if (w.size() != cols_) throw std::invalid_argument("row_dot: size mismatch");
    const double* r = &data_[i * cols_];
    double acc = 0.0;
    for (std::size_t k = 0; k < cols_; ++k) acc += r[k] * w[k];
    return acc;
  }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace unlinked
