#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "unlinked/dataset.hpp"
#include "unlinked/gauss.hpp"
#include "unlinked/noise.hpp"
#include "unlinked/types.hpp"

namespace unlinked {

/// Empirical CDF of `sample` evaluated at each of its own points, in input
/// order. Ties share the maximal rank (weak inequality).
inline std::vector<double> ecdf_at(const std::vector<double>& sample) {
  const std::size_t n = sample.size();
  if (n == 0) throw std::invalid_argument("ecdf_at: empty sample");
  std::vector<double> sorted(sample);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), sample[j]);
    out[j] = static_cast<double>(it - sorted.begin()) / static_cast<double>(n);
  }
  return out;
}

/// Model CDF of the response at y: the noise CDF averaged over the atoms.
/// Exact path, used as the reference the fast criterion must agree with.
inline double conv_cdf(double y, const std::vector<double>& atoms, const NoiseModel& noise) {
  if (atoms.empty()) throw std::invalid_argument("conv_cdf: empty atoms");
  double acc = 0.0;
  for (double a : atoms) acc += noise.cdf(y - a);
  return acc / static_cast<double>(atoms.size());
}

/// Least-squares contrast between the response ECDF and the model CDF induced
/// by a coefficient vector, with its analytic gradient. Precomputes the sorted
/// responses and their ECDF once; each evaluation is then O(n^2) over a
/// truncated pair window for Gaussian noise, or a plain double loop otherwise.
class CriterionContext {
 public:
  CriterionContext(const Dataset& ds, NoiseModel noise)
      : x_(ds.covariates), noise_(std::move(noise)) {
    const std::size_t n = x_.rows();
    if (n == 0 || x_.cols() == 0) throw std::invalid_argument("criterion: empty dataset");
    if (ds.responses.size() != n)
      throw std::invalid_argument("criterion: requires equally many responses and covariate rows");
    if (!noise_.cdf || !noise_.pdf)
      throw std::invalid_argument("criterion: noise model must provide pdf and cdf");
    if (!(noise_.sigma > 0.0))
      throw std::invalid_argument("criterion: noise scale must be positive");
    y_sorted_ = ds.responses;
    std::sort(y_sorted_.begin(), y_sorted_.end());
    for (double y : y_sorted_) {
      if (!std::isfinite(y)) throw std::invalid_argument("criterion: non-finite response");
    }
    // ECDF at the sorted points; runs of ties all get the rank past the run.
    fhat_.resize(n);
    std::size_t j = 0;
    while (j < n) {
      std::size_t k = j + 1;
      while (k < n && y_sorted_[k] == y_sorted_[j]) ++k;
      const double f = static_cast<double>(k) / static_cast<double>(n);
      for (std::size_t t = j; t < k; ++t) fhat_[t] = f;
      j = k;
    }
  }

  std::size_t size() const { return x_.rows(); }
  std::size_t dim() const { return x_.cols(); }
  const Matrix& covariates() const { return x_; }
  const std::vector<double>& sorted_responses() const { return y_sorted_; }
  const std::vector<double>& ecdf_values() const { return fhat_; }
  const NoiseModel& noise() const { return noise_; }

  double value(const std::vector<double>& beta) const {
    std::vector<double> v = projections(beta);
    if (noise_.family == NoiseModel::Family::gaussian) {
      std::sort(v.begin(), v.end());
      return windowed_value(v, nullptr);
    }
    return generic_value(v, nullptr);
  }

  /// Fused value and gradient; grad is resized to dim().
  double value_and_gradient(const std::vector<double>& beta, std::vector<double>& grad) const {
    const std::size_t n = x_.rows();
    const std::size_t d = x_.cols();
    grad.assign(d, 0.0);
    std::vector<double> v = projections(beta);

    if (noise_.family != NoiseModel::Family::gaussian) {
      return generic_value(v, &grad);
    }

    // Sort the atoms and gather covariate rows in the same order so the
    // gradient pass can stream through memory.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> vs(n), xs(n * d);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = idx[r];
      vs[r] = v[i];
      for (std::size_t k = 0; k < d; ++k) xs[r * d + k] = x_(i, k);
    }

    std::vector<double> resid(n);
    const double val = windowed_value(vs, &resid);

    // Gradient: (2/n^2) * sum_{j,i} resid_j * f_eps(y_j - v_i) * X_i, with the
    // same pair window; the density is far below double noise outside it.
    const double inv_sigma = 1.0 / noise_.sigma;
    const double w = gauss::detail::PhiTable::kHalfWidth * noise_.sigma;
    std::size_t lo = 0, hi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = y_sorted_[j];
      while (lo < n && vs[lo] < y - w) ++lo;
      if (hi < lo) hi = lo;
      while (hi < n && vs[hi] <= y + w) ++hi;
      const double rj = resid[j];
      if (rj == 0.0) continue;
      for (std::size_t r = lo; r < hi; ++r) {
        const double t = (y - vs[r]) * inv_sigma;
        const double f = rj * gauss::kInvRootTwoPi * std::exp(-0.5 * t * t) * inv_sigma;
        const double* xr = &xs[r * d];
        for (std::size_t k = 0; k < d; ++k) grad[k] += f * xr[k];
      }
    }
    const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (std::size_t k = 0; k < d; ++k) grad[k] *= scale;
    return val;
  }

 private:
  std::vector<double> projections(const std::vector<double>& beta) const {
    if (beta.size() != x_.cols())
      throw std::invalid_argument("criterion: coefficient dimension mismatch");
    const std::size_t n = x_.rows();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = x_.row_dot(i, beta);
      if (!std::isfinite(v[i])) throw std::runtime_error("criterion: non-finite projection");
    }
    return v;
  }

  // Gaussian fast path over sorted atoms vs. Atoms below the window saturate
  // the CDF to 1, atoms above it to 0; the remainder goes through the
  // tabulated CDF. If resid is non-null it receives fhat - C per sorted
  // response.
  double windowed_value(const std::vector<double>& vs, std::vector<double>* resid) const {
    const std::size_t n = vs.size();
    const double inv_sigma = 1.0 / noise_.sigma;
    const double w = gauss::detail::PhiTable::kHalfWidth * noise_.sigma;
    const auto& table = gauss::detail::PhiTable::instance();
    const double inv_n = 1.0 / static_cast<double>(n);
    if (resid) resid->resize(n);
    double acc = 0.0;
    std::size_t lo = 0, hi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = y_sorted_[j];
      while (lo < n && vs[lo] < y - w) ++lo;
      if (hi < lo) hi = lo;
      while (hi < n && vs[hi] <= y + w) ++hi;
      double c = static_cast<double>(lo);
      for (std::size_t r = lo; r < hi; ++r) c += table((y - vs[r]) * inv_sigma);
      const double rj = fhat_[j] - c * inv_n;
      if (resid) (*resid)[j] = rj;
      acc += rj * rj;
    }
    return acc * inv_n;
  }

  // Exact path for arbitrary noise; also fills the gradient when requested.
  double generic_value(const std::vector<double>& v, std::vector<double>* grad) const {
    const std::size_t n = v.size();
    const std::size_t d = x_.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = y_sorted_[j];
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += noise_.cdf(y - v[i]);
      const double rj = fhat_[j] - c * inv_n;
      acc += rj * rj;
      if (grad) {
        for (std::size_t i = 0; i < n; ++i) {
          const double f = rj * noise_.pdf(y - v[i]);
          for (std::size_t k = 0; k < d; ++k) (*grad)[k] += f * x_(i, k);
        }
      }
    }
    if (grad) {
      const double scale = 2.0 * inv_n * inv_n;
      for (std::size_t k = 0; k < d; ++k) (*grad)[k] *= scale;
    }
    return acc * inv_n;
  }

  Matrix x_;
  std::vector<double> y_sorted_;
  std::vector<double> fhat_;
  NoiseModel noise_;
};

}  // namespace unlinked
