#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unlinked/dataset.hpp"
#include "unlinked/gauss.hpp"
#include "unlinked/noise.hpp"
#include "unlinked/types.hpp"

namespace unlinked {

struct KernelSpec {
  enum class Type { gaussian, epanechnikov };
  Type type = Type::gaussian;
  double bandwidth = 1.0;
};

/// Rule-of-thumb bandwidth 1.06 * sd * n^(-1/8). The slow exponent reflects
/// that these atoms feed a deconvolution target, not a plain density estimate.
inline double default_bandwidth(const std::vector<double>& atoms) {
  if (atoms.empty()) throw std::invalid_argument("default_bandwidth: no atoms");
  const double n = static_cast<double>(atoms.size());
  double mean = 0.0;
  for (double a : atoms) mean += a;
  mean /= n;
  double acc = 0.0;
  for (double a : atoms) acc += (a - mean) * (a - mean);
  const double sd = atoms.size() > 1 ? std::sqrt(acc / (n - 1.0)) : 0.0;
  if (sd > 0.0) return 1.06 * sd * std::pow(n, -0.125);
  // degenerate sample: keep the estimate a proper density with a sharp spike
  return 1e-6 * std::max(1.0, std::abs(atoms.front()));
}

namespace detail {

// Streaming log-sum-exp accumulator; never exponentiates anything above the
// running maximum.
class LogSumExp {
 public:
  void add(double l) {
    if (l == -std::numeric_limits<double>::infinity()) return;
    if (l <= max_) {
      acc_ += std::exp(l - max_);
    } else {
      acc_ = acc_ * std::exp(max_ - l) + 1.0;
      max_ = l;
    }
  }

  double value() const {
    if (acc_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(acc_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double acc_ = 0.0;
};

inline double log_kernel(const KernelSpec& k, double u) {
  switch (k.type) {
    case KernelSpec::Type::gaussian:
      return gauss::log_pdf(u);
    case KernelSpec::Type::epanechnikov: {
      const double t = 1.0 - u * u;
      return t > 0.0 ? std::log(0.75 * t) : -std::numeric_limits<double>::infinity();
    }
  }
  throw std::invalid_argument("log_kernel: bad kernel type");
}

// Half-width beyond which a kernel contribution is below double underflow.
inline double kernel_reach(const KernelSpec& k) {
  return k.type == KernelSpec::Type::epanechnikov ? k.bandwidth : 39.0 * k.bandwidth;
}

}  // namespace detail

/// One-dimensional density estimate with a cached log-density grid.
///
/// Evaluation is exact (the analytic mixture or convolution), while the
/// uniform grid makes downstream consumers cheap: conditioning on many
/// responses, mode scans and normalization checks all reuse the same O(n)
/// per-point work instead of repeating it.
class DensityEstimate {
 public:
  enum class Kind { kde, fy_empirical, fy_gauss_conv, fy_integrated, analytic };

  static constexpr double kLogFloor = -745.0;
  static constexpr std::size_t kGridSize = 4096;

  DensityEstimate() = default;

  static DensityEstimate make(Kind kind, Interval support, std::function<double(double)> log_fn,
                              std::shared_ptr<const std::vector<double>> atoms = nullptr,
                              std::optional<KernelSpec> kernel = std::nullopt) {
    if (!(support.hi > support.lo))
      throw std::invalid_argument("DensityEstimate: degenerate support");
    if (!log_fn) throw std::invalid_argument("DensityEstimate: missing log density");
    DensityEstimate d;
    d.kind_ = kind;
    d.support_ = support;
    d.log_fn_ = std::move(log_fn);
    d.atoms_ = std::move(atoms);
    d.kernel_ = kernel;
    d.step_ = support.length() / static_cast<double>(kGridSize - 1);
    d.grid_log_.resize(kGridSize);
    for (std::size_t i = 0; i < kGridSize; ++i) {
      d.grid_log_[i] = d.floor_log(d.log_fn_(d.grid_z(i)));
    }
    return d;
  }

  Kind kind() const { return kind_; }
  const Interval& support() const { return support_; }

  double log_evaluate(double x) const {
    if (!(x >= support_.lo && x <= support_.hi)) return kLogFloor;
    return floor_log(log_fn_(x));
  }

  double evaluate(double x) const {
    const double l = log_evaluate(x);
    return l <= kLogFloor ? 0.0 : std::exp(l);
  }

  std::size_t grid_size() const { return grid_log_.size(); }
  double grid_step() const { return step_; }
  double grid_z(std::size_t i) const { return support_.lo + step_ * static_cast<double>(i); }
  double grid_log(std::size_t i) const { return grid_log_[i]; }

  /// Trapezoid mass of the density over its support grid.
  double mass() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid_log_.size(); ++i) {
      const double f = grid_log_[i] <= kLogFloor ? 0.0 : std::exp(grid_log_[i]);
      acc += (i == 0 || i + 1 == grid_log_.size()) ? 0.5 * f : f;
    }
    return acc * step_;
  }

  /// Atoms behind mixture-type estimates; null for analytic densities.
  const std::shared_ptr<const std::vector<double>>& atoms() const { return atoms_; }
  const std::optional<KernelSpec>& kernel() const { return kernel_; }

 private:
  static double floor_log(double l) {
    return (std::isfinite(l) && l > kLogFloor) ? l : kLogFloor;
  }

  Kind kind_ = Kind::analytic;
  Interval support_;
  std::function<double(double)> log_fn_;
  std::vector<double> grid_log_;
  double step_ = 0.0;
  std::shared_ptr<const std::vector<double>> atoms_;
  std::optional<KernelSpec> kernel_;
};

namespace detail {

// log of (1/n) sum_i K_h(x - a_i) over a sorted atom vector, restricted to the
// window where the kernel is above underflow.
inline double log_mixture(const std::vector<double>& sorted_atoms, double x, double reach,
                          const std::function<double(double)>& log_term) {
  const auto lo = std::lower_bound(sorted_atoms.begin(), sorted_atoms.end(), x - reach);
  const auto hi = std::upper_bound(sorted_atoms.begin(), sorted_atoms.end(), x + reach);
  LogSumExp lse;
  for (auto it = lo; it != hi; ++it) lse.add(log_term(x - *it));
  const double l = lse.value();
  if (l == -std::numeric_limits<double>::infinity()) return l;
  return l - std::log(static_cast<double>(sorted_atoms.size()));
}

}  // namespace detail

/// Kernel density estimate over the atoms.
inline DensityEstimate kde(const EmpiricalDist& atoms, const KernelSpec& kernel) {
  if (!(kernel.bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
  auto data = std::make_shared<const std::vector<double>>(atoms.atoms());
  const double h = kernel.bandwidth;
  const double ext = kernel.type == KernelSpec::Type::epanechnikov ? h : 8.0 * h;
  Interval support{data->front() - ext, data->back() + ext};
  const double reach = detail::kernel_reach(kernel);
  const double log_h = std::log(h);
  KernelSpec k = kernel;
  auto log_fn = [data, k, reach, log_h, h](double x) {
    return detail::log_mixture(*data, x, reach,
                               [&](double u) { return detail::log_kernel(k, u / h) - log_h; });
  };
  return DensityEstimate::make(DensityEstimate::Kind::kde, support, std::move(log_fn), data,
                               kernel);
}

/// Response density implied by the atoms directly: the noise density averaged
/// over the atoms, with no extra smoothing.
inline DensityEstimate fy_empirical(const EmpiricalDist& atoms, const NoiseModel& noise) {
  if (!noise.log_pdf) throw std::invalid_argument("fy_empirical: noise needs log_pdf");
  auto data = std::make_shared<const std::vector<double>>(atoms.atoms());
  const double reach = std::isfinite(noise.tail_halfwidth) ? noise.tail_halfwidth
                                                           : 12.0 * noise.sigma;
  Interval support{data->front() - reach, data->back() + reach};
  auto log_noise = noise.log_pdf;
  auto log_fn = [data, log_noise, reach](double y) {
    return detail::log_mixture(*data, y, reach, [&](double u) { return log_noise(u); });
  };
  return DensityEstimate::make(DensityEstimate::Kind::fy_empirical, support, std::move(log_fn),
                               data);
}

/// Response density when the latent estimate is a Gaussian-kernel estimate and
/// the noise is Gaussian: the convolution collapses analytically to a mixture
/// of normals with variance h^2 + sigma^2.
inline DensityEstimate fy_gauss_conv(const EmpiricalDist& atoms, const NoiseModel& noise,
                                     double bandwidth) {
  if (noise.family != NoiseModel::Family::gaussian)
    throw std::invalid_argument("fy_gauss_conv: requires the Gaussian noise family");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("fy_gauss_conv: bandwidth must be positive");
  auto data = std::make_shared<const std::vector<double>>(atoms.atoms());
  const double s = std::sqrt(bandwidth * bandwidth + noise.sigma * noise.sigma);
  const double reach = 39.0 * s;
  Interval support{data->front() - 9.0 * s, data->back() + 9.0 * s};
  const double log_s = std::log(s);
  auto log_fn = [data, s, log_s, reach](double y) {
    return detail::log_mixture(*data, y, reach,
                               [&](double u) { return gauss::log_pdf(u / s) - log_s; });
  };
  return DensityEstimate::make(DensityEstimate::Kind::fy_gauss_conv, support, std::move(log_fn),
                               data, KernelSpec{KernelSpec::Type::gaussian, bandwidth});
}

/// Response density as the numerical convolution of an arbitrary latent
/// density estimate with the noise: trapezoid quadrature over the latent grid.
inline DensityEstimate fy_integrated(const DensityEstimate& fz, const NoiseModel& noise) {
  if (!noise.log_pdf) throw std::invalid_argument("fy_integrated: noise needs log_pdf");
  const double pad = std::isfinite(noise.tail_halfwidth) ? (2.0 / 3.0) * noise.tail_halfwidth
                                                         : 6.0 * noise.sigma;
  Interval support{fz.support().lo - pad, fz.support().hi + pad};

  // snapshot the latent grid so the convolution does not depend on fz's life
  const std::size_t m = fz.grid_size();
  auto zs = std::make_shared<std::vector<double>>(m);
  auto ls = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    (*zs)[i] = fz.grid_z(i);
    (*ls)[i] = fz.grid_log(i);
  }
  const double step = fz.grid_step();
  auto log_noise = noise.log_pdf;
  auto log_fn = [zs, ls, step, log_noise, m](double y) {
    detail::LogSumExp lse;
    const double log_step = std::log(step);
    for (std::size_t i = 0; i < m; ++i) {
      if ((*ls)[i] <= DensityEstimate::kLogFloor) continue;
      const double lw = (i == 0 || i + 1 == m) ? log_step - 0.6931471805599453 : log_step;
      lse.add((*ls)[i] + log_noise(y - (*zs)[i]) + lw);
    }
    return lse.value();
  };
  return DensityEstimate::make(DensityEstimate::Kind::fy_integrated, support, std::move(log_fn),
                               fz.atoms(), fz.kernel());
}

/// Exact normal density, mostly for oracle comparisons.
inline DensityEstimate gaussian_density(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian_density: sd must be positive");
  Interval support{mean - 8.5 * sd, mean + 8.5 * sd};
  const double log_sd = std::log(sd);
  auto log_fn = [mean, sd, log_sd](double x) {
    return gauss::log_pdf((x - mean) / sd) - log_sd;
  };
  return DensityEstimate::make(DensityEstimate::Kind::analytic, support, std::move(log_fn));
}

}  // namespace unlinked
