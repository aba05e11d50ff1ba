#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlinked/dataset.hpp"
#include "unlinked/density.hpp"
#include "unlinked/gauss.hpp"
#include "unlinked/noise.hpp"
#include "unlinked/rng.hpp"
#include "unlinked/types.hpp"

namespace unlinked {

/// How the normalizing response density f_Y(y0) is computed when conditioning.
enum class FyVariant { empirical, gauss_conv, integrated };

inline std::string fy_variant_name(FyVariant v) {
  switch (v) {
    case FyVariant::empirical: return "empirical";
    case FyVariant::gauss_conv: return "gauss_conv";
    case FyVariant::integrated: return "integrated";
  }
  throw std::invalid_argument("fy_variant_name: bad variant");
}

inline FyVariant fy_variant_from_name(const std::string& s) {
  if (s == "empirical") return FyVariant::empirical;
  if (s == "gauss_conv" || s == "gauss") return FyVariant::gauss_conv;
  if (s == "integrated") return FyVariant::integrated;
  throw std::invalid_argument("fy_variant_from_name: expected empirical, gauss or integrated");
}

/// Conditional density of the latent predictor given one observed response:
/// noise likelihood times the latent estimate, divided by the response density
/// at y0. Carries a quadrature grid over the part of the latent support the
/// likelihood can reach.
class ConditionalDensity {
 public:
  double y0() const { return y0_; }
  FyVariant variant() const { return variant_; }
  const Interval& support() const { return support_; }
  double log_normalizer() const { return log_norm_; }

  /// log of noise_pdf(y0 - z) * fz(z); the floor stands in for zero.
  double unnormalized_log(double z) const {
    if (!(z >= support_.lo && z <= support_.hi)) return DensityEstimate::kLogFloor;
    const double lf = fz_.log_evaluate(z);
    if (lf <= DensityEstimate::kLogFloor) return DensityEstimate::kLogFloor;
    const double l = lf + noise_.log_pdf(y0_ - z);
    return (std::isfinite(l) && l > DensityEstimate::kLogFloor) ? l : DensityEstimate::kLogFloor;
  }

  double log_evaluate(double z) const {
    const double l = unnormalized_log(z);
    if (l <= DensityEstimate::kLogFloor) return DensityEstimate::kLogFloor;
    const double r = l - log_norm_;
    return r > DensityEstimate::kLogFloor ? r : DensityEstimate::kLogFloor;
  }

  double evaluate(double z) const {
    const double l = log_evaluate(z);
    return l <= DensityEstimate::kLogFloor ? 0.0 : std::exp(l);
  }

  std::size_t grid_size() const { return zs_.size(); }
  double grid_z(std::size_t i) const { return zs_[i]; }
  /// Normalized log density at grid point i.
  double grid_log(std::size_t i) const { return logs_[i]; }
  double grid_step() const { return step_; }

  const DensityEstimate& latent() const { return fz_; }
  const NoiseModel& noise() const { return noise_; }

  friend ConditionalDensity conditional_density(const DensityEstimate&, const NoiseModel&, double,
                                                FyVariant);

 private:
  DensityEstimate fz_;
  NoiseModel noise_;
  double y0_ = 0.0;
  FyVariant variant_ = FyVariant::integrated;
  Interval support_;
  double log_norm_ = 0.0;
  double step_ = 0.0;
  std::vector<double> zs_;
  std::vector<double> logs_;  // normalized
};

inline ConditionalDensity conditional_density(const DensityEstimate& fz, const NoiseModel& noise,
                                              double y0, FyVariant variant = FyVariant::integrated) {
  if (!noise.log_pdf) throw std::invalid_argument("conditional_density: noise needs log_pdf");
  if (!std::isfinite(y0)) throw std::invalid_argument("conditional_density: y0 must be finite");

  ConditionalDensity cd;
  cd.fz_ = fz;
  cd.noise_ = noise;
  cd.y0_ = y0;
  cd.variant_ = variant;

  // restrict to where the likelihood has mass, when the noise tail is known
  Interval win = fz.support();
  if (std::isfinite(noise.tail_halfwidth)) {
    win.lo = std::max(win.lo, y0 - noise.tail_halfwidth);
    win.hi = std::min(win.hi, y0 + noise.tail_halfwidth);
  }
  if (!(win.hi > win.lo))
    throw std::runtime_error("conditional_density: response lies outside the estimated support");
  cd.support_ = win;

  // grid: reuse the latent grid points inside the window when there are
  // enough of them; refine over the narrow window otherwise
  const double fstep = fz.grid_step();
  std::size_t i0 = 0;
  if (win.lo > fz.support().lo)
    i0 = static_cast<std::size_t>(std::ceil((win.lo - fz.support().lo) / fstep - 1e-9));
  std::size_t i1 = fz.grid_size() - 1;
  if (win.hi < fz.support().hi)
    i1 = static_cast<std::size_t>(std::floor((win.hi - fz.support().lo) / fstep + 1e-9));
  std::vector<double> unnorm;
  if (i1 >= i0 && i1 - i0 + 1 >= 512) {
    const std::size_t m = i1 - i0 + 1;
    cd.zs_.resize(m);
    unnorm.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      cd.zs_[i] = fz.grid_z(i0 + i);
      const double lf = fz.grid_log(i0 + i);
      double l = DensityEstimate::kLogFloor;
      if (lf > DensityEstimate::kLogFloor) {
        l = lf + noise.log_pdf(y0 - cd.zs_[i]);
        if (!(std::isfinite(l) && l > DensityEstimate::kLogFloor))
          l = DensityEstimate::kLogFloor;
      }
      unnorm[i] = l;
    }
    cd.step_ = fstep;
  } else {
    const std::size_t m = DensityEstimate::kGridSize;
    cd.zs_.resize(m);
    unnorm.resize(m);
    cd.step_ = win.length() / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
      cd.zs_[i] = win.lo + cd.step_ * static_cast<double>(i);
      unnorm[i] = cd.unnormalized_log(cd.zs_[i]);
    }
  }

  // trapezoid mass of the unnormalized density over the window
  detail::LogSumExp mass;
  const double log_step = std::log(cd.step_);
  for (std::size_t i = 0; i < unnorm.size(); ++i) {
    if (unnorm[i] <= DensityEstimate::kLogFloor) continue;
    const double lw = (i == 0 || i + 1 == unnorm.size()) ? log_step - 0.6931471805599453 : log_step;
    mass.add(unnorm[i] + lw);
  }
  const double log_mass = mass.value();
  if (!std::isfinite(log_mass) || log_mass < DensityEstimate::kLogFloor + 45.0)
    throw std::runtime_error("conditional_density: response lies outside the estimated support");

  switch (variant) {
    case FyVariant::integrated:
      cd.log_norm_ = log_mass;
      break;
    case FyVariant::empirical: {
      if (!fz.atoms())
        throw std::invalid_argument(
            "conditional_density: the empirical normalizer needs an atom-backed latent estimate");
      detail::LogSumExp lse;
      for (double a : *fz.atoms()) lse.add(noise.log_pdf(y0 - a));
      const double l = lse.value();
      if (!std::isfinite(l))
        throw std::runtime_error("conditional_density: response lies outside the estimated support");
      cd.log_norm_ = l - std::log(static_cast<double>(fz.atoms()->size()));
      break;
    }
    case FyVariant::gauss_conv: {
      if (noise.family != NoiseModel::Family::gaussian)
        throw std::invalid_argument(
            "conditional_density: the gauss_conv normalizer requires Gaussian noise");
      if (!fz.atoms() || !fz.kernel() || fz.kernel()->type != KernelSpec::Type::gaussian)
        throw std::invalid_argument(
            "conditional_density: the gauss_conv normalizer needs a Gaussian-kernel estimate");
      const double h = fz.kernel()->bandwidth;
      const double s = std::sqrt(h * h + noise.sigma * noise.sigma);
      detail::LogSumExp lse;
      for (double a : *fz.atoms()) lse.add(gauss::log_pdf((y0 - a) / s) - std::log(s));
      const double l = lse.value();
      if (!std::isfinite(l))
        throw std::runtime_error("conditional_density: response lies outside the estimated support");
      cd.log_norm_ = l - std::log(static_cast<double>(fz.atoms()->size()));
      break;
    }
  }

  cd.logs_.resize(unnorm.size());
  for (std::size_t i = 0; i < unnorm.size(); ++i) {
    if (unnorm[i] <= DensityEstimate::kLogFloor) {
      cd.logs_[i] = DensityEstimate::kLogFloor;
    } else {
      const double r = unnorm[i] - cd.log_norm_;
      cd.logs_[i] = r > DensityEstimate::kLogFloor ? r : DensityEstimate::kLogFloor;
    }
  }
  return cd;
}

namespace detail {

// Maximize a continuous scalar function on [lo, hi] by golden-section search,
// down to a fixed absolute width.
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Posterior mean by trapezoid quadrature over the conditional grid. Ratio of
/// integrals, so the choice of normalizer cancels.
inline double cond_mean(const ConditionalDensity& cd) {
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cd.grid_size(); ++i) shift = std::max(shift, cd.grid_log(i));
  if (!std::isfinite(shift)) throw std::runtime_error("cond_mean: conditional density vanishes");
  double num = 0.0, den = 0.0;
  const std::size_t m = cd.grid_size();
  for (std::size_t i = 0; i < m; ++i) {
    const double l = cd.grid_log(i);
    if (l <= DensityEstimate::kLogFloor) continue;
    double f = std::exp(l - shift);
    if (i == 0 || i + 1 == m) f *= 0.5;
    num += f * cd.grid_z(i);
    den += f;
  }
  if (den <= 0.0) throw std::runtime_error("cond_mean: conditional density vanishes");
  return num / den;
}

/// Posterior mode: grid argmax refined by golden-section on the exact
/// unnormalized log density.
inline double cond_mode(const ConditionalDensity& cd) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < cd.grid_size(); ++i)
    if (cd.grid_log(i) > cd.grid_log(k)) k = i;
  const double lo = cd.grid_z(k == 0 ? 0 : k - 1);
  const double hi = cd.grid_z(k + 1 >= cd.grid_size() ? cd.grid_size() - 1 : k + 1);
  if (!(hi > lo)) return cd.grid_z(k);
  const double tol = 1e-8 * cd.support().length();
  return detail::golden_max([&cd](double z) { return cd.unnormalized_log(z); }, lo, hi, tol);
}

namespace detail {

// Cumulative trapezoid of exp(log values - shift); returns the grid CDF.
inline std::vector<double> cumulative_mass(const ConditionalDensity& cd, double& shift_out) {
  const std::size_t m = cd.grid_size();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) shift = std::max(shift, cd.grid_log(i));
  std::vector<double> c(m, 0.0);
  double prev_f = cd.grid_log(0) <= DensityEstimate::kLogFloor ? 0.0
                                                                : std::exp(cd.grid_log(0) - shift);
  for (std::size_t i = 1; i < m; ++i) {
    const double f = cd.grid_log(i) <= DensityEstimate::kLogFloor ? 0.0
                                                                  : std::exp(cd.grid_log(i) - shift);
    c[i] = c[i - 1] + 0.5 * (prev_f + f) * (cd.grid_z(i) - cd.grid_z(i - 1));
    prev_f = f;
  }
  shift_out = shift;
  return c;
}

}  // namespace detail

/// Posterior quantile from the renormalized grid CDF with linear inversion in
/// the hit segment.
inline double cond_quantile(const ConditionalDensity& cd, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("cond_quantile: p must lie strictly inside (0, 1)");
  double shift;
  const std::vector<double> c = detail::cumulative_mass(cd, shift);
  const double total = c.back();
  if (!(total > 0.0)) throw std::runtime_error("cond_quantile: conditional density vanishes");
  const double target = p * total;
  const auto it = std::lower_bound(c.begin(), c.end(), target);
  if (it == c.begin()) return cd.grid_z(0);
  const std::size_t k = static_cast<std::size_t>(it - c.begin());
  const double c0 = c[k - 1], c1 = c[k];
  const double z0 = cd.grid_z(k - 1), z1 = cd.grid_z(k);
  if (!(c1 > c0)) return z1;
  return z0 + (z1 - z0) * (target - c0) / (c1 - c0);
}

/// Central credible interval [q_{a/2}, q_{1-a/2}].
inline Interval credible_interval(const ConditionalDensity& cd, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("credible_interval: alpha must lie in (0, 1)");
  return Interval{cond_quantile(cd, 0.5 * alpha), cond_quantile(cd, 1.0 - 0.5 * alpha)};
}

struct ImportanceOptions {
  std::size_t draws = 4096;
  std::uint64_t seed = 0;
  double min_ess = 50.0;       ///< retry threshold on the effective sample size
  std::size_t max_retries = 2; ///< proposal-widening retries before giving up
};

struct ImportanceEstimate {
  double mean = 0.0;
  double se = 0.0;          ///< self-normalized sampling standard error
  double ess = 0.0;
  double proposal_sd = 0.0;
  std::size_t retries = 0;
};

namespace detail {

struct WeightedDraws {
  std::vector<double> z;
  std::vector<double> w;  // normalized to sum 1
  double ess = 0.0;
  double proposal_sd = 0.0;
  std::size_t retries = 0;
};

// Draws from a Laplace-style Gaussian proposal centered at the grid mode, with
// the scale doubled until the effective sample size clears the floor.
inline WeightedDraws importance_draws(const ConditionalDensity& cd, const ImportanceOptions& opt) {
  if (opt.draws < 2) throw std::invalid_argument("importance sampling: needs at least 2 draws");
  std::size_t k = 0;
  for (std::size_t i = 1; i < cd.grid_size(); ++i)
    if (cd.grid_log(i) > cd.grid_log(k)) k = i;
  const double center = cd.grid_z(k);
  double sd;
  {
    // local curvature of the log density at the mode, by second difference
    const std::size_t i0 = k == 0 ? 1 : (k + 1 >= cd.grid_size() ? cd.grid_size() - 2 : k);
    const double step = cd.grid_step();
    const double curv =
        (cd.grid_log(i0 - 1) - 2.0 * cd.grid_log(i0) + cd.grid_log(i0 + 1)) / (step * step);
    sd = curv < -1e-12 ? 2.0 / std::sqrt(-curv) : 0.5 * cd.support().length();
    sd = std::min(sd, cd.support().length());
  }

  rng::Stream st(opt.seed, {0x636f6e64ULL});
  WeightedDraws out;
  for (std::size_t attempt = 0; attempt <= opt.max_retries; ++attempt) {
    out.z.assign(opt.draws, 0.0);
    std::vector<double> lw(opt.draws);
    const double log_sd = std::log(sd);
    double lw_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < opt.draws; ++i) {
      const double z = center + sd * st.normal();
      out.z[i] = z;
      const double lq = gauss::log_pdf((z - center) / sd) - log_sd;
      const double lt = cd.unnormalized_log(z);
      lw[i] = lt <= DensityEstimate::kLogFloor ? -std::numeric_limits<double>::infinity()
                                               : lt - lq;
      lw_max = std::max(lw_max, lw[i]);
    }
    if (std::isfinite(lw_max)) {
      out.w.assign(opt.draws, 0.0);
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t i = 0; i < opt.draws; ++i) {
        const double w = std::isfinite(lw[i]) ? std::exp(lw[i] - lw_max) : 0.0;
        out.w[i] = w;
        sum += w;
        sum2 += w * w;
      }
      if (sum > 0.0) {
        out.ess = sum * sum / sum2;
        out.proposal_sd = sd;
        out.retries = attempt;
        if (out.ess >= opt.min_ess) {
          for (auto& w : out.w) w /= sum;
          return out;
        }
      }
    }
    sd *= 2.0;
  }
  throw std::runtime_error(
      "importance sampling: effective sample size stayed below the floor after widening retries");
}

}  // namespace detail

/// Posterior mean by self-normalized importance sampling.
inline ImportanceEstimate cond_mean_is(const ConditionalDensity& cd,
                                       const ImportanceOptions& opt = {}) {
  detail::WeightedDraws d = detail::importance_draws(cd, opt);
  ImportanceEstimate est;
  est.ess = d.ess;
  est.proposal_sd = d.proposal_sd;
  est.retries = d.retries;
  double mean = 0.0;
  for (std::size_t i = 0; i < d.z.size(); ++i) mean += d.w[i] * d.z[i];
  est.mean = mean;
  double var = 0.0;
  for (std::size_t i = 0; i < d.z.size(); ++i) {
    const double c = d.z[i] - mean;
    var += d.w[i] * d.w[i] * c * c;
  }
  est.se = std::sqrt(var);
  return est;
}

/// Central credible interval from weighted importance draws.
inline Interval credible_interval_is(const ConditionalDensity& cd, double alpha,
                                     const ImportanceOptions& opt = {}) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("credible_interval_is: alpha must lie in (0, 1)");
  detail::WeightedDraws d = detail::importance_draws(cd, opt);
  std::vector<std::size_t> idx(d.z.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&d](std::size_t a, std::size_t b) { return d.z[a] < d.z[b]; });
  auto weighted_quantile = [&](double p) {
    double cum = 0.0;
    for (std::size_t i : idx) {
      cum += d.w[i];
      if (cum >= p) return d.z[i];
    }
    return d.z[idx.back()];
  };
  return Interval{weighted_quantile(0.5 * alpha), weighted_quantile(1.0 - 0.5 * alpha)};
}

/// Mode of an unconditional density estimate: grid argmax plus golden-section
/// refinement.
inline double density_mode(const DensityEstimate& f) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < f.grid_size(); ++i)
    if (f.grid_log(i) > f.grid_log(k)) k = i;
  const double lo = f.grid_z(k == 0 ? 0 : k - 1);
  const double hi = f.grid_z(k + 1 >= f.grid_size() ? f.grid_size() - 1 : k + 1);
  if (!(hi > lo)) return f.grid_z(k);
  const double tol = 1e-8 * f.support().length();
  return detail::golden_max([&f](double z) { return f.log_evaluate(z); }, lo, hi, tol);
}

/// What the latent estimate alone says, ignoring the observed response: atom
/// mean, density mode, and an order-statistic interval.
struct UnconditionalBaselines {
  double mean = 0.0;
  double mode = 0.0;
  Interval interval;
};

inline UnconditionalBaselines unconditional_baselines(const EmpiricalDist& atoms,
                                                      const DensityEstimate& fz, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("unconditional_baselines: alpha must lie in (0, 1)");
  UnconditionalBaselines b;
  b.mean = atoms.mean();
  b.mode = density_mode(fz);
  b.interval = Interval{atoms.quantile(0.5 * alpha), atoms.quantile(1.0 - 0.5 * alpha)};
  return b;
}

}  // namespace unlinked
