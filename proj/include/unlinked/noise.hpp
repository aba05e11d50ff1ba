#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "unlinked/gauss.hpp"
#include "unlinked/rng.hpp"

namespace unlinked {

/// Known noise distribution. The built-in Gaussian is the common case and gets
/// fast paths elsewhere; arbitrary distributions plug in through the function
/// members and are treated generically.
struct NoiseModel {
  enum class Family { gaussian, custom };

  Family family = Family::custom;
  double sigma = 0.0;  ///< scale (standard deviation for the Gaussian family)

  std::function<double(double)> pdf;
  std::function<double(double)> log_pdf;
  std::function<double(double)> cdf;
  std::function<double(rng::Stream&)> sample;

  /// Half-width outside of which the density carries negligible mass; used to
  /// window convolutions and conditional supports. Infinite when unknown.
  double tail_halfwidth = std::numeric_limits<double>::infinity();
};

inline NoiseModel gaussian_noise(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_noise: sigma must be positive");
  NoiseModel m;
  m.family = NoiseModel::Family::gaussian;
  m.sigma = sigma;
  m.tail_halfwidth = 9.0 * sigma;
  const double inv = 1.0 / sigma;
  const double log_inv = -std::log(sigma);
  m.pdf = [inv](double e) { return inv * gauss::pdf(e * inv); };
  m.log_pdf = [inv, log_inv](double e) { return gauss::log_pdf(e * inv) + log_inv; };
  m.cdf = [inv](double e) { return gauss::cdf(e * inv); };
  m.sample = [sigma](rng::Stream& s) { return sigma * s.normal(); };
  return m;
}

/// Wrap a user-supplied distribution. Only pdf and cdf are mandatory; log_pdf
/// falls back to log(pdf) and sampling may be absent (operations that need
/// draws will throw).
inline NoiseModel custom_noise(std::function<double(double)> pdf,
                               std::function<double(double)> cdf,
                               double sigma_hint,
                               std::function<double(double)> log_pdf = nullptr,
                               std::function<double(rng::Stream&)> sample = nullptr) {
  if (!pdf || !cdf) throw std::invalid_argument("custom_noise: pdf and cdf are required");
  if (!(sigma_hint > 0.0)) throw std::invalid_argument("custom_noise: sigma_hint must be positive");
  NoiseModel m;
  m.family = NoiseModel::Family::custom;
  m.sigma = sigma_hint;
  m.tail_halfwidth = std::numeric_limits<double>::infinity();
  m.pdf = std::move(pdf);
  m.cdf = std::move(cdf);
  if (log_pdf) {
    m.log_pdf = std::move(log_pdf);
  } else {
    auto p = m.pdf;
    m.log_pdf = [p](double e) { return std::log(p(e)); };
  }
  m.sample = std::move(sample);
  return m;
}

}  // namespace unlinked
