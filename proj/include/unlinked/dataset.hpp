#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlinked/rng.hpp"
#include "unlinked/types.hpp"

namespace unlinked {

/// Benchmark designs. (a) and (b) have spherical Gaussian covariates, so only
/// the norm of the coefficient vector is identifiable; (c) and (d) use
/// independent Gamma covariates and identify the coefficients themselves.
enum class Setting { a, b, c, d };

inline std::string setting_name(Setting s) {
  switch (s) {
    case Setting::a: return "a";
    case Setting::b: return "b";
    case Setting::c: return "c";
    case Setting::d: return "d";
  }
  throw std::invalid_argument("setting_name: bad setting");
}

inline Setting setting_from_name(const std::string& name) {
  if (name == "a") return Setting::a;
  if (name == "b") return Setting::b;
  if (name == "c") return Setting::c;
  if (name == "d") return Setting::d;
  throw std::invalid_argument("setting_from_name: expected one of a,b,c,d");
}

inline std::size_t setting_dim(Setting s) {
  return (s == Setting::a || s == Setting::c) ? 2 : 3;
}

inline const std::vector<double>& setting_beta0(Setting s) {
  static const std::vector<double> a{3.0, -5.0};
  static const std::vector<double> b{-1.5, 2.0, 7.0};
  static const std::vector<double> c{1.0, 2.0};
  static const std::vector<double> d{0.5, 2.0, 3.0};
  switch (s) {
    case Setting::a: return a;
    case Setting::b: return b;
    case Setting::c: return c;
    case Setting::d: return d;
  }
  throw std::invalid_argument("setting_beta0: bad setting");
}

namespace detail {

// One covariate row, written into x[0..d). Component order is fixed so that
// dataset draws and latent reference draws consume streams identically.
inline void draw_covariate_row(Setting s, rng::Stream& st, double* x) {
  switch (s) {
    case Setting::a:
      x[0] = st.normal();
      x[1] = st.normal();
      break;
    case Setting::b:
      x[0] = st.normal();
      x[1] = st.normal();
      x[2] = st.normal();
      break;
    case Setting::c:
      x[0] = st.gamma(1.0, 1.0);
      x[1] = st.gamma(2.0, 4.0);
      break;
    case Setting::d:
      x[0] = st.gamma(1.0, 1.0);
      x[1] = st.gamma(2.0, 4.0);
      x[2] = st.gamma(1.5, 3.0);
      break;
  }
}

}  // namespace detail

/// A regression sample. When linked is false the responses have been permuted,
/// so row i of the covariates and responses[i] no longer belong to the same
/// observation; only the two marginal samples are meaningful.
struct Dataset {
  Matrix covariates;
  std::vector<double> responses;
  double sigma = 0.0;  ///< noise scale used to generate the responses
  bool linked = true;
};

/// Draw a synthetic dataset from one of the benchmark designs. sigma = 0 is
/// allowed (noiseless responses), which is occasionally useful in tests.
/// Covariate rows always keep their drawing order; unlinking permutes only the
/// response vector. All randomness comes from children of `st`, so the same
/// (seed path, arguments) reproduce the same dataset byte for byte.
inline Dataset sample_setting(Setting s, std::size_t n, double sigma, rng::Stream st,
                              bool linked = false) {
  if (n == 0) throw std::invalid_argument("sample_setting: n must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sample_setting: sigma must be >= 0");
  const std::size_t d = setting_dim(s);
  const std::vector<double>& beta0 = setting_beta0(s);

  Dataset ds;
  ds.covariates = Matrix(n, d);
  ds.responses.resize(n);
  ds.sigma = sigma;
  ds.linked = linked;

  rng::Stream sx = st.child(0);
  for (std::size_t i = 0; i < n; ++i) {
    detail::draw_covariate_row(s, sx, &ds.covariates(i, 0));
  }
  // responses: signal plus noise, drawn after all covariates
  for (std::size_t i = 0; i < n; ++i) {
    double z = ds.covariates.row_dot(i, beta0);
    ds.responses[i] = z + (sigma > 0.0 ? sigma * sx.normal() : 0.0);
  }
  if (!linked) {
    rng::Stream sp = st.child(1);
    rng::shuffle(ds.responses, sp);
  }
  return ds;
}

/// One draw from the latent predictor law beta0'X of a design. Uses the same
/// per-row component order as sample_setting.
inline double sample_latent(Setting s, rng::Stream& st) {
  double x[3] = {0.0, 0.0, 0.0};
  detail::draw_covariate_row(s, st, x);
  const std::vector<double>& b = setting_beta0(s);
  double z = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) z += b[k] * x[k];
  return z;
}

inline double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// Distance from beta to the set of coefficient vectors indistinguishable from
/// the truth. Spherical designs identify only the norm; Gamma designs identify
/// the point.
inline double dist_to_solution_set(Setting s, const std::vector<double>& beta) {
  const std::vector<double>& b0 = setting_beta0(s);
  if (beta.size() != b0.size())
    throw std::invalid_argument("dist_to_solution_set: dimension mismatch");
  if (s == Setting::a || s == Setting::b) {
    return std::abs(norm2(beta) - norm2(b0));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < b0.size(); ++k) {
    const double dk = beta[k] - b0[k];
    acc += dk * dk;
  }
  return std::sqrt(acc);
}

/// Projections beta'X_i in row order.
inline std::vector<double> project(const Matrix& covariates, const std::vector<double>& beta) {
  std::vector<double> out(covariates.rows());
  for (std::size_t i = 0; i < covariates.rows(); ++i) out[i] = covariates.row_dot(i, beta);
  return out;
}

/// Sorted one-dimensional sample with the usual weak-inequality empirical CDF.
class EmpiricalDist {
 public:
  explicit EmpiricalDist(std::vector<double> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("EmpiricalDist: no atoms");
    for (double a : atoms_) {
      if (!std::isfinite(a)) throw std::invalid_argument("EmpiricalDist: non-finite atom");
    }
    std::sort(atoms_.begin(), atoms_.end());
  }

  const std::vector<double>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  /// P(X <= x); ties all receive the maximal rank.
  double cdf(double x) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
    return static_cast<double>(it - atoms_.begin()) / static_cast<double>(atoms_.size());
  }

  /// Order-statistic quantile at rank ceil(n*p), p in (0, 1].
  double quantile(double p) const {
    if (!(p > 0.0) || !(p <= 1.0))
      throw std::invalid_argument("EmpiricalDist::quantile: p must lie in (0, 1]");
    return atoms_[order_rank(p, atoms_.size()) - 1];
  }

  double mean() const {
    double acc = 0.0;
    for (double a : atoms_) acc += a;
    return acc / static_cast<double>(atoms_.size());
  }

  double sd() const {
    const std::size_t n = atoms_.size();
    if (n < 2) return 0.0;
    const double m = mean();
    double acc = 0.0;
    for (double a : atoms_) acc += (a - m) * (a - m);
    return std::sqrt(acc / static_cast<double>(n - 1));
  }

  /// Rank ceil(n*p), clamped to [1, n]. The tiny slack keeps exact-integer
  /// products like 0.95 * 20 from rounding up a rank due to the binary
  /// representation of p.
  static std::size_t order_rank(double p, std::size_t n) {
    double r = std::ceil(p * static_cast<double>(n) - 1e-9);
    if (r < 1.0) r = 1.0;
    if (r > static_cast<double>(n)) r = static_cast<double>(n);
    return static_cast<std::size_t>(r);
  }

 private:
  std::vector<double> atoms_;
};

}  // namespace unlinked
