#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "unlinked/dataset.hpp"
#include "unlinked/rng.hpp"

namespace unlinked {

namespace detail {

// Equal-size case: mean absolute difference of order statistics. Exact.
inline double w1_equal_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

// General case: integrate |F_a - F_b| over the merged atom grid. Both CDFs
// are piecewise constant, so the integral is a finite sum. Exact.
inline double w1_merge_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double acc = 0.0;
  double prev = 0.0;
  bool started = false;
  while (i < a.size() || j < b.size()) {
    double t;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      t = a[i];
    } else {
      t = b[j];
    }
    if (started && t > prev) {
      const double fa = static_cast<double>(i) / na;
      const double fb = static_cast<double>(j) / nb;
      acc += std::abs(fa - fb) * (t - prev);
    }
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    prev = t;
    started = true;
  }
  return acc;
}

inline void check_w1_input(const std::vector<double>& v, const char* side) {
  if (v.empty()) throw std::invalid_argument(std::string("w1_empirical: empty ") + side);
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("w1_empirical: non-finite atom");
  }
}

}  // namespace detail

/// 1-Wasserstein distance between two empirical distributions. Uses the
/// order-statistic form when sizes match and the merged-CDF integral
/// otherwise; both are exact, not quadrature.
inline double w1_empirical(std::vector<double> a, std::vector<double> b) {
  detail::check_w1_input(a, "first sample");
  detail::check_w1_input(b, "second sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) return detail::w1_equal_sorted(a, b);
  return detail::w1_merge_sorted(a, b);
}

inline double w1_empirical(const EmpiricalDist& a, const EmpiricalDist& b) {
  if (a.size() == b.size()) return detail::w1_equal_sorted(a.atoms(), b.atoms());
  return detail::w1_merge_sorted(a.atoms(), b.atoms());
}

/// Distance from an empirical distribution to a reference law, approximated by
/// an m-sample draw from the reference. The draw is taken from the given
/// stream, so results are reproducible.
inline double w1_vs_reference(const EmpiricalDist& est,
                              const std::function<double(rng::Stream&)>& ref_sampler,
                              std::size_t m, rng::Stream st) {
  if (!ref_sampler) throw std::invalid_argument("w1_vs_reference: missing sampler");
  if (m == 0) throw std::invalid_argument("w1_vs_reference: m must be positive");
  std::vector<double> ref(m);
  for (std::size_t i = 0; i < m; ++i) ref[i] = ref_sampler(st);
  detail::check_w1_input(ref, "reference sample");
  std::sort(ref.begin(), ref.end());
  if (ref.size() == est.size()) return detail::w1_equal_sorted(est.atoms(), ref);
  return detail::w1_merge_sorted(est.atoms(), ref);
}

}  // namespace unlinked
