#pragma once

#include <cmath>
#include <vector>

// Standard normal helpers shared across the library, plus a tabulated CDF for
// the criterion hot loop.

namespace unlinked::gauss {

inline constexpr double kLogRootTwoPi = 0.91893853320467274178032973640562;
inline constexpr double kInvRootTwoPi = 0.39894228040143267793994605993438;

inline double pdf(double t) { return kInvRootTwoPi * std::exp(-0.5 * t * t); }
inline double log_pdf(double t) { return -0.5 * t * t - kLogRootTwoPi; }

/// Exact standard normal CDF via erfc (stable in both tails).
inline double cdf(double t) { return 0.5 * std::erfc(-t * 0.70710678118654752440); }

namespace detail {

// Cubic Hermite table for the standard normal CDF on [-L, L], knot spacing
// 2^-10. Interpolation error is below 1.4e-15 in absolute terms, which keeps
// criterion values within 1e-12 of an erfc-based reference while costing a few
// ns per call instead of ~17ns for erfc. Beyond +-L the double value of the
// CDF is exactly 0 or 1 up to ~1e-18, so clamping loses nothing measurable.
class PhiTable {
 public:
  static constexpr double kHalfWidth = 8.75;
  static constexpr double kStep = 0x1.0p-10;
  static constexpr double kInvStep = 1024.0;

  static const PhiTable& instance() {
    static const PhiTable table;
    return table;
  }

  double operator()(double t) const {
    if (t <= -kHalfWidth) return 0.0;
    if (t >= kHalfWidth) return 1.0;
    const double u = (t + kHalfWidth) * kInvStep;
    const std::size_t k = static_cast<std::size_t>(u);
    const double s = u - static_cast<double>(k);
    const double* p = &tab_[2 * k];
    // Hermite basis on the unit interval; derivatives are pre-scaled by kStep.
    const double s2 = s * s;
    const double om1 = 1.0 - s;
    const double a = om1 * om1;
    const double h00 = (1.0 + 2.0 * s) * a;
    const double h10 = s * a;
    const double h01 = s2 * (3.0 - 2.0 * s);
    const double h11 = s2 * (s - 1.0);
    return h00 * p[0] + h10 * p[1] + h01 * p[2] + h11 * p[3];
  }

 private:
  PhiTable() {
    const std::size_t knots = static_cast<std::size_t>(2.0 * kHalfWidth * kInvStep) + 1;
    tab_.resize(2 * knots);
    for (std::size_t k = 0; k < knots; ++k) {
      const double t = -kHalfWidth + static_cast<double>(k) * kStep;
      tab_[2 * k] = cdf(t);
      tab_[2 * k + 1] = pdf(t) * kStep;
    }
  }

  std::vector<double> tab_;
};

}  // namespace detail

/// Tabulated standard normal CDF; max absolute error vs cdf() below 5e-15.
inline double cdf_fast(double t) { return detail::PhiTable::instance()(t); }

}  // namespace unlinked::gauss
