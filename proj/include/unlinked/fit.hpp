#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlinked/criterion.hpp"
#include "unlinked/rng.hpp"

namespace unlinked {

struct NelderMeadOptions {
  std::size_t max_iters = 1000;
  double f_tol = 1e-10;
  double x_tol = 1e-8;
  std::vector<double> steps;  ///< initial simplex offsets per coordinate
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Downhill simplex with the classic reflection/expansion/contraction/shrink
/// coefficients. Stops when the simplex is small in both value spread and
/// coordinate spread, or when the iteration budget runs out.
template <class F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0, const NelderMeadOptions& opt) {
  const std::size_t d = x0.size();
  if (d == 0) throw std::invalid_argument("nelder_mead: empty start");
  if (!opt.steps.empty() && opt.steps.size() != d)
    throw std::invalid_argument("nelder_mead: steps dimension mismatch");

  NelderMeadResult res;
  std::vector<std::vector<double>> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  for (std::size_t k = 0; k < d; ++k) {
    const double step = opt.steps.empty() ? 0.5 : opt.steps[k];
    xs[k + 1][k] += (step != 0.0 ? step : 0.5);
  }
  for (std::size_t v = 0; v <= d; ++v) {
    fs[v] = f(xs[v]);
    ++res.evaluations;
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  std::vector<std::size_t> order(d + 1);

  for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
    for (std::size_t v = 0; v <= d; ++v) order[v] = v;
    std::sort(order.begin(), order.end(),
              [&fs](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order[0], worst = order[d], second = order[d - 1];

    const double fspread = fs[worst] - fs[best];
    double xspread = 0.0, xmag = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      xmag = std::max(xmag, std::abs(xs[best][k]));
      for (std::size_t v = 0; v <= d; ++v)
        xspread = std::max(xspread, std::abs(xs[v][k] - xs[best][k]));
    }
    if (fspread <= opt.f_tol * (1.0 + std::abs(fs[best])) ||
        xspread <= opt.x_tol * (1.0 + xmag)) {
      res.converged = true;
      break;
    }

    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t v = 0; v <= d; ++v)
        if (v != worst) acc += xs[v][k];
      centroid[k] = acc / static_cast<double>(d);
    }

    for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + alpha * (centroid[k] - xs[worst][k]);
    const double fr = f(xr);
    ++res.evaluations;

    if (fr < fs[best]) {
      for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + gamma * (xr[k] - centroid[k]);
      const double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    // contraction toward the better of the worst vertex and the reflection
    const bool outside = fr < fs[worst];
    const std::vector<double>& towards = outside ? xr : xs[worst];
    for (std::size_t k = 0; k < d; ++k) xc[k] = centroid[k] + rho * (towards[k] - centroid[k]);
    const double fc = f(xc);
    ++res.evaluations;
    if (fc < (outside ? fr : fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (std::size_t v = 0; v <= d; ++v) {
      if (v == best) continue;
      for (std::size_t k = 0; k < d; ++k)
        xs[v][k] = xs[best][k] + shrink * (xs[v][k] - xs[best][k]);
      fs[v] = f(xs[v]);
      ++res.evaluations;
    }
  }

  std::size_t best = 0;
  for (std::size_t v = 1; v <= d; ++v)
    if (fs[v] < fs[best]) best = v;
  res.x = xs[best];
  res.fx = fs[best];
  return res;
}

struct BfgsOptions {
  std::size_t max_iters = 120;
  double grad_tol = 1e-9;    ///< max-norm of the gradient
  double f_tol = 1e-14;      ///< relative decrease below which we stop
};

struct BfgsResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton minimizer with an inverse-Hessian BFGS update and Armijo
/// backtracking. Takes separate value and value+gradient callables so line
/// search trials stay cheap.
template <class FVal, class FGrad>
BfgsResult bfgs_minimize(FVal&& fval, FGrad&& fgrad, const std::vector<double>& x0,
                         const BfgsOptions& opt) {
  const std::size_t d = x0.size();
  if (d == 0) throw std::invalid_argument("bfgs_minimize: empty start");

  BfgsResult res;
  std::vector<double> x = x0, g(d), g_new(d), p(d), s(d), yv(d), xt(d), hg(d);
  std::vector<double> h(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) h[k * d + k] = 1.0;

  double fx = fgrad(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx)) throw std::runtime_error("bfgs_minimize: non-finite value at start");
  bool scaled = false;

  auto max_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double t : v) m = std::max(m, std::abs(t));
    return m;
  };

  for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
    res.grad_norm = max_norm(g);
    if (res.grad_norm <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    double gp = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += h[i * d + j] * g[j];
      p[i] = -acc;
      gp += p[i] * g[i];
    }
    if (!(gp < 0.0)) {
      // curvature information went bad; restart from steepest descent
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k) h[k * d + k] = 1.0;
      gp = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        p[k] = -g[k];
        gp += p[k] * g[k];
      }
      if (gp == 0.0) {
        res.converged = true;
        break;
      }
    }

    double t = 1.0;
    double ft = fx;
    bool improved = false;
    for (int trial = 0; trial < 40; ++trial) {
      for (std::size_t k = 0; k < d; ++k) xt[k] = x[k] + t * p[k];
      ft = fval(xt);
      ++res.evaluations;
      if (std::isfinite(ft) && ft <= fx + 1e-4 * t * gp) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;  // step has collapsed; gradient verdict decides convergence

    const double f_prev = fx;
    fx = fgrad(xt, g_new);
    ++res.evaluations;
    for (std::size_t k = 0; k < d; ++k) {
      s[k] = xt[k] - x[k];
      yv[k] = g_new[k] - g[k];
    }
    x = xt;
    g = g_new;

    double sy = 0.0, yy = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      sy += s[k] * yv[k];
      yy += yv[k] * yv[k];
      ss += s[k] * s[k];
    }
    if (sy > 1e-12 * std::sqrt(yy * ss) && yy > 0.0) {
      if (!scaled) {
        const double c = sy / yy;
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t k = 0; k < d; ++k) h[k * d + k] = c;
        scaled = true;
      }
      // H <- (I - r s y') H (I - r y s') + r s s'
      const double r = 1.0 / sy;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += h[i * d + j] * yv[j];
        hg[i] = acc;
      }
      double yhy = 0.0;
      for (std::size_t k = 0; k < d; ++k) yhy += yv[k] * hg[k];
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          h[i * d + j] += -r * (s[i] * hg[j] + hg[i] * s[j]) + r * (1.0 + r * yhy) * s[i] * s[j];
        }
      }
    }

    if (std::abs(f_prev - fx) <= opt.f_tol * (1.0 + std::abs(fx))) {
      res.grad_norm = max_norm(g);
      res.converged = res.grad_norm <= 1e3 * opt.grad_tol;
      break;
    }
  }

  res.x = x;
  res.fx = fx;
  res.grad_norm = max_norm(g);
  if (res.grad_norm <= opt.grad_tol) res.converged = true;
  return res;
}

struct FitOptions {
  std::size_t n_starts = 8;
  std::size_t max_iters = 0;  ///< simplex iteration budget; 0 means 500 * dim
  double f_tol = 1e-10;
  double x_tol = 1e-8;
  bool refine_with_gradient = true;
  double init_scale = 0.0;  ///< norm scale for starts; 0 means moment-matched
};

struct FitResult {
  std::vector<double> beta_hat;
  double criterion_value = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double column_sd(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x(i, k);
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = x(i, k) - mean;
    acc += c * c;
  }
  return n > 1 ? std::sqrt(acc / static_cast<double>(n - 1)) : 0.0;
}

inline double sample_variance(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double t : v) mean += t;
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (double t : v) acc += (t - mean) * (t - mean);
  return acc / static_cast<double>(n - 1);
}

}  // namespace detail

/// Minimize the least-squares contrast over coefficient vectors.
///
/// Strategy: moment-matched starting norm (variance of Y minus the noise
/// variance, floored), several start directions, a coarse simplex pass on each
/// start, a full-tolerance simplex pass from the best start, then an optional
/// quasi-Newton polish with the analytic gradient. The same (data, options,
/// seed) triple always produces the same result.
inline FitResult fit_dlse(const CriterionContext& ctx, const FitOptions& opt = {},
                          std::uint64_t seed = 0) {
  const std::size_t d = ctx.dim();
  const std::size_t max_iters = opt.max_iters > 0 ? opt.max_iters : 500 * d;
  if (opt.n_starts == 0) throw std::invalid_argument("fit_dlse: n_starts must be positive");

  FitResult out;

  // data pathologies worth surfacing but not fatal
  std::vector<double> col_sd(d);
  for (std::size_t k = 0; k < d; ++k) {
    col_sd[k] = detail::column_sd(ctx.covariates(), k);
    if (col_sd[k] == 0.0)
      out.warnings.push_back("covariate column " + std::to_string(k + 1) + " is constant");
  }
  const double var_y = detail::sample_variance(ctx.sorted_responses());
  if (var_y == 0.0) out.warnings.push_back("responses have zero variance");

  const double sigma = ctx.noise().sigma;
  double scale = opt.init_scale;
  if (!(scale > 0.0)) {
    const double explained = std::max(var_y - sigma * sigma, 0.01 * var_y);
    scale = explained > 0.0 ? std::sqrt(explained) : 1.0;
  }

  std::vector<double> inv_sd(d);
  for (std::size_t k = 0; k < d; ++k) inv_sd[k] = col_sd[k] > 0.0 ? 1.0 / col_sd[k] : 1.0;

  // start directions: one deterministic, the rest uniform on the sphere
  rng::Stream st(seed, {0x666974ULL});
  std::vector<std::vector<double>> starts;
  starts.reserve(opt.n_starts);
  {
    std::vector<double> u(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> b(d);
    for (std::size_t k = 0; k < d; ++k) b[k] = scale * u[k] * inv_sd[k];
    starts.push_back(std::move(b));
  }
  while (starts.size() < opt.n_starts) {
    std::vector<double> u(d);
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        u[k] = st.normal();
        nrm += u[k] * u[k];
      }
      nrm = std::sqrt(nrm);
    } while (nrm < 1e-12);
    std::vector<double> b(d);
    for (std::size_t k = 0; k < d; ++k) b[k] = scale * (u[k] / nrm) * inv_sd[k];
    starts.push_back(std::move(b));
  }

  std::size_t evals = 0;
  auto value = [&ctx, &evals](const std::vector<double>& beta) {
    ++evals;
    return ctx.value(beta);
  };

  // coarse pass on every start
  NelderMeadOptions coarse;
  coarse.max_iters = std::max<std::size_t>(30, max_iters / 8);
  coarse.f_tol = std::max(opt.f_tol * 100.0, 1e-9);
  coarse.x_tol = std::max(opt.x_tol * 100.0, 1e-6);
  coarse.steps.resize(d);
  for (std::size_t k = 0; k < d; ++k) coarse.steps[k] = 0.25 * scale * inv_sd[k];

  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::size_t iters = 0;
  for (const auto& x0 : starts) {
    NelderMeadResult r = nelder_mead(value, x0, coarse);
    iters += r.iterations;
    if (!std::isfinite(r.fx)) throw std::runtime_error("fit_dlse: non-finite criterion value");
    if (r.fx < best_f) {
      best_f = r.fx;
      best_x = r.x;
    }
  }

  // full-tolerance pass from the winner
  NelderMeadOptions fine;
  fine.max_iters = max_iters;
  fine.f_tol = opt.f_tol;
  fine.x_tol = opt.x_tol;
  fine.steps.resize(d);
  for (std::size_t k = 0; k < d; ++k) fine.steps[k] = 0.05 * scale * inv_sd[k];
  NelderMeadResult fine_res = nelder_mead(value, best_x, fine);
  iters += fine_res.iterations;
  bool converged = fine_res.converged;
  best_x = fine_res.x;
  best_f = fine_res.fx;

  if (opt.refine_with_gradient) {
    auto vgrad = [&ctx, &evals](const std::vector<double>& beta, std::vector<double>& g) {
      ++evals;
      return ctx.value_and_gradient(beta, g);
    };
    BfgsOptions bopt;
    bopt.max_iters = 120;
    bopt.grad_tol = 1e-9;
    BfgsResult b = bfgs_minimize(value, vgrad, best_x, bopt);
    iters += b.iterations;
    if (b.fx <= best_f) {
      best_x = b.x;
      best_f = b.fx;
    }
    converged = converged || b.converged;
  }

  out.beta_hat = best_x;
  out.criterion_value = ctx.value(out.beta_hat);
  out.converged = converged;
  out.iterations = iters;
  out.evaluations = evals + 1;  // the final exact recomputation
  if (!std::isfinite(out.criterion_value))
    throw std::runtime_error("fit_dlse: non-finite criterion value");
  return out;
}

}  // namespace unlinked
