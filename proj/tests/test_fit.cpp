#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "unlinked/criterion.hpp"
#include "unlinked/dataset.hpp"
#include "unlinked/fit.hpp"
#include "unlinked/rng.hpp"
#include "unlinked/wasserstein.hpp"

using namespace unlinked;

namespace {

double quad_bowl(const std::vector<double>& x) {
  // minimum 0 at (1, -2, 3), distinct curvatures per axis
  const double a = x[0] - 1.0, b = x[1] + 2.0, c = x[2] - 3.0;
  return 2.0 * a * a + 0.5 * b * b + 5.0 * c * c;
}

double rosenbrock(const std::vector<double>& x) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

double rosenbrock_grad(const std::vector<double>& x, std::vector<double>& g) {
  g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
  g[1] = 200.0 * (x[1] - x[0] * x[0]);
  return rosenbrock(x);
}

Dataset tiny_dataset(Setting setting, std::size_t n, double sigma, std::uint64_t seed) {
  return sample_setting(setting, n, sigma, rng::Stream(seed, {7, 7}));
}

}  // namespace

TEST_CASE("simplex search lands on the minimum of a separable quadratic") {
  NelderMeadOptions opt;
  opt.max_iters = 2000;
  auto res = nelder_mead(quad_bowl, {0.0, 0.0, 0.0}, opt);
  REQUIRE(res.converged);
  REQUIRE(std::fabs(res.x[0] - 1.0) < 1e-5);
  REQUIRE(std::fabs(res.x[1] + 2.0) < 1e-5);
  REQUIRE(std::fabs(res.x[2] - 3.0) < 1e-5);
  REQUIRE(res.fx < 1e-9);
}

TEST_CASE("simplex search crawls along the curved valley") {
  NelderMeadOptions opt;
  opt.max_iters = 4000;
  opt.f_tol = 1e-14;
  opt.x_tol = 1e-10;
  auto res = nelder_mead(rosenbrock, {-1.2, 1.0}, opt);
  REQUIRE(res.fx < 1e-8);
  REQUIRE(std::fabs(res.x[0] - 1.0) < 1e-3);
  REQUIRE(std::fabs(res.x[1] - 1.0) < 1e-3);
}

TEST_CASE("quasi-newton refinement converges fast on the curved valley") {
  BfgsOptions opt;
  opt.max_iters = 200;
  opt.grad_tol = 1e-10;
  auto res = bfgs_minimize(rosenbrock, rosenbrock_grad, {-1.2, 1.0}, opt);
  REQUIRE(res.converged);
  REQUIRE(std::fabs(res.x[0] - 1.0) < 1e-6);
  REQUIRE(std::fabs(res.x[1] - 1.0) < 1e-6);
  REQUIRE(res.fx < 1e-14);
}

TEST_CASE("quasi-newton refinement is exact on a quadratic after a handful of steps") {
  auto fval = [](const std::vector<double>& x) {
    return 3.0 * (x[0] - 4.0) * (x[0] - 4.0) + (x[1] + 1.0) * (x[1] + 1.0);
  };
  auto fgrad = [&fval](const std::vector<double>& x, std::vector<double>& g) {
    g[0] = 6.0 * (x[0] - 4.0);
    g[1] = 2.0 * (x[1] + 1.0);
    return fval(x);
  };
  BfgsOptions opt;
  auto res = bfgs_minimize(fval, fgrad, {0.0, 0.0}, opt);
  REQUIRE(res.converged);
  REQUIRE(res.iterations <= 20);
  REQUIRE(std::fabs(res.x[0] - 4.0) < 1e-7);
  REQUIRE(std::fabs(res.x[1] + 1.0) < 1e-7);
}

TEST_CASE("full fit recovers the signal direction on standard normal covariates") {
  const Dataset ds = tiny_dataset(Setting::a, 400, 1.0, 11);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 3;
  opt.max_iters = 200;
  const FitResult fit = fit_dlse(ctx, opt, 5);
  REQUIRE(fit.converged);
  REQUIRE(fit.warnings.empty());
  // identified up to the solution set: compare distances, not coordinates
  REQUIRE(dist_to_solution_set(Setting::a, fit.beta_hat) < 0.6);
  // the reported value must be the criterion at the reported point
  REQUIRE(fit.criterion_value == ctx.value(fit.beta_hat));
  REQUIRE(fit.evaluations > 0);
}

TEST_CASE("full fit recovers the coefficients under asymmetric covariates") {
  const Dataset ds = tiny_dataset(Setting::c, 600, 1.0, 3);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 3;
  opt.max_iters = 250;
  const FitResult fit = fit_dlse(ctx, opt, 9);
  REQUIRE(fit.converged);
  REQUIRE(dist_to_solution_set(Setting::c, fit.beta_hat) < 0.6);
}

TEST_CASE("fit result is reproducible for a fixed seed") {
  const Dataset ds = tiny_dataset(Setting::a, 200, 1.0, 21);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 2;
  opt.max_iters = 120;
  const FitResult first = fit_dlse(ctx, opt, 42);
  const FitResult second = fit_dlse(ctx, opt, 42);
  REQUIRE(first.beta_hat == second.beta_hat);
  REQUIRE(first.criterion_value == second.criterion_value);
  REQUIRE(first.iterations == second.iterations);
}

TEST_CASE("skipping the gradient polish still yields a near-optimal point") {
  const Dataset ds = tiny_dataset(Setting::a, 300, 1.0, 13);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions with, without;
  with.n_starts = 2;
  without.n_starts = 2;
  without.refine_with_gradient = false;
  const FitResult polished = fit_dlse(ctx, with, 7);
  const FitResult plain = fit_dlse(ctx, without, 7);
  REQUIRE(plain.criterion_value >= polished.criterion_value - 1e-12);
  REQUIRE(plain.criterion_value < polished.criterion_value + 1e-4);
}

TEST_CASE("degenerate designs are reported through warnings") {
  Dataset ds = tiny_dataset(Setting::a, 80, 1.0, 31);
  for (std::size_t i = 0; i < ds.covariates.rows(); ++i) ds.covariates(i, 1) = 2.5;
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 1;
  opt.max_iters = 60;
  const FitResult fit = fit_dlse(ctx, opt, 1);
  bool found = false;
  for (const auto& w : fit.warnings)
    if (w.find("column 2") != std::string::npos) found = true;
  REQUIRE(found);
}

TEST_CASE("constant responses are reported through warnings") {
  Dataset ds = tiny_dataset(Setting::a, 80, 1.0, 37);
  for (auto& y : ds.responses) y = 1.0;
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 1;
  opt.max_iters = 60;
  const FitResult fit = fit_dlse(ctx, opt, 1);
  bool found = false;
  for (const auto& w : fit.warnings)
    if (w.find("zero variance") != std::string::npos) found = true;
  REQUIRE(found);
}

TEST_CASE("fit rejects a zero start count") {
  const Dataset ds = tiny_dataset(Setting::a, 50, 1.0, 41);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  FitOptions opt;
  opt.n_starts = 0;
  REQUIRE_THROWS_AS(fit_dlse(ctx, opt, 1), std::invalid_argument);
}

TEST_CASE("fitted latent distributions tighten as the sample grows") {
  // Small-scale consistency smoke; the full-resolution decay study lives in
  // the acceptance run.
  auto median_w1 = [](std::size_t n) {
    std::vector<double> dists;
    for (std::uint64_t rep = 0; rep < 7; ++rep) {
      rng::Stream st(77, {n, rep});
      const Dataset ds = sample_setting(Setting::a, n, 1.0, st.child(0));
      CriterionContext ctx(ds, gaussian_noise(1.0));
      FitOptions opt;
      opt.n_starts = 2;
      opt.max_iters = 150;
      const FitResult fit = fit_dlse(ctx, opt, rep);
      EmpiricalDist atoms(project(ds.covariates, fit.beta_hat));
      dists.push_back(w1_vs_reference(
          atoms, [](rng::Stream& s) { return sample_latent(Setting::a, s); }, 4000,
          st.child(1)));
    }
    std::sort(dists.begin(), dists.end());
    return dists[dists.size() / 2];
  };
  const double coarse = median_w1(150);
  const double fine = median_w1(600);
  REQUIRE(fine < coarse);
}
