#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "unlinked/criterion.hpp"
#include "unlinked/dataset.hpp"
#include "unlinked/gauss.hpp"
#include "unlinked/noise.hpp"

using namespace unlinked;
using unlinked::rng::Stream;

namespace {

// Reference implementation: plain double loop over the data in its original
// order, using the exact erfc-based CDF. Deliberately ignorant of the sorted
// windowed path used by CriterionContext.
double oracle_value(const Dataset& ds, const NoiseModel& noise, const std::vector<double>& beta) {
  const std::size_t n = ds.responses.size();
  std::vector<double> fhat = ecdf_at(ds.responses);
  std::vector<double> v = project(ds.covariates, beta);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += noise.cdf(ds.responses[j] - v[i]);
    const double r = fhat[j] - c / static_cast<double>(n);
    acc += r * r;
  }
  return acc / static_cast<double>(n);
}

Dataset tiny_dataset(std::vector<std::vector<double>> rows, std::vector<double> ys, double sigma) {
  Dataset ds;
  ds.covariates = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) ds.covariates(i, k) = rows[i][k];
  ds.responses = std::move(ys);
  ds.sigma = sigma;
  ds.linked = false;
  return ds;
}

}  // namespace

TEST_CASE("tabulated normal CDF matches erfc to near machine precision") {
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> u(-9.5, 9.5);
  double worst = 0.0;
  for (int i = 0; i < 2000000; ++i) {
    const double t = u(gen);
    worst = std::max(worst, std::abs(gauss::cdf_fast(t) - gauss::cdf(t)));
  }
  REQUIRE(worst < 5e-15);
  REQUIRE(gauss::cdf_fast(-12.0) == 0.0);
  REQUIRE(gauss::cdf_fast(12.0) == 1.0);
}

TEST_CASE("single observation criterion has a closed form") {
  Dataset ds = tiny_dataset({{1.0}}, {0.0}, 1.0);
  CriterionContext ctx(ds, gaussian_noise(1.0));
  // ECDF at the only point is 1, model CDF is Phi(-beta), so the value is
  // (1 - Phi(-beta))^2 and the gradient is 2(1 - Phi(-beta)) phi(-beta).
  REQUIRE(ctx.value({0.0}) == Catch::Approx(0.25).margin(1e-14));
  std::vector<double> g;
  const double val = ctx.value_and_gradient({0.0}, g);
  REQUIRE(val == Catch::Approx(0.25).margin(1e-14));
  REQUIRE(g.size() == 1);
  REQUIRE(g[0] == Catch::Approx(2.0 * 0.5 * gauss::pdf(0.0)).margin(1e-13));

  const double b = 1.3;
  const double phi = gauss::cdf(-b);
  REQUIRE(ctx.value({b}) == Catch::Approx((1.0 - phi) * (1.0 - phi)).margin(1e-13));
}

TEST_CASE("windowed path agrees with the double-loop reference") {
  NoiseModel noise = gaussian_noise(1.0);

  SECTION("hand-sized data") {
    Dataset ds = tiny_dataset({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}, {0.2, -0.4, 1.1}, 1.0);
    CriterionContext ctx(ds, noise);
    for (auto beta : {std::vector<double>{0.0, 0.0}, {1.0, -1.0}, {0.3, 0.7}, {5.0, 5.0}}) {
      REQUIRE(ctx.value(beta) == Catch::Approx(oracle_value(ds, noise, beta)).margin(1e-12));
    }
  }

  SECTION("random data, random coefficients") {
    Dataset ds = sample_setting(Setting::a, 200, 1.0, Stream(17u));
    CriterionContext ctx(ds, noise);
    Stream st(18u);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> beta{8.0 * st.normal(), 8.0 * st.normal()};
      REQUIRE(ctx.value(beta) == Catch::Approx(oracle_value(ds, noise, beta)).margin(1e-12));
    }
  }

  SECTION("small noise scale forces heavy saturation") {
    Dataset ds = sample_setting(Setting::a, 100, 0.05, Stream(19u));
    NoiseModel tight = gaussian_noise(0.05);
    CriterionContext ctx(ds, tight);
    Stream st(20u);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> beta{6.0 * st.normal(), 6.0 * st.normal()};
      REQUIRE(ctx.value(beta) == Catch::Approx(oracle_value(ds, tight, beta)).margin(1e-12));
    }
  }

  SECTION("tied responses") {
    Dataset ds = tiny_dataset({{1.0}, {2.0}, {-1.0}, {0.5}}, {1.0, 1.0, -0.5, 1.0}, 1.0);
    CriterionContext ctx(ds, noise);
    for (double b : {0.0, 0.4, -1.2}) {
      REQUIRE(ctx.value({b}) == Catch::Approx(oracle_value(ds, noise, {b})).margin(1e-12));
    }
  }
}

TEST_CASE("criterion ignores response order") {
  Dataset ds = sample_setting(Setting::a, 64, 1.0, Stream(23u));
  CriterionContext c1(ds, gaussian_noise(1.0));
  Dataset shuffled = ds;
  Stream sp(24u);
  rng::shuffle(shuffled.responses, sp);
  CriterionContext c2(shuffled, gaussian_noise(1.0));
  const std::vector<double> beta{2.0, -4.0};
  REQUIRE(c1.value(beta) == c2.value(beta));
}

TEST_CASE("custom noise goes through the generic path and agrees") {
  NoiseModel exact = gaussian_noise(0.8);
  NoiseModel generic = custom_noise([exact](double e) { return exact.pdf(e); },
                                    [exact](double e) { return exact.cdf(e); }, 0.8);
  REQUIRE(generic.family == NoiseModel::Family::custom);
  Dataset ds = sample_setting(Setting::a, 120, 0.8, Stream(29u));
  CriterionContext fast(ds, exact);
  CriterionContext slow(ds, generic);
  Stream st(30u);
  for (int t = 0; t < 8; ++t) {
    std::vector<double> beta{7.0 * st.normal(), 7.0 * st.normal()};
    REQUIRE(fast.value(beta) == Catch::Approx(slow.value(beta)).margin(1e-12));
    std::vector<double> ga, gb;
    fast.value_and_gradient(beta, ga);
    slow.value_and_gradient(beta, gb);
    for (std::size_t k = 0; k < 2; ++k) REQUIRE(ga[k] == Catch::Approx(gb[k]).margin(1e-12));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const double h = 1e-5;
  for (std::size_t n : {std::size_t{3}, std::size_t{50}, std::size_t{200}}) {
    Dataset ds = sample_setting(Setting::a, n, 1.0, Stream(40u + n));
    CriterionContext ctx(ds, gaussian_noise(1.0));
    Stream st(50u + n);
    for (int t = 0; t < 7; ++t) {
      std::vector<double> beta{6.0 * st.normal(), 6.0 * st.normal()};
      std::vector<double> g;
      ctx.value_and_gradient(beta, g);
      double gmax = std::max(std::abs(g[0]), std::abs(g[1]));
      double err = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> bp = beta, bm = beta;
        bp[k] += h;
        bm[k] -= h;
        const double fd = (ctx.value(bp) - ctx.value(bm)) / (2.0 * h);
        err = std::max(err, std::abs(fd - g[k]));
      }
      REQUIRE(err / std::max(gmax, 1e-12) < 1e-5);
    }
  }
}

TEST_CASE("convolution CDF basics") {
  NoiseModel noise = gaussian_noise(1.0);
  // symmetric atoms: the mixture CDF at the midpoint is exactly one half
  REQUIRE(conv_cdf(0.0, {-1.0, 1.0}, noise) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(conv_cdf(-50.0, {-1.0, 1.0}, noise) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(conv_cdf(50.0, {-1.0, 1.0}, noise) == Catch::Approx(1.0).margin(1e-15));
  double prev = -1.0;
  for (double y = -6.0; y <= 6.0; y += 0.25) {
    const double c = conv_cdf(y, {-1.0, 0.3, 1.0}, noise);
    REQUIRE(c >= prev);
    prev = c;
  }
}

TEST_CASE("criterion input validation") {
  Dataset ds = sample_setting(Setting::a, 10, 1.0, Stream(60u));
  CriterionContext ctx(ds, gaussian_noise(1.0));
  REQUIRE_THROWS_AS(ctx.value({1.0}), std::invalid_argument);  // wrong dimension
  REQUIRE_THROWS_AS(ctx.value({std::numeric_limits<double>::infinity(), 0.0}),
                    std::runtime_error);

  Dataset bad = ds;
  bad.responses.pop_back();
  REQUIRE_THROWS_AS(CriterionContext(bad, gaussian_noise(1.0)), std::invalid_argument);

  NoiseModel no_pdf;
  no_pdf.cdf = [](double) { return 0.5; };
  no_pdf.sigma = 1.0;
  REQUIRE_THROWS_AS(CriterionContext(ds, no_pdf), std::invalid_argument);
}

TEST_CASE("ecdf_at uses weak inequality on ties") {
  std::vector<double> f = ecdf_at({1.0, 2.0, 2.0, 3.0});
  REQUIRE(f == std::vector<double>{0.25, 0.75, 0.75, 1.0});
}
