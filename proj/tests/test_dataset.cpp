#include <algorithm>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "unlinked/dataset.hpp"

using namespace unlinked;
using unlinked::rng::Stream;

TEST_CASE("design constants") {
  REQUIRE(setting_dim(Setting::a) == 2);
  REQUIRE(setting_dim(Setting::b) == 3);
  REQUIRE(setting_dim(Setting::c) == 2);
  REQUIRE(setting_dim(Setting::d) == 3);
  REQUIRE(setting_beta0(Setting::a) == std::vector<double>{3.0, -5.0});
  REQUIRE(setting_beta0(Setting::b) == std::vector<double>{-1.5, 2.0, 7.0});
  REQUIRE(setting_beta0(Setting::c) == std::vector<double>{1.0, 2.0});
  REQUIRE(setting_beta0(Setting::d) == std::vector<double>{0.5, 2.0, 3.0});
  REQUIRE(norm2(setting_beta0(Setting::a)) == Catch::Approx(std::sqrt(34.0)).epsilon(1e-15));
  REQUIRE(norm2(setting_beta0(Setting::b)) == Catch::Approx(std::sqrt(55.25)).epsilon(1e-15));
  for (auto s : {Setting::a, Setting::b, Setting::c, Setting::d})
    REQUIRE(setting_from_name(setting_name(s)) == s);
  REQUIRE_THROWS_AS(setting_from_name("e"), std::invalid_argument);
}

TEST_CASE("sample_setting shapes and determinism") {
  Dataset d1 = sample_setting(Setting::a, 50, 1.0, Stream(7u));
  REQUIRE(d1.covariates.rows() == 50);
  REQUIRE(d1.covariates.cols() == 2);
  REQUIRE(d1.responses.size() == 50);
  REQUIRE(d1.sigma == 1.0);
  REQUIRE_FALSE(d1.linked);

  Dataset d2 = sample_setting(Setting::a, 50, 1.0, Stream(7u));
  REQUIRE(d1.covariates.data() == d2.covariates.data());
  REQUIRE(d1.responses == d2.responses);

  Dataset d3 = sample_setting(Setting::a, 50, 1.0, Stream(8u));
  REQUIRE(d1.responses != d3.responses);

  REQUIRE_THROWS_AS(sample_setting(Setting::a, 0, 1.0, Stream(1u)), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_setting(Setting::a, 5, -1.0, Stream(1u)), std::invalid_argument);
}

TEST_CASE("unlinking permutes only the responses") {
  Dataset lk = sample_setting(Setting::c, 200, 0.5, Stream(11u), true);
  Dataset ul = sample_setting(Setting::c, 200, 0.5, Stream(11u), false);
  REQUIRE(lk.covariates.data() == ul.covariates.data());
  std::vector<double> a = lk.responses, b = ul.responses;
  REQUIRE(a != b);  // order destroyed
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  REQUIRE(a == b);  // same sample as a multiset
}

TEST_CASE("sigma zero gives noiseless linked responses") {
  Dataset ds = sample_setting(Setting::a, 40, 0.0, Stream(3u), true);
  std::vector<double> z = project(ds.covariates, setting_beta0(Setting::a));
  for (std::size_t i = 0; i < z.size(); ++i) REQUIRE(ds.responses[i] == z[i]);
}

TEST_CASE("design moments match their laws") {
  const std::size_t n = 200000;

  SECTION("spherical design") {
    Dataset ds = sample_setting(Setting::a, n, 1.0, Stream(101u));
    double my = 0.0, vy = 0.0;
    for (double y : ds.responses) my += y;
    my /= n;
    for (double y : ds.responses) vy += (y - my) * (y - my);
    vy /= n;
    // responses ~ N(0, 34 + 1)
    REQUIRE(my == Catch::Approx(0.0).margin(5.0 * std::sqrt(35.0 / n)));
    REQUIRE(vy == Catch::Approx(35.0).margin(1.2));
    for (std::size_t k = 0; k < 2; ++k) {
      double mx = 0.0;
      for (std::size_t i = 0; i < n; ++i) mx += ds.covariates(i, k);
      REQUIRE(mx / n == Catch::Approx(0.0).margin(5.0 / std::sqrt(static_cast<double>(n))));
    }
  }

  SECTION("gamma design") {
    Dataset ds = sample_setting(Setting::c, n, 1.0, Stream(102u));
    double m0 = 0.0, m1 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m0 += ds.covariates(i, 0);
      m1 += ds.covariates(i, 1);
    }
    m0 /= n;
    m1 /= n;
    for (std::size_t i = 0; i < n; ++i) v1 += (ds.covariates(i, 1) - m1) * (ds.covariates(i, 1) - m1);
    v1 /= n;
    REQUIRE(m0 == Catch::Approx(1.0).margin(0.02));   // Gamma(1,1)
    REQUIRE(m1 == Catch::Approx(8.0).margin(0.07));   // Gamma(2,4)
    REQUIRE(v1 == Catch::Approx(32.0).margin(0.9));
    double my = 0.0;
    for (double y : ds.responses) my += y;
    REQUIRE(my / n == Catch::Approx(17.0).margin(0.15));  // 1*1 + 2*8
  }
}

TEST_CASE("latent sampler agrees with projected covariates") {
  const std::size_t n = 100000;
  Stream st(55u);
  double m = 0.0, v = 0.0;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sample_latent(Setting::a, st);
    m += z[i];
  }
  m /= n;
  for (double t : z) v += (t - m) * (t - m);
  v /= n;
  REQUIRE(m == Catch::Approx(0.0).margin(5.0 * std::sqrt(34.0 / n)));
  REQUIRE(v == Catch::Approx(34.0).margin(1.5));

  Stream st2(56u);
  double mc = 0.0;
  for (std::size_t i = 0; i < n; ++i) mc += sample_latent(Setting::c, st2);
  REQUIRE(mc / n == Catch::Approx(17.0).margin(0.2));
}

TEST_CASE("distance to the identified set") {
  REQUIRE(dist_to_solution_set(Setting::a, {3.0, -5.0}) == 0.0);
  REQUIRE(dist_to_solution_set(Setting::a, {std::sqrt(34.0), 0.0}) ==
          Catch::Approx(0.0).margin(1e-14));
  REQUIRE(dist_to_solution_set(Setting::a, {0.0, 0.0}) ==
          Catch::Approx(std::sqrt(34.0)).epsilon(1e-15));
  REQUIRE(dist_to_solution_set(Setting::b, {0.0, 0.0, std::sqrt(55.25)}) ==
          Catch::Approx(0.0).margin(1e-14));
  REQUIRE(dist_to_solution_set(Setting::c, {1.0, 2.0}) == 0.0);
  REQUIRE(dist_to_solution_set(Setting::c, {1.0, 3.0}) == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE(dist_to_solution_set(Setting::d, {0.5, 2.0, 2.0}) == Catch::Approx(1.0).epsilon(1e-15));
  REQUIRE_THROWS_AS(dist_to_solution_set(Setting::a, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("project computes row dot products") {
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  x(1, 0) = -3.0;
  x(1, 1) = 0.5;
  std::vector<double> p = project(x, {2.0, -1.0});
  REQUIRE(p == std::vector<double>{0.0, -6.5});
}

TEST_CASE("empirical distribution basics") {
  EmpiricalDist e({2.0, 1.0, 2.0, 3.0});
  REQUIRE(e.atoms() == std::vector<double>{1.0, 2.0, 2.0, 3.0});
  REQUIRE(e.cdf(0.0) == 0.0);
  REQUIRE(e.cdf(1.0) == 0.25);
  REQUIRE(e.cdf(1.5) == 0.25);
  REQUIRE(e.cdf(2.0) == 0.75);  // ties take the maximal rank
  REQUIRE(e.cdf(2.9) == 0.75);
  REQUIRE(e.cdf(3.0) == 1.0);
  REQUIRE(e.cdf(99.0) == 1.0);
  REQUIRE(e.mean() == Catch::Approx(2.0));
  REQUIRE(e.quantile(0.2) == 1.0);
  REQUIRE(e.quantile(0.25) == 1.0);
  REQUIRE(e.quantile(0.5) == 2.0);
  REQUIRE(e.quantile(0.75) == 2.0);
  REQUIRE(e.quantile(1.0) == 3.0);
  REQUIRE_THROWS_AS(e.quantile(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(e.quantile(1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(EmpiricalDist(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("order ranks avoid representability bumps") {
  REQUIRE(EmpiricalDist::order_rank(0.95, 20) == 19);
  REQUIRE(EmpiricalDist::order_rank(0.99, 500) == 495);
  REQUIRE(EmpiricalDist::order_rank(0.025, 500) == 13);
  REQUIRE(EmpiricalDist::order_rank(0.975, 500) == 488);
  REQUIRE(EmpiricalDist::order_rank(1.0, 7) == 7);
  REQUIRE(EmpiricalDist::order_rank(1e-12, 5) == 1);
}
