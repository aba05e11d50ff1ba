#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlinked/conditional.hpp"
#include "unlinked/criterion.hpp"
#include "unlinked/dataset.hpp"
#include "unlinked/density.hpp"
#include "unlinked/fit.hpp"
#include "unlinked/noise.hpp"
#include "unlinked/parallel.hpp"
#include "unlinked/rng.hpp"
#include "unlinked/wasserstein.hpp"

namespace unlinked {

// Stream tags keep the three study kinds on disjoint random streams even when
// they share a master seed.
inline constexpr std::uint64_t kTagRate = 1;
inline constexpr std::uint64_t kTagComparison = 2;
inline constexpr std::uint64_t kTagGrid = 3;

enum class StudyScale { desk, paper };

struct ExperimentConfig {
  Setting setting = Setting::a;
  std::vector<std::size_t> n_list;
  std::vector<double> sigma2_list;  // only used by the noise-variance grid
  std::size_t reps = 50;
  std::size_t test_size = 100;        // conditional test pairs per replication
  std::size_t reference_size = 100000;  // latent draws for the transport reference
  double alpha = 0.05;
  double sigma = 1.0;
  std::uint64_t master_seed = 1;
  FyVariant fy = FyVariant::integrated;
  double bandwidth = 0.0;  // 0 lets each replication pick its own from the fit
  unsigned threads = 0;    // 0 picks hardware concurrency
  FitOptions fit;
  double max_failure_rate = 0.01;
};

namespace detail {

// Multi-start budget tuned for batch runs: a pair of starts plus the gradient
// polish recovers the optimum reliably at a fraction of the default cost.
inline FitOptions batch_fit_options() {
  FitOptions opt;
  opt.n_starts = 2;
  opt.max_iters = 160;
  return opt;
}

}  // namespace detail

inline ExperimentConfig default_rate_config(Setting setting, StudyScale scale) {
  ExperimentConfig cfg;
  cfg.setting = setting;
  cfg.fit = detail::batch_fit_options();
  if (scale == StudyScale::desk) {
    cfg.n_list = {500, 1000, 2000, 4000};
    cfg.reps = 50;
    cfg.reference_size = 100000;
  } else {
    cfg.n_list = {1000, 2000, 3000, 4000, 5000};
    cfg.reps = 500;
    cfg.reference_size = 1000000;
  }
  return cfg;
}

inline ExperimentConfig default_comparison_config(Setting setting, StudyScale scale) {
  ExperimentConfig cfg;
  cfg.setting = setting;
  cfg.fit = detail::batch_fit_options();
  cfg.reps = 100;
  cfg.test_size = 100;
  if (scale == StudyScale::desk) {
    cfg.n_list = {500};
  } else {
    cfg.n_list = {500, 1000, 2000};
  }
  return cfg;
}

inline ExperimentConfig default_mse_grid_config(Setting setting, StudyScale scale) {
  ExperimentConfig cfg;
  cfg.setting = setting;
  cfg.fit = detail::batch_fit_options();
  cfg.reps = 100;
  cfg.test_size = 100;
  cfg.sigma2_list = {0.5, 1.0, 1.5, 2.0, 2.5};
  if (scale == StudyScale::desk) {
    cfg.n_list = {500};
  } else {
    cfg.n_list = {500, 1000, 2000};
  }
  return cfg;
}

/// Least-squares slope of log(y) on log(x). Demands positive inputs because a
/// decay exponent only makes sense for positive statistics.
inline double loglinear_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("slope inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("slope inputs must be positive");
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  if (!(std::fabs(denom) > 0.0)) throw std::invalid_argument("slope inputs are collinear");
  return (m * sxy - sx * sy) / denom;
}

// One transport-distance statistic vector per sample size, plus the fitted
// decay exponents. stats rows follow rate_stat_names() order.
struct RateStudyResult {
  Setting setting = Setting::a;
  std::vector<std::size_t> n_list;
  std::vector<std::array<double, 4>> stats;  // [n_idx][stat]
  std::array<double, 4> slopes{};
  std::vector<std::vector<double>> raw;  // [n_idx][rep], NaN where the fit failed
  std::size_t failed = 0;
};

inline const std::array<const char*, 4>& rate_stat_names() {
  static const std::array<const char*, 4> names = {"w1_mean", "w1_sq_mean", "w1_cube_mean",
                                                   "w1_q99"};
  return names;
}

/// Transport distances between the fitted latent distribution and a large
/// reference draw from the true latent law, for replications [rep_begin,
/// rep_end) at sample size n. Failed fits yield NaN so that slots stay aligned
/// with replication indices regardless of how work is split across threads.
inline std::vector<double> rate_study_values(const ExperimentConfig& cfg, std::size_t n,
                                             std::size_t rep_begin, std::size_t rep_end) {
  if (rep_end < rep_begin) throw std::invalid_argument("bad replication range");
  std::vector<double> out(rep_end - rep_begin,
                          std::numeric_limits<double>::quiet_NaN());
  const auto setting_idx = static_cast<std::uint64_t>(cfg.setting);
  const NoiseModel noise = gaussian_noise(cfg.sigma);
  parallel_for(rep_begin, rep_end, cfg.threads, [&](std::size_t rep) {
    rng::Stream st(cfg.master_seed,
                   {kTagRate, setting_idx, static_cast<std::uint64_t>(n), rep});
    try {
      const Dataset ds = sample_setting(cfg.setting, n, cfg.sigma, st.child(0));
      CriterionContext ctx(ds, noise);
      const FitResult fit = fit_dlse(ctx, cfg.fit, st.child(1).key());
      EmpiricalDist atoms(project(ds.covariates, fit.beta_hat));
      const Setting setting = cfg.setting;
      const double w1 = w1_vs_reference(
          atoms, [setting](rng::Stream& s) { return sample_latent(setting, s); },
          cfg.reference_size, st.child(2));
      out[rep - rep_begin] = w1;
    } catch (const std::runtime_error&) {
      // slot stays NaN; the aggregate step counts it as a failure
    }
  });
  return out;
}

inline RateStudyResult rate_study_aggregate(const ExperimentConfig& cfg,
                                            std::vector<std::vector<double>> raw) {
  if (raw.size() != cfg.n_list.size())
    throw std::invalid_argument("one raw vector per sample size expected");
  RateStudyResult res;
  res.setting = cfg.setting;
  res.n_list = cfg.n_list;
  res.raw = std::move(raw);
  std::size_t total = 0;
  for (const auto& values : res.raw) {
    std::vector<double> ok;
    ok.reserve(values.size());
    for (double v : values) {
      if (std::isnan(v)) {
        ++res.failed;
      } else {
        ok.push_back(v);
      }
    }
    total += values.size();
    if (ok.empty()) throw std::runtime_error("every replication failed at one sample size");
    double m1 = 0, m2 = 0, m3 = 0;
    for (double v : ok) {
      m1 += v;
      m2 += v * v;
      m3 += v * v * v;
    }
    const double j = static_cast<double>(ok.size());
    std::sort(ok.begin(), ok.end());
    const double q99 = ok[EmpiricalDist::order_rank(0.99, ok.size()) - 1];
    res.stats.push_back({m1 / j, m2 / j, m3 / j, q99});
  }
  if (total > 0 &&
      static_cast<double>(res.failed) > cfg.max_failure_rate * static_cast<double>(total))
    throw std::runtime_error("failure rate exceeded the configured limit");
  std::vector<double> xs(res.n_list.begin(), res.n_list.end());
  for (std::size_t s = 0; s < 4; ++s) {
    std::vector<double> ys;
    ys.reserve(res.stats.size());
    for (const auto& row : res.stats) ys.push_back(row[s]);
    res.slopes[s] = loglinear_slope(xs, ys);
  }
  return res;
}

inline RateStudyResult run_rate_study(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty()) throw std::invalid_argument("empty sample size list");
  std::vector<std::vector<double>> raw;
  raw.reserve(cfg.n_list.size());
  for (std::size_t n : cfg.n_list) raw.push_back(rate_study_values(cfg, n, 0, cfg.reps));
  return rate_study_aggregate(cfg, std::move(raw));
}

// Per-replication tallies for the conditional-versus-unconditional comparison.
// Squared errors and interval hits are summed over the replication's test
// pairs; aggregation divides by the grand total.
struct ComparisonRecord {
  double se_cond_mean = 0;
  double se_cond_mode = 0;
  double se_unc_mean = 0;
  double se_unc_mode = 0;
  double len_cond = 0;
  double len_unc = 0;  // interval length, constant within a replication
  std::size_t covered_cond = 0;
  std::size_t covered_unc = 0;
  std::size_t tested = 0;
  std::size_t flagged = 0;  // test pairs whose response fell outside the support
  bool failed = false;
};

/// One replication: fit on a fresh sample, build the latent density and its
/// conditionals, then score predictions of fresh latent draws from their
/// responses. The stream should already be scoped to this replication.
inline ComparisonRecord comparison_rep(const ExperimentConfig& cfg, std::size_t n, double sigma,
                                       rng::Stream st) {
  ComparisonRecord rec;
  const NoiseModel noise = gaussian_noise(sigma);
  try {
    const Dataset ds = sample_setting(cfg.setting, n, sigma, st.child(0));
    CriterionContext ctx(ds, noise);
    const FitResult fit = fit_dlse(ctx, cfg.fit, st.child(1).key());
    EmpiricalDist atoms(project(ds.covariates, fit.beta_hat));
    const double h = cfg.bandwidth > 0.0 ? cfg.bandwidth : default_bandwidth(atoms.atoms());
    const DensityEstimate fz = kde(atoms, KernelSpec{KernelSpec::Type::gaussian, h});
    const UnconditionalBaselines base = unconditional_baselines(atoms, fz, cfg.alpha);
    rec.len_unc = base.interval.length();

    rng::Stream test_stream = st.child(2);
    for (std::size_t t = 0; t < cfg.test_size; ++t) {
      const double z = sample_latent(cfg.setting, test_stream);
      const double y = z + sigma * test_stream.normal();
      double cm = 0, cmode = 0;
      Interval ci{0, 0};
      try {
        ConditionalDensity cd = conditional_density(fz, noise, y, cfg.fy);
        cm = cond_mean(cd);
        cmode = cond_mode(cd);
        ci = credible_interval(cd, cfg.alpha);
      } catch (const std::runtime_error&) {
        ++rec.flagged;
        continue;
      }
      ++rec.tested;
      rec.se_cond_mean += (cm - z) * (cm - z);
      rec.se_cond_mode += (cmode - z) * (cmode - z);
      rec.se_unc_mean += (base.mean - z) * (base.mean - z);
      rec.se_unc_mode += (base.mode - z) * (base.mode - z);
      rec.len_cond += ci.length();
      if (ci.contains(z)) ++rec.covered_cond;
      if (base.interval.contains(z)) ++rec.covered_unc;
    }
  } catch (const std::runtime_error&) {
    rec.failed = true;
  }
  return rec;
}

struct ComparisonCell {
  std::size_t n = 0;
  double sigma2 = 0;
  double mse_cond_mean = 0;
  double mse_cond_mode = 0;
  double mse_unc_mean = 0;
  double mse_unc_mode = 0;
  double ratio_mean = 0;  // conditional over unconditional, same estimator family
  double ratio_mode = 0;
  double coverage_cond = 0;
  double coverage_unc = 0;
  double len_cond = 0;
  double len_unc = 0;
  double len_ratio = 0;
  std::size_t flagged = 0;
  std::size_t failed = 0;
};

inline ComparisonCell comparison_aggregate(std::size_t n, double sigma2,
                                           const std::vector<ComparisonRecord>& records) {
  ComparisonCell cell;
  cell.n = n;
  cell.sigma2 = sigma2;
  double total = 0;
  for (const auto& rec : records) {
    if (rec.failed) {
      ++cell.failed;
      continue;
    }
    cell.flagged += rec.flagged;
    total += static_cast<double>(rec.tested);
    cell.mse_cond_mean += rec.se_cond_mean;
    cell.mse_cond_mode += rec.se_cond_mode;
    cell.mse_unc_mean += rec.se_unc_mean;
    cell.mse_unc_mode += rec.se_unc_mode;
    cell.coverage_cond += static_cast<double>(rec.covered_cond);
    cell.coverage_unc += static_cast<double>(rec.covered_unc);
    cell.len_cond += rec.len_cond;
    cell.len_unc += rec.len_unc * static_cast<double>(rec.tested);
  }
  if (!(total > 0)) throw std::runtime_error("no usable test pairs in any replication");
  cell.mse_cond_mean /= total;
  cell.mse_cond_mode /= total;
  cell.mse_unc_mean /= total;
  cell.mse_unc_mode /= total;
  cell.coverage_cond /= total;
  cell.coverage_unc /= total;
  cell.len_cond /= total;
  cell.len_unc /= total;
  cell.ratio_mean = cell.mse_cond_mean / cell.mse_unc_mean;
  cell.ratio_mode = cell.mse_cond_mode / cell.mse_unc_mode;
  cell.len_ratio = cell.len_cond / cell.len_unc;
  return cell;
}

struct ComparisonResult {
  Setting setting = Setting::a;
  std::vector<ComparisonCell> cells;  // one per sample size
};

namespace detail {

inline void check_failures(const ExperimentConfig& cfg, const std::vector<ComparisonRecord>& recs) {
  std::size_t failed = 0;
  for (const auto& r : recs)
    if (r.failed) ++failed;
  if (static_cast<double>(failed) > cfg.max_failure_rate * static_cast<double>(recs.size()))
    throw std::runtime_error("failure rate exceeded the configured limit");
}

}  // namespace detail

inline ComparisonResult run_comparison(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty()) throw std::invalid_argument("empty sample size list");
  ComparisonResult res;
  res.setting = cfg.setting;
  const auto setting_idx = static_cast<std::uint64_t>(cfg.setting);
  for (std::size_t n : cfg.n_list) {
    std::vector<ComparisonRecord> records(cfg.reps);
    parallel_for(0, cfg.reps, cfg.threads, [&](std::size_t rep) {
      rng::Stream st(cfg.master_seed,
                     {kTagComparison, setting_idx, static_cast<std::uint64_t>(n), rep});
      records[rep] = comparison_rep(cfg, n, cfg.sigma, std::move(st));
    });
    detail::check_failures(cfg, records);
    res.cells.push_back(comparison_aggregate(n, cfg.sigma * cfg.sigma, records));
  }
  return res;
}

struct MseGridResult {
  Setting setting = Setting::a;
  std::vector<ComparisonCell> cells;  // sample-size major, then noise variance
};

inline MseGridResult run_mse_grid(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty()) throw std::invalid_argument("empty sample size list");
  if (cfg.sigma2_list.empty()) throw std::invalid_argument("empty noise variance list");
  MseGridResult res;
  res.setting = cfg.setting;
  const auto setting_idx = static_cast<std::uint64_t>(cfg.setting);
  for (std::size_t n : cfg.n_list) {
    for (std::size_t s = 0; s < cfg.sigma2_list.size(); ++s) {
      const double sigma2 = cfg.sigma2_list[s];
      if (!(sigma2 > 0)) throw std::invalid_argument("noise variances must be positive");
      const double sigma = std::sqrt(sigma2);
      std::vector<ComparisonRecord> records(cfg.reps);
      parallel_for(0, cfg.reps, cfg.threads, [&](std::size_t rep) {
        rng::Stream st(cfg.master_seed, {kTagGrid, setting_idx, static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(s), rep});
        records[rep] = comparison_rep(cfg, n, sigma, std::move(st));
      });
      detail::check_failures(cfg, records);
      res.cells.push_back(comparison_aggregate(n, sigma2, records));
    }
  }
  return res;
}

}  // namespace unlinked
