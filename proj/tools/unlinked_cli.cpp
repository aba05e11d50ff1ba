// Command line front end: dataset generation, coefficient fitting, conditional
// inference, and batch Monte Carlo studies with CSV/SVG/JSON outputs.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unlinked/unlinked.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace unlinked;

namespace {

constexpr std::uint64_t kTagGen = 0x67656e;

struct GenArgs {
  std::string setting = "a";
  std::size_t n = 0;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  bool linked = false;
  std::string out;
  std::string latent;
};

int run_gen(const GenArgs& a) {
  const Setting setting = setting_from_name(a.setting);
  const Dataset ds =
      sample_setting(setting, a.n, a.sigma, rng::Stream(a.seed, {kTagGen}), a.linked);
  save_dataset(a.out, ds);
  if (!a.latent.empty()) {
    // true projected values, aligned with the covariate rows (under shuffling
    // the responses are intentionally not aligned with these)
    const std::vector<double> z = project(ds.covariates, setting_beta0(setting));
    CsvWriter w(a.latent, {"z"});
    for (double v : z) w.row({format_double(v)});
    w.close();
  }
  std::cout << "wrote " << ds.covariates.rows() << " observations (" << ds.covariates.cols()
            << " covariates, sigma " << format_double(a.sigma) << ", "
            << (a.linked ? "linked" : "unlinked") << ") to " << a.out << "\n";
  return 0;
}

std::vector<double> load_column(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 1)
    throw std::runtime_error(path + ": expected a single-column table");
  std::vector<double> vals;
  vals.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    vals.push_back(parse_cell(t.rows[i], 0, path, i));
  if (vals.empty()) throw std::runtime_error(path + ": no values");
  return vals;
}

// Covariates and responses supplied as separate files.
Dataset load_split_dataset(const std::string& x_path, const std::string& y_path, double sigma) {
  const CsvTable xt = read_csv(x_path);
  if (xt.header.empty()) throw std::runtime_error(x_path + ": no covariate columns");
  if (xt.rows.empty()) throw std::runtime_error(x_path + ": no observations");
  const std::vector<double> ys = load_column(y_path);
  if (ys.size() != xt.rows.size())
    throw std::runtime_error(x_path + " has " + std::to_string(xt.rows.size()) + " rows but " +
                             y_path + " has " + std::to_string(ys.size()));
  const std::size_t d = xt.header.size();
  Dataset ds;
  ds.sigma = sigma;
  ds.covariates = Matrix(xt.rows.size(), d);
  ds.responses = ys;
  for (std::size_t i = 0; i < xt.rows.size(); ++i)
    for (std::size_t k = 0; k < d; ++k)
      ds.covariates(i, k) = parse_cell(xt.rows[i], k, x_path, i);
  return ds;
}

struct FitArgs {
  std::string data;
  std::string x_file;
  std::string y_file;
  std::string setting = "a";
  std::size_t n = 0;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  std::size_t starts = 8;
  std::size_t max_iters = 0;
  bool no_polish = false;
  std::string out_json;
  std::string atoms_out;
};

int run_fit(const FitArgs& a) {
  Dataset ds;
  if (!a.x_file.empty() || !a.y_file.empty()) {
    if (a.x_file.empty() || a.y_file.empty())
      throw std::runtime_error("--x and --y must be given together");
    if (!a.data.empty()) throw std::runtime_error("--data conflicts with --x/--y");
    ds = load_split_dataset(a.x_file, a.y_file, a.sigma);
  } else if (!a.data.empty()) {
    ds = load_dataset(a.data, a.sigma);
  } else {
    if (a.n == 0)
      throw std::runtime_error("either --data, --x with --y, or --setting with --n is required");
    ds = sample_setting(setting_from_name(a.setting), a.n, a.sigma,
                        rng::Stream(a.seed, {kTagGen}));
  }

  CriterionContext ctx(ds, gaussian_noise(a.sigma));
  FitOptions opt;
  opt.n_starts = a.starts;
  opt.max_iters = a.max_iters;
  opt.refine_with_gradient = !a.no_polish;
  const FitResult fit = fit_dlse(ctx, opt, a.seed);

  std::cout << "n " << ds.covariates.rows() << ", d " << ds.covariates.cols() << "\n";
  std::cout << "beta_hat";
  for (double b : fit.beta_hat) std::cout << ' ' << format_double(b);
  std::cout << "\ncriterion " << format_double(fit.criterion_value) << "\n";
  std::cout << "converged " << (fit.converged ? "yes" : "no") << ", iterations "
            << fit.iterations << ", evaluations " << fit.evaluations << "\n";
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";

  if (!a.out_json.empty()) {
    json doc;
    doc["n"] = ds.covariates.rows();
    doc["d"] = ds.covariates.cols();
    doc["sigma"] = a.sigma;
    doc["beta_hat"] = fit.beta_hat;
    doc["criterion_value"] = fit.criterion_value;
    doc["converged"] = fit.converged;
    doc["iterations"] = fit.iterations;
    doc["evaluations"] = fit.evaluations;
    doc["warnings"] = fit.warnings;
    std::ofstream out(a.out_json);
    if (!out) throw std::runtime_error("cannot open " + a.out_json);
    out << doc.dump(2) << "\n";
  }
  if (!a.atoms_out.empty()) {
    const std::vector<double> z = project(ds.covariates, fit.beta_hat);
    CsvWriter w(a.atoms_out, {"z"});
    for (double v : z) w.row({format_double(v)});
    w.close();
  }
  return fit.converged ? 0 : 2;
}

struct InferArgs {
  std::string atoms;
  std::string data;
  double oracle_tau = 0.0;
  double sigma = 1.0;
  double bandwidth = 0.0;
  std::string fy = "integrated";
  double alpha = 0.05;
  std::vector<double> y0;
  std::string y0_file;
  std::string mean_method = "quadrature";
  std::size_t draws = 4096;
  std::uint64_t seed = 1;
  std::string out;
  std::string dump_density;
};

int run_infer(const InferArgs& a) {
  const bool oracle = a.oracle_tau > 0.0;
  const int sources = (!a.atoms.empty() ? 1 : 0) + (!a.data.empty() ? 1 : 0) + (oracle ? 1 : 0);
  if (sources != 1)
    throw std::runtime_error("exactly one of --atoms, --data and --oracle-gaussian is required");
  const FyVariant variant = fy_variant_from_name(a.fy);
  if (oracle && variant != FyVariant::integrated)
    throw std::runtime_error("--oracle-gaussian only supports the integrated variant");
  const bool use_is = a.mean_method == "is";
  if (!use_is && a.mean_method != "quadrature")
    throw std::runtime_error("--mean-method must be quadrature or is");

  std::vector<double> points = a.y0;
  if (!a.y0_file.empty()) {
    const std::vector<double> more = load_column(a.y0_file);
    points.insert(points.end(), more.begin(), more.end());
  }
  if (points.empty()) throw std::runtime_error("no responses given; use --y0 or --y0-file");

  const NoiseModel noise = gaussian_noise(a.sigma);
  std::optional<DensityEstimate> fz;
  if (oracle) {
    fz = gaussian_density(0.0, a.oracle_tau);
  } else {
    std::vector<double> zvals;
    if (!a.data.empty()) {
      // fit first, then treat the fitted projections as the latent sample
      const Dataset ds = load_dataset(a.data, a.sigma);
      CriterionContext ctx(ds, noise);
      const FitResult fit = fit_dlse(ctx, FitOptions{}, a.seed);
      for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
      if (!fit.converged) std::cerr << "warning: the coefficient fit did not converge\n";
      std::cerr << "fitted coefficients:";
      for (double b : fit.beta_hat) std::cerr << ' ' << format_double(b);
      std::cerr << "\n";
      zvals = project(ds.covariates, fit.beta_hat);
    } else {
      zvals = load_column(a.atoms);
    }
    EmpiricalDist atoms(std::move(zvals));
    const double h = a.bandwidth > 0.0 ? a.bandwidth : default_bandwidth(atoms.atoms());
    fz = kde(atoms, KernelSpec{KernelSpec::Type::gaussian, h});
  }
  if (!a.dump_density.empty()) fs::create_directories(a.dump_density);

  std::vector<std::string> header = {"y0", "status", "mean", "mode", "lo", "hi"};
  if (use_is) {
    header.push_back("se");
    header.push_back("ess");
  }
  std::ostringstream body;
  for (std::size_t i = 0; i < header.size(); ++i)
    body << (i ? "," : "") << header[i];
  body << "\n";

  for (std::size_t i = 0; i < points.size(); ++i) {
    const double y0 = points[i];
    body << format_double(y0) << ',';
    try {
      ConditionalDensity cd = conditional_density(*fz, noise, y0, variant);
      const double mode = cond_mode(cd);
      if (use_is) {
        ImportanceOptions iopt;
        iopt.draws = a.draws;
        iopt.seed = a.seed + i;  // one sub-stream per response
        const ImportanceEstimate est = cond_mean_is(cd, iopt);
        const Interval ci = credible_interval_is(cd, a.alpha, iopt);
        body << "ok," << format_double(est.mean) << ',' << format_double(mode) << ','
             << format_double(ci.lo) << ',' << format_double(ci.hi) << ','
             << format_double(est.se) << ',' << format_double(est.ess) << "\n";
      } else {
        const double mean = cond_mean(cd);
        const Interval ci = credible_interval(cd, a.alpha);
        body << "ok," << format_double(mean) << ',' << format_double(mode) << ','
             << format_double(ci.lo) << ',' << format_double(ci.hi) << "\n";
      }
      if (!a.dump_density.empty()) {
        CsvWriter w(fs::path(a.dump_density) / ("density_" + std::to_string(i) + ".csv"),
                    {"z", "density"});
        for (std::size_t j = 0; j < cd.grid_size(); ++j) {
          const double l = cd.grid_log(j);
          const double f = l <= DensityEstimate::kLogFloor ? 0.0 : std::exp(l);
          w.row({format_double(cd.grid_z(j)), format_double(f)});
        }
        w.close();
      }
    } catch (const std::runtime_error&) {
      body << "outside_support";
      for (std::size_t k = 2; k < header.size(); ++k) body << ",nan";
      body << "\n";
    }
  }

  if (a.out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot open " + a.out);
    out << body.str();
  }
  return 0;
}

struct ExperimentArgs {
  std::string kind;
  std::string setting = "a";
  std::string scale = "desk";
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string config;
  std::size_t reps = 0;
  std::vector<std::size_t> n_list;
  std::vector<double> sigma2_list;
  std::size_t reference_size = 0;
  std::size_t test_size = 0;
  double alpha = 0.0;
  std::string fy;
  double bandwidth = 0.0;
  unsigned threads = 0;
  bool force = false;
  bool dump_raw = false;
  const CLI::App* cmd = nullptr;  // for asking which flags were actually given
};

// Study parameters from a JSON file. Keys mirror the config struct; anything
// omitted keeps the scale default, and command line flags still win.
void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error(path + ": expected a JSON object");
  static const char* known[] = {"setting",        "n_list", "sigma2_list", "reps",
                                "test_size",      "reference_size", "alpha", "sigma",
                                "master_seed",    "fy",     "bandwidth",   "threads",
                                "fit",            "max_failure_rate"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::runtime_error(path + ": unknown config key '" + key + "'");
  }
  if (doc.contains("setting")) cfg.setting = setting_from_name(doc["setting"].get<std::string>());
  if (doc.contains("n_list")) cfg.n_list = doc["n_list"].get<std::vector<std::size_t>>();
  if (doc.contains("sigma2_list"))
    cfg.sigma2_list = doc["sigma2_list"].get<std::vector<double>>();
  if (doc.contains("reps")) cfg.reps = doc["reps"].get<std::size_t>();
  if (doc.contains("test_size")) cfg.test_size = doc["test_size"].get<std::size_t>();
  if (doc.contains("reference_size"))
    cfg.reference_size = doc["reference_size"].get<std::size_t>();
  if (doc.contains("alpha")) cfg.alpha = doc["alpha"].get<double>();
  if (doc.contains("sigma")) cfg.sigma = doc["sigma"].get<double>();
  if (doc.contains("master_seed")) cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
  if (doc.contains("fy")) cfg.fy = fy_variant_from_name(doc["fy"].get<std::string>());
  if (doc.contains("bandwidth")) cfg.bandwidth = doc["bandwidth"].get<double>();
  if (doc.contains("threads")) cfg.threads = doc["threads"].get<unsigned>();
  if (doc.contains("max_failure_rate"))
    cfg.max_failure_rate = doc["max_failure_rate"].get<double>();
  if (doc.contains("fit")) {
    const json& f = doc["fit"];
    if (!f.is_object()) throw std::runtime_error(path + ": 'fit' must be an object");
    if (f.contains("n_starts")) cfg.fit.n_starts = f["n_starts"].get<std::size_t>();
    if (f.contains("max_iters")) cfg.fit.max_iters = f["max_iters"].get<std::size_t>();
    if (f.contains("refine_with_gradient"))
      cfg.fit.refine_with_gradient = f["refine_with_gradient"].get<bool>();
  }
}

json config_echo(const ExperimentConfig& cfg, const std::string& kind) {
  json doc;
  doc["study"] = kind;
  doc["setting"] = setting_name(cfg.setting);
  doc["n_list"] = cfg.n_list;
  if (!cfg.sigma2_list.empty()) doc["sigma2_list"] = cfg.sigma2_list;
  doc["reps"] = cfg.reps;
  if (kind == "rates") doc["reference_size"] = cfg.reference_size;
  if (kind != "rates") {
    doc["test_size"] = cfg.test_size;
    doc["alpha"] = cfg.alpha;
    doc["fy"] = fy_variant_name(cfg.fy);
    doc["bandwidth"] = cfg.bandwidth;
  }
  doc["sigma"] = cfg.sigma;
  doc["master_seed"] = cfg.master_seed;
  doc["fit_starts"] = cfg.fit.n_starts;
  doc["fit_max_iters"] = cfg.fit.max_iters;
  return doc;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << doc.dump(2) << "\n";
}

json cell_json(const ComparisonCell& cell) {
  json c;
  c["n"] = cell.n;
  c["sigma2"] = cell.sigma2;
  c["mse_cond_mean"] = cell.mse_cond_mean;
  c["mse_cond_mode"] = cell.mse_cond_mode;
  c["mse_unc_mean"] = cell.mse_unc_mean;
  c["mse_unc_mode"] = cell.mse_unc_mode;
  c["ratio_mean"] = cell.ratio_mean;
  c["ratio_mode"] = cell.ratio_mode;
  c["coverage_cond"] = cell.coverage_cond;
  c["coverage_unc"] = cell.coverage_unc;
  c["len_cond"] = cell.len_cond;
  c["len_unc"] = cell.len_unc;
  c["len_ratio"] = cell.len_ratio;
  c["flagged"] = cell.flagged;
  c["failed"] = cell.failed;
  return c;
}

void write_comparison_rows(CsvWriter& w, const std::string& setting, const ComparisonCell& cell) {
  const std::pair<const char*, double> metrics[] = {
      {"mse_cond_mean", cell.mse_cond_mean}, {"mse_cond_mode", cell.mse_cond_mode},
      {"mse_unc_mean", cell.mse_unc_mean},   {"mse_unc_mode", cell.mse_unc_mode},
      {"ratio_mean", cell.ratio_mean},       {"ratio_mode", cell.ratio_mode},
      {"coverage_cond", cell.coverage_cond}, {"coverage_unc", cell.coverage_unc},
      {"len_cond", cell.len_cond},           {"len_unc", cell.len_unc},
      {"len_ratio", cell.len_ratio}};
  for (const auto& [name, value] : metrics)
    w.row({setting, std::to_string(cell.n), format_double(cell.sigma2), name,
           format_double(value)});
}

int run_experiment(const ExperimentArgs& a) {
  const Setting setting = setting_from_name(a.setting);
  const StudyScale scale = a.scale == "paper" ? StudyScale::paper : StudyScale::desk;
  if (a.scale != "desk" && a.scale != "paper")
    throw std::runtime_error("--scale must be desk or paper");

  ExperimentConfig cfg;
  if (a.kind == "rates") {
    cfg = default_rate_config(setting, scale);
  } else if (a.kind == "comparison") {
    cfg = default_comparison_config(setting, scale);
  } else {
    cfg = default_mse_grid_config(setting, scale);
  }
  if (!a.config.empty()) apply_config_file(cfg, a.config);

  // flags given on the command line beat both the scale defaults and the file
  auto given = [&a](const char* flag) { return a.cmd != nullptr && a.cmd->count(flag) > 0; };
  if (given("--setting")) cfg.setting = setting;
  if (given("--seed")) cfg.master_seed = a.seed;
  if (given("--reps")) cfg.reps = a.reps;
  if (given("--n")) cfg.n_list = a.n_list;
  if (given("--sigma2")) cfg.sigma2_list = a.sigma2_list;
  if (given("--m")) cfg.reference_size = a.reference_size;
  if (given("--test-size")) cfg.test_size = a.test_size;
  if (given("--alpha")) cfg.alpha = a.alpha;
  if (given("--fy")) cfg.fy = fy_variant_from_name(a.fy);
  if (given("--bandwidth")) cfg.bandwidth = a.bandwidth;
  if (given("--threads")) cfg.threads = a.threads;

  const fs::path dir(a.out_dir.empty() ? a.kind : a.out_dir);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
    if (!fs::is_empty(dir) && !a.force)
      throw std::runtime_error(dir.string() + " is not empty; pass --force to reuse it");
  } else {
    fs::create_directories(dir);
  }

  const std::string sname = setting_name(cfg.setting);
  json summary = config_echo(cfg, a.kind);

  if (a.kind == "rates") {
    const RateStudyResult res = run_rate_study(cfg);
    {
      CsvWriter w(dir / "moments.csv", {"setting", "n", "statistic", "value"});
      for (std::size_t i = 0; i < res.n_list.size(); ++i)
        for (std::size_t s = 0; s < 4; ++s)
          w.row({sname, std::to_string(res.n_list[i]), rate_stat_names()[s],
                 format_double(res.stats[i][s])});
      w.close();
    }
    {
      // one row per setting, one slope column per tracked statistic
      std::vector<std::string> header{"setting"};
      for (std::size_t s = 0; s < 4; ++s) header.push_back(rate_stat_names()[s]);
      CsvWriter w(dir / "slopes.csv", header);
      std::vector<std::string> row{sname};
      for (std::size_t s = 0; s < 4; ++s) row.push_back(format_double(res.slopes[s]));
      w.row(row);
      w.close();
    }
    if (a.dump_raw) {
      CsvWriter w(dir / "raw_w1.csv", {"setting", "n", "rep", "w1"});
      for (std::size_t i = 0; i < res.n_list.size(); ++i)
        for (std::size_t r = 0; r < res.raw[i].size(); ++r)
          w.row({sname, std::to_string(res.n_list[i]), std::to_string(r),
                 format_double(res.raw[i][r])});
      w.close();
    }
    {
      std::vector<PlotSeries> series(2);
      series[0].label = "mean distance";
      series[1].label = "99th percentile";
      for (std::size_t i = 0; i < res.n_list.size(); ++i) {
        series[0].x.push_back(static_cast<double>(res.n_list[i]));
        series[0].y.push_back(res.stats[i][0]);
        series[1].x.push_back(static_cast<double>(res.n_list[i]));
        series[1].y.push_back(res.stats[i][3]);
      }
      // least squares line for the mean, drawn with the measured exponent
      const double slope = res.slopes[0];
      double intercept = 0.0;
      for (std::size_t i = 0; i < series[0].x.size(); ++i)
        intercept += std::log10(series[0].y[i]) - slope * std::log10(series[0].x[i]);
      intercept /= static_cast<double>(series[0].x.size());
      PlotSeries fitline;
      fitline.label = "fitted trend (mean)";
      for (double x : {series[0].x.front(), series[0].x.back()}) {
        fitline.x.push_back(x);
        fitline.y.push_back(std::pow(10.0, intercept + slope * std::log10(x)));
      }
      series.push_back(fitline);
      char note[64];
      std::snprintf(note, sizeof(note), "fitted slope %.3f", slope);
      write_loglog_svg(dir / "rates_loglog.svg",
                       "transport distance to the latent law (setting " + sname + ")",
                       "sample size", "distance", series, {note});
    }
    json stats = json::object();
    for (std::size_t s = 0; s < 4; ++s) stats[rate_stat_names()[s]] = res.slopes[s];
    summary["slopes"] = stats;
    summary["failed_replications"] = res.failed;
    write_json(dir / "summary.json", summary);
    std::cout << "decay exponents:";
    for (std::size_t s = 0; s < 4; ++s)
      std::cout << ' ' << rate_stat_names()[s] << ' ' << format_double(res.slopes[s]);
    std::cout << "\nresults in " << dir.string() << "\n";
    return 0;
  }

  if (a.kind == "comparison") {
    const ComparisonResult res = run_comparison(cfg);
    CsvWriter w(dir / "comparison.csv", {"setting", "n", "sigma2", "metric", "value"});
    json cells = json::array();
    for (const auto& cell : res.cells) {
      write_comparison_rows(w, sname, cell);
      cells.push_back(cell_json(cell));
    }
    w.close();
    summary["cells"] = cells;
    write_json(dir / "summary.json", summary);
    for (const auto& cell : res.cells)
      std::cout << "n " << cell.n << ": mse ratio (mean) " << format_double(cell.ratio_mean)
                << ", coverage " << format_double(cell.coverage_cond) << ", length ratio "
                << format_double(cell.len_ratio) << "\n";
    std::cout << "results in " << dir.string() << "\n";
    return 0;
  }

  const MseGridResult res = run_mse_grid(cfg);
  CsvWriter w(dir / "mse_grid.csv", {"setting", "n", "sigma2", "estimator", "mse"});
  json cells = json::array();
  for (const auto& cell : res.cells) {
    const std::pair<const char*, double> rows[] = {{"cond_mean", cell.mse_cond_mean},
                                                   {"cond_mode", cell.mse_cond_mode},
                                                   {"unc_mean", cell.mse_unc_mean},
                                                   {"unc_mode", cell.mse_unc_mode}};
    for (const auto& [name, value] : rows)
      w.row({sname, std::to_string(cell.n), format_double(cell.sigma2), name,
             format_double(value)});
    cells.push_back(cell_json(cell));
  }
  w.close();
  summary["cells"] = cells;
  write_json(dir / "summary.json", summary);
  std::cout << res.cells.size() << " grid cells written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deconvolution estimation for unlinked linear models"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "draw a synthetic dataset and write it as CSV");
  cgen->add_option("--setting", gen.setting, "data generating setting (a, b, c or d)")
      ->check(CLI::IsMember({"a", "b", "c", "d"}));
  cgen->add_option("--n", gen.n, "number of observations")->required()->check(CLI::PositiveNumber);
  cgen->add_option("--sigma", gen.sigma, "noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  cgen->add_option("--seed", gen.seed, "random seed");
  cgen->add_flag("--linked", gen.linked, "keep responses aligned with covariate rows");
  cgen->add_option("--out", gen.out, "output CSV path")->required();
  cgen->add_option("--latent", gen.latent,
                   "also write the projected values X'beta0, aligned with covariate rows");

  FitArgs fit;
  CLI::App* cfit = app.add_subcommand("fit", "estimate the coefficient vector");
  cfit->add_option("--data", fit.data, "input CSV (columns x1..xd then y)");
  cfit->add_option("--x", fit.x_file, "covariate CSV, one column per coordinate");
  cfit->add_option("--y", fit.y_file, "response CSV with a single column");
  cfit->add_option("--setting", fit.setting, "synthetic setting when no input file is given")
      ->check(CLI::IsMember({"a", "b", "c", "d"}));
  cfit->add_option("--n", fit.n, "synthetic sample size when no input file is given");
  cfit->add_option("--sigma", fit.sigma, "noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  cfit->add_option("--seed", fit.seed, "seed for synthetic data and optimizer starts");
  cfit->add_option("--starts", fit.starts, "number of start directions")
      ->check(CLI::PositiveNumber);
  cfit->add_option("--max-iters", fit.max_iters, "simplex iteration budget (0 = automatic)");
  cfit->add_flag("--no-polish", fit.no_polish, "skip the gradient-based refinement");
  cfit->add_option("--out-json,--out", fit.out_json, "write the fit summary as JSON");
  cfit->add_option("--atoms", fit.atoms_out, "write fitted projections X'beta_hat as CSV");

  InferArgs inf;
  CLI::App* cinf = app.add_subcommand("infer", "conditional latent summaries given responses");
  cinf->add_option("--atoms", inf.atoms, "CSV of fitted projections (from fit --atoms)");
  cinf->add_option("--data", inf.data, "dataset CSV (columns x1..xd then y); fits before inferring");
  cinf->add_option("--oracle-gaussian", inf.oracle_tau,
                   "use an exact centered normal latent law with this standard deviation");
  cinf->add_option("--sigma", inf.sigma, "noise standard deviation")->check(CLI::PositiveNumber);
  cinf->add_option("--bandwidth", inf.bandwidth, "kernel bandwidth (0 = rule of thumb)");
  cinf->add_option("--fy", inf.fy, "response density variant for the normalizer")
      ->check(CLI::IsMember({"integrated", "empirical", "gauss", "gauss_conv"}));
  cinf->add_option("--alpha", inf.alpha, "credible level is 1 - alpha");
  cinf->add_option("--y0", inf.y0, "observed response (repeatable)");
  cinf->add_option("--y0-file", inf.y0_file, "single-column CSV of observed responses");
  cinf->add_option("--mean-method", inf.mean_method, "quadrature or is (importance sampling)")
      ->check(CLI::IsMember({"quadrature", "is"}));
  cinf->add_option("--draws", inf.draws, "importance sampling draws")->check(CLI::PositiveNumber);
  cinf->add_option("--seed", inf.seed, "seed for importance sampling and --data fits");
  cinf->add_option("--out", inf.out, "output CSV path (default: stdout)");
  cinf->add_option("--dump-density", inf.dump_density,
                   "directory for per-response conditional density grids (z, density)");

  ExperimentArgs exp;
  CLI::App* cexp = app.add_subcommand("experiment", "run a Monte Carlo study");
  cexp->add_option("kind,--experiment", exp.kind, "rates, comparison or mse-grid")
      ->required()
      ->check(CLI::IsMember({"rates", "comparison", "mse-grid"}));
  cexp->add_option("--setting", exp.setting, "data generating setting")
      ->check(CLI::IsMember({"a", "b", "c", "d"}));
  cexp->add_option("--scale", exp.scale, "desk (quick) or paper (full size)")
      ->check(CLI::IsMember({"desk", "paper"}));
  cexp->add_option("--seed", exp.seed, "master seed");
  cexp->add_option("--out-dir", exp.out_dir, "output directory (default: ./<kind>)");
  cexp->add_option("--config", exp.config, "JSON file with study parameters; flags override")
      ->check(CLI::ExistingFile);
  cexp->add_option("--reps", exp.reps, "replications per cell");
  cexp->add_option("--n", exp.n_list, "sample sizes (overrides the scale default)");
  cexp->add_option("--sigma2", exp.sigma2_list, "noise variances for the grid study");
  cexp->add_option("--m", exp.reference_size, "reference draw size for transport distances");
  cexp->add_option("--test-size", exp.test_size, "test pairs per replication");
  cexp->add_option("--alpha", exp.alpha, "credible level is 1 - alpha");
  cexp->add_option("--fy", exp.fy, "response density variant")
      ->check(CLI::IsMember({"integrated", "empirical", "gauss", "gauss_conv"}));
  cexp->add_option("--bandwidth", exp.bandwidth, "kernel bandwidth (0 = rule of thumb)");
  cexp->add_option("--threads", exp.threads, "worker threads (0 = all cores)");
  cexp->add_flag("--force", exp.force, "write into a non-empty directory");
  cexp->add_flag("--dump-raw", exp.dump_raw, "also write per-replication distances");
  exp.cmd = cexp;

  CLI11_PARSE(app, argc, argv);

  try {
    if (cgen->parsed()) return run_gen(gen);
    if (cfit->parsed()) return run_fit(fit);
    if (cinf->parsed()) return run_infer(inf);
    return run_experiment(exp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
