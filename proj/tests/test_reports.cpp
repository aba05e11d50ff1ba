#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "unlinked/csv.hpp"
#include "unlinked/dataset.hpp"
#include "unlinked/rng.hpp"
#include "unlinked/svg.hpp"

using namespace unlinked;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("unlinked_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("numeric formatting round-trips doubles exactly") {
  const std::vector<double> values = {0.0,
                                      -0.0,
                                      1.0,
                                      0.1,
                                      -1.0 / 3.0,
                                      3.141592653589793,
                                      1e-300,
                                      -2.5e17,
                                      6.02214076e23,
                                      std::numeric_limits<double>::denorm_min(),
                                      std::numeric_limits<double>::max(),
                                      -123456.789012345678};
  for (double v : values) {
    const std::string s = format_double(v);
    REQUIRE(std::strtod(s.c_str(), nullptr) == v);
  }
  // short representations stay short
  REQUIRE(format_double(1.0) == "1");
  REQUIRE(format_double(0.5) == "0.5");
  REQUIRE(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("table writer and reader agree") {
  TempDir tmp("csv_roundtrip");
  const fs::path file = tmp.path / "table.csv";
  {
    CsvWriter w(file, {"name", "value"});
    w.row({"alpha", format_double(0.1)});
    w.row({"beta", format_double(-3.0)});
    REQUIRE_THROWS_AS(w.row({"too", "many", "cells"}), std::invalid_argument);
    w.close();
  }
  const CsvTable t = read_csv(file);
  REQUIRE(t.header == std::vector<std::string>{"name", "value"});
  REQUIRE(t.rows.size() == 2);
  REQUIRE(t.rows[0][0] == "alpha");
  REQUIRE(parse_double(t.rows[0][1]) == 0.1);
  REQUIRE(parse_double(t.rows[1][1]) == -3.0);
  REQUIRE_THROWS_AS(parse_double("12x"), std::runtime_error);
  REQUIRE_THROWS_AS(read_csv(tmp.path / "missing.csv"), std::runtime_error);
}

TEST_CASE("re-emitting a parsed table reproduces the bytes") {
  TempDir tmp("csv_reemit");
  const fs::path first = tmp.path / "one.csv";
  const fs::path second = tmp.path / "two.csv";
  {
    CsvWriter w(first, {"n", "value", "label"});
    w.row({"10", format_double(0.123456789012345), "alpha"});
    w.row({"20", format_double(50.0), "beta"});
    w.row({"40", format_double(1e-17), "gamma"});
    w.close();
  }
  const CsvTable t = read_csv(first);
  {
    CsvWriter w(second, t.header);
    for (const auto& row : t.rows) w.row(row);
    w.close();
  }
  REQUIRE(slurp(first) == slurp(second));
}

TEST_CASE("parser errors name the offending line") {
  TempDir tmp("csv_lines");
  const fs::path ragged = tmp.path / "ragged.csv";
  std::ofstream(ragged) << "a,b\n1,2\n3\n";
  REQUIRE_THROWS_WITH(read_csv(ragged), Catch::Matchers::ContainsSubstring("line 3"));
  const fs::path bad = tmp.path / "bad.csv";
  std::ofstream(bad) << "x1,y\n1,2\nnope,4\n";
  REQUIRE_THROWS_WITH(load_dataset(bad, 1.0), Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("observation files survive a save and load cycle bit for bit") {
  TempDir tmp("dataset_roundtrip");
  const fs::path file = tmp.path / "data.csv";
  const Dataset ds = sample_setting(Setting::c, 60, 1.25, rng::Stream(5, {1, 2}));
  save_dataset(file, ds);
  const Dataset back = load_dataset(file, 1.25);
  REQUIRE(back.covariates.rows() == ds.covariates.rows());
  REQUIRE(back.covariates.cols() == ds.covariates.cols());
  REQUIRE(back.sigma == 1.25);
  for (std::size_t i = 0; i < ds.covariates.rows(); ++i) {
    for (std::size_t k = 0; k < ds.covariates.cols(); ++k)
      REQUIRE(back.covariates(i, k) == ds.covariates(i, k));
    REQUIRE(back.responses[i] == ds.responses[i]);
  }
}

TEST_CASE("observation loader rejects malformed headers") {
  TempDir tmp("dataset_bad");
  const fs::path file = tmp.path / "bad.csv";
  std::ofstream(file) << "x1,x2\n1,2\n";
  REQUIRE_THROWS_AS(load_dataset(file, 1.0), std::runtime_error);
}

TEST_CASE("log-log figure output is deterministic and well formed") {
  TempDir tmp("svg");
  const fs::path file = tmp.path / "plot.svg";
  PlotSeries s1{"observed", {500, 1000, 2000, 4000}, {0.32, 0.23, 0.16, 0.11}};
  PlotSeries s2{"reference slope", {500, 4000}, {0.32, 0.32 * std::pow(8.0, -0.5)}};
  write_loglog_svg(file, "decay of the transport distance", "sample size", "distance", {s1, s2});
  const std::string first = slurp(file);
  REQUIRE(first.rfind("<svg", 0) == 0);
  REQUIRE(first.find("observed") != std::string::npos);
  REQUIRE(first.find("reference slope") != std::string::npos);
  REQUIRE(first.find("</svg>") != std::string::npos);
  REQUIRE(first.size() < (1u << 20));

  write_loglog_svg(file, "decay of the transport distance", "sample size", "distance", {s1, s2});
  REQUIRE(slurp(file) == first);

  // annotation lines land in the output without disturbing determinism
  write_loglog_svg(file, "decay of the transport distance", "sample size", "distance", {s1, s2},
                   {"fitted slope -0.500"});
  const std::string annotated = slurp(file);
  REQUIRE(annotated.find("fitted slope -0.500") != std::string::npos);
  REQUIRE(annotated != first);
}

TEST_CASE("log-log figure rejects unusable data") {
  TempDir tmp("svg_bad");
  const fs::path file = tmp.path / "plot.svg";
  REQUIRE_THROWS_AS(write_loglog_svg(file, "t", "x", "y", {}), std::invalid_argument);
  PlotSeries neg{"bad", {1.0, 2.0}, {0.5, -0.5}};
  REQUIRE_THROWS_AS(write_loglog_svg(file, "t", "x", "y", {neg}), std::invalid_argument);
  PlotSeries ragged{"bad", {1.0, 2.0}, {0.5}};
  REQUIRE_THROWS_AS(write_loglog_svg(file, "t", "x", "y", {ragged}), std::invalid_argument);
}
