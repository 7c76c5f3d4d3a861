#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "so3orbit/experiment.hpp"

using namespace so3orbit;

namespace {

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig small_snr_sweep() {
  ExperimentConfig c;
  c.kind = ExperimentKind::snr_sweep;
  c.name = "t";
  c.L = 3;
  c.R = 3;
  c.snr = {5.0, 0.5};
  c.n = {2000};
  c.seeds = 3;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("median and log-log slope") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  std::vector<double> x{1e3, 1e4, 1e5}, y;
  for (double v : x) y.push_back(7.0 * std::pow(v, -0.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("config parsing") {
  const json j = json::parse(R"({"format_version":1,"kind":"experiment","experiment":"n-sweep",
    "name":"ns","L":4,"R":3,"n":[100,1000],"snr":[0.5],"seeds":2,"base":"oracle"})");
  const ExperimentConfig c = experiment_config_from_json(j);
  CHECK(c.kind == ExperimentKind::n_sweep);
  CHECK(c.L == 4);
  CHECK(c.n == std::vector<std::uint64_t>{100, 1000});
  CHECK(c.seeds == 2);
  CHECK(c.tau == 1.0);  // default kept

  json bad = j;
  bad["colour"] = "red";
  CHECK_THROWS_WITH_AS(experiment_config_from_json(bad), doctest::Contains("colour"), ParseError);
  bad = j;
  bad["L"] = "five";
  CHECK_THROWS_AS(experiment_config_from_json(bad), ParseError);
  bad = j;
  bad["format_version"] = 3;
  CHECK_THROWS_AS(experiment_config_from_json(bad), UnsupportedVersion);
  bad = j;
  bad["experiment"] = "moon-landing";
  CHECK_THROWS_AS(experiment_config_from_json(bad), std::exception);

  // round trip
  const ExperimentConfig c2 = experiment_config_from_json(to_json(c));
  CHECK(c2.n == c.n);
  CHECK(c2.kind == c.kind);
  CHECK(c2.name == c.name);
}

TEST_CASE("config validation") {
  ExperimentConfig c = small_snr_sweep();
  CHECK_NOTHROW(c.validate());
  c.sampler = "random";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // random needs population moments
  c = small_snr_sweep();
  c.seeds = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_snr_sweep();
  c.snr.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("runs are reproducible and independent of the worker count") {
  ExperimentConfig c = small_snr_sweep();
  c.workers = 1;
  const ResultTable a = run_experiment(c);
  c.workers = 3;
  const ResultTable b = run_experiment(c);
  REQUIRE(a.cells.size() == 2);
  CHECK(drop_first_line(a.summary_csv("x")) == drop_first_line(b.summary_csv("y")));
  CHECK(a.long_csv("x") == b.long_csv("x"));
  // common random numbers across cells: observation seeds match per seed index
  for (int k = 0; k < c.seeds; ++k)
    CHECK(a.cells[0].seeds[k].observation_seed == a.cells[1].seeds[k].observation_seed);
  // more noise, larger error
  CHECK(a.cells[1].median_error > a.cells[0].median_error);
}

TEST_CASE("write_results produces the documented files") {
  const auto dir = std::filesystem::temp_directory_path() / "so3orbit_test_experiment";
  std::filesystem::remove_all(dir);
  ExperimentConfig c;
  c.kind = ExperimentKind::cond_table;
  c.name = "ct";
  c.L = 3;
  c.R_grid = {3, 4};
  c.sampler = "random";
  c.population = true;
  c.seeds = 2;
  c.out_dir = dir.string();
  const ResultTable t = run_experiment(c);
  const auto paths = write_results(t);
  CHECK(paths.size() == 4);
  for (const auto& p : paths) CHECK(std::filesystem::exists(p));
  const std::string cond = slurp((dir / "ct_cond.csv").string());
  CHECK(cond.rfind("# so3orbit", 0) == 0);
  CHECK(cond.find("band,signal_R3,signal_R4,distribution_R3,distribution_R4\n") != std::string::npos);
  CHECK(cond.find("\n1,-,-,") != std::string::npos);
  for (const auto& cell : t.cells) {
    CHECK(cell.failed == 0);
    CHECK(cell.median_error < 1e-10);
    CHECK(std::isfinite(cell.max_cond_distribution));
  }
  const json j = read_json_file((dir / "ct.json").string());
  CHECK(j["cells"].size() == 2);
}

TEST_CASE("n-sweep records a slope") {
  ExperimentConfig c;
  c.kind = ExperimentKind::n_sweep;
  c.L = 2;
  c.R = 3;
  c.n = {500, 5000};
  c.snr = {1.0};
  c.seeds = 2;
  const ResultTable t = run_experiment(c);
  REQUIRE(t.slope.has_value());
  CHECK(*t.slope < 0);
}
