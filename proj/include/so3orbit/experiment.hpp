#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "so3orbit/io.hpp"
#include "so3orbit/recover.hpp"

namespace so3orbit {

enum class ExperimentKind { snr_sweep, n_sweep, eta_sweep, tau_sweep, cond_table, single_run };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// One experiment. Grids not used by the kind are ignored:
///   snr-sweep  cells over snr (or sigma when given), n = n[0]
///   n-sweep    cells over n, noise from snr[0] (or sigma[0])
///   eta-sweep  cells over eta_grid with the restricted sampler
///   tau-sweep  cells over tau_grid with the gaussian-euler sampler
///   cond-table cells over R_grid, population moments, no noise
///   single-run one cell, population moments when population is set
/// The sampler "random" stands for a generic random_distribution and is
/// only valid with population moments.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  std::string name = "experiment";
  int L = 5;
  int R = 5;
  std::string sampler = "gaussian-euler";
  double tau = 1.0;
  double eta = 1.0;
  std::vector<double> snr{0.5};
  std::vector<double> sigma;
  std::vector<std::uint64_t> n{10000};
  std::vector<double> eta_grid{0.5, 1.0, 1.75};
  std::vector<double> tau_grid{0.5, 1.0, 2.0};
  std::vector<int> R_grid{3, 5, 8};
  int seeds = 5;
  std::uint64_t seed = 1;
  BaseMode mode = BaseMode::oracle;
  bool in_plane = false;
  bool real_signal = true;
  NoiseMode noise = NoiseMode::real_symmetric;
  bool population = false;
  bool include_l1_equal_l = true;
  bool use_first_moment = false;
  std::string out_dir = ".";
  int workers = 0;  // 0: SO3ORBIT_WORKERS or the hardware count

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Missing fields keep their defaults. Throws ParseError on bad types or
/// unknown fields, UnsupportedVersion on a version mismatch.
ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentConfig& c);

struct SeedResult {
  int index = 0;
  std::uint64_t signal_seed = 0;
  std::uint64_t observation_seed = 0;
  double sigma = 0.0;
  double signal_error = 0.0;
  double distribution_error = 0.0;
  double max_cond_distribution = 0.0;
  double max_cond_signal = 0.0;
  std::vector<double> cond_distribution;  // by band, NaN at index 0
  std::vector<double> cond_signal;        // by band, NaN at indices 0, 1
  std::string status = "ok";              // ok, unstable, failed
  std::string message;
  double seconds = 0.0;
};

struct CellResult {
  int cell = 0;
  int L = 0;
  int R = 0;
  std::string sampler;
  double tau = 0.0;
  double eta = 0.0;
  std::uint64_t n = 0;
  std::optional<double> snr;
  std::optional<double> sigma;
  std::vector<SeedResult> seeds;
  double median_error = 0.0;
  double mean_error = 0.0;
  double median_distribution_error = 0.0;
  double max_cond_distribution = 0.0;
  double max_cond_signal = 0.0;
  int failed = 0;
  double seconds = 0.0;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  /// Least-squares slope of log(median error) against log(n), n-sweep only.
  std::optional<double> slope;
  double seconds = 0.0;

  /// Summary, one row per cell; no runtimes, so reruns are byte-identical
  /// apart from the leading comment line.
  std::string summary_csv(const std::string& stamp) const;
  /// One row per (cell, seed).
  std::string long_csv(const std::string& stamp) const;
  /// cond-table only: median condition numbers by band, columns per R, laid
  /// out like the signal / distribution condition-number tables.
  std::string cond_csv(const std::string& stamp) const;
  json to_json() const;
};

/// Runs every cell on a worker pool; per-seed failures are recorded.
ResultTable run_experiment(const ExperimentConfig& config);

/// Writes <name>.csv, <name>_long.csv, <name>.json (and <name>_cond.csv for
/// cond-table) into config.out_dir; returns the paths written.
std::vector<std::string> write_results(const ResultTable& table);

double median(std::vector<double> v);
/// Slope of the least-squares line through (log x, log y).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace so3orbit
