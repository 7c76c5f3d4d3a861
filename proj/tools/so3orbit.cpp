// so3orbit command-line harness.
//
// Exit codes: 0 success, 2 usage, 3 I/O or parse error, 4 numerical failure
// under --strict, 1 anything else.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "so3orbit/experiment.hpp"
#include "so3orbit/io.hpp"
#include "so3orbit/model.hpp"
#include "so3orbit/moments.hpp"
#include "so3orbit/recover.hpp"
#include "so3orbit/simulate.hpp"

using namespace so3orbit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitStrict = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StrictFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON goes to --out, or to stdout when no path is given; the summary line
// then moves to stderr so stdout stays parseable.
void emit(const json& j, const std::string& out, const std::string& summary) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    std::cerr << summary << '\n';
  } else {
    write_json_file(j, out);
    std::cout << summary << " -> " << out << '\n';
  }
}

std::string sampler_suffix(const RotationSampler& s) { return " sampler=" + s.tag(); }

struct NoiseArgs {
  std::optional<double> sigma;
  std::optional<double> snr;
  std::string mode = "circular";
};

double resolve_sigma(const NoiseArgs& a, const Signal& x) {
  if (a.sigma && a.snr) throw UsageError("give only one of --sigma and --snr");
  if (a.sigma) {
    if (*a.sigma < 0) throw UsageError("--sigma must be nonnegative");
    return *a.sigma;
  }
  if (a.snr) {
    if (!(*a.snr > 0)) throw UsageError("--snr must be positive");
    return sigma_for_snr(x, *a.snr);
  }
  throw UsageError("one of --sigma or --snr is required");
}

NoiseMode resolve_mode(const std::string& s) {
  try {
    return noise_mode_from_string(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--noise-mode: ") + e.what());
  }
}

std::unique_ptr<RotationSampler> resolve_sampler(const std::string& name, double tau, double eta) {
  try {
    return make_sampler(name, tau, eta);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--sampler: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orbit recovery of a band-limited signal and an SO(3) rotation distribution from "
               "first and second moments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "so3orbit 1.0");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random signal or distribution file");
  gen->require_subcommand(1);
  int gen_L = 5, gen_R = 3;
  std::uint64_t gen_seed = 1;
  bool gen_real = false, gen_in_plane = false;
  std::string gen_out, gen_sampler;
  double gen_tau = 1.0, gen_eta = 1.0;
  auto* gen_sig = gen->add_subcommand("signal", "Random signal, i.i.d. complex Gaussian coefficients");
  gen_sig->add_option("--L", gen_L, "Band limit")->check(CLI::NonNegativeNumber);
  gen_sig->add_option("--R", gen_R, "Number of shells")->check(CLI::PositiveNumber);
  gen_sig->add_option("--seed", gen_seed, "Seed");
  gen_sig->add_flag("--real", gen_real, "Real-symmetric coefficients (a real function)");
  gen_sig->add_option("--out", gen_out, "Output file (stdout when omitted)");
  auto* gen_dist = gen->add_subcommand("dist", "Distribution Fourier matrices");
  gen_dist->alias("distribution");
  gen_dist->add_option("--L", gen_L, "Band limit")->check(CLI::NonNegativeNumber);
  gen_dist->add_option("--seed", gen_seed, "Seed");
  gen_dist->add_flag("--in-plane", gen_in_plane, "Keep only the m' = 0 columns");
  gen_dist->add_option("--sampler", gen_sampler,
                       "Exact coefficients of a sampler law instead of a random generic draw");
  gen_dist->add_option("--tau", gen_tau, "Gaussian-Euler / in-plane tilt width");
  gen_dist->add_option("--eta", gen_eta, "Restricted sampler range factor");
  gen_dist->add_option("--out", gen_out, "Output file (stdout when omitted)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write noisy rotated observations of a signal");
  std::string sim_signal, sim_sampler = "gaussian-euler", sim_out;
  double sim_tau = 1.0, sim_eta = 1.0;
  std::uint64_t sim_n = 1000, sim_seed = 1;
  NoiseArgs sim_noise;
  sim->add_option("--signal", sim_signal, "Signal file")->required();
  sim->add_option("--sampler", sim_sampler, "gaussian-euler, restricted, inplane-uniform, uniform");
  sim->add_option("--tau", sim_tau, "Gaussian width");
  sim->add_option("--eta", sim_eta, "Restricted range factor");
  sim->add_option("--n", sim_n, "Number of observations")->check(CLI::PositiveNumber);
  sim->add_option("--sigma", sim_noise.sigma, "Noise standard deviation per coefficient");
  sim->add_option("--snr", sim_noise.snr, "Target SNR, ||x|| / ||eps||");
  sim->add_option("--noise-mode", sim_noise.mode, "circular or real_symmetric");
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--out", sim_out, "Output file (stdout when omitted)");

  // moments
  auto* mom = app.add_subcommand("moments", "Population or empirical first and second moments");
  std::string mom_signal, mom_dist, mom_obs, mom_sampler, mom_out;
  double mom_tau = 1.0, mom_eta = 1.0;
  std::uint64_t mom_n = 0, mom_seed = 1;
  bool mom_no_debias = false;
  NoiseArgs mom_noise;
  mom->add_option("--signal", mom_signal, "Signal file");
  mom->add_option("--dist", mom_dist, "Distribution file (population moments)");
  mom->add_option("--obs", mom_obs, "Observation file (empirical moments, needs --sigma)");
  mom->add_option("--sampler", mom_sampler, "Stream observations from this sampler (with --signal, --n)");
  mom->add_option("--tau", mom_tau, "Gaussian width");
  mom->add_option("--eta", mom_eta, "Restricted range factor");
  mom->add_option("--n", mom_n, "Streamed observation count");
  mom->add_option("--sigma", mom_noise.sigma, "Noise standard deviation");
  mom->add_option("--snr", mom_noise.snr, "Target SNR (streamed mode)");
  mom->add_option("--noise-mode", mom_noise.mode, "circular or real_symmetric (streamed mode)");
  mom->add_option("--seed", mom_seed, "Seed (streamed mode)");
  mom->add_flag("--no-debias", mom_no_debias, "Keep the noise bias");
  mom->add_option("--out", mom_out, "Output file (stdout when omitted)");

  // recover
  auto* rec = app.add_subcommand("recover", "Frequency-marching recovery from moments or observations");
  std::string rec_moments, rec_obs, rec_truth, rec_truth_dist, rec_out;
  std::optional<double> rec_sigma;
  int rec_L = 0;
  bool rec_oracle = false, rec_in_plane = false, rec_strict = false, rec_no_l1 = false,
       rec_first = false;
  double rec_rank_tol = 1e-8, rec_cond = 1e8, rec_solver_tol = 1e-10;
  rec->add_option("--moments", rec_moments, "Moments file");
  rec->add_option("--obs", rec_obs, "Observation file (moments computed on the fly)");
  rec->add_option("--sigma", rec_sigma, "Noise level used to debias raw observations");
  rec->add_option("--L", rec_L, "Recover bands up to L (default: all)")->check(CLI::PositiveNumber);
  rec->add_flag("--oracle-base", rec_oracle, "Take bands 0 and 1 from --truth");
  rec->add_option("--truth", rec_truth, "True signal, for oracle base and error reporting");
  rec->add_option("--truth-dist", rec_truth_dist, "True distribution, for error reporting");
  rec->add_flag("--in-plane", rec_in_plane, "Distribution is in-plane uniform");
  rec->add_flag("--strict", rec_strict, "Exit 4 when any stage fails or is unstable");
  rec->add_flag("--exclude-l1-equal-l", rec_no_l1, "Drop l1 = l rows from the signal systems");
  rec->add_flag("--first-moment-rows", rec_first, "Append first-moment equations");
  rec->add_option("--rank-tol", rec_rank_tol, "Blind base Gram rank tolerance");
  rec->add_option("--unstable-cond", rec_cond, "Condition number flagged as unstable");
  rec->add_option("--solver-tol", rec_solver_tol, "Relative residual reporting threshold");
  rec->add_option("--out", rec_out, "Output prefix: <out>_signal.json, <out>_dist.json, <out>_report.{csv,json}");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a sweep from a config file");
  std::string exp_config, exp_out_dir, exp_name, exp_sampler;
  std::optional<int> exp_L, exp_R, exp_seeds, exp_workers;
  std::optional<std::uint64_t> exp_seed;
  std::vector<double> exp_sigma, exp_snr;
  std::vector<std::uint64_t> exp_n;
  std::optional<double> exp_tau, exp_eta;
  bool exp_in_plane = false, exp_oracle = false, exp_blind = false;
  exp->add_option("config", exp_config, "Experiment config file")->required();
  exp->add_option("--out-dir", exp_out_dir, "Output directory");
  exp->add_option("--name", exp_name, "Output file stem");
  exp->add_option("--L", exp_L, "Band limit")->check(CLI::PositiveNumber);
  exp->add_option("--R", exp_R, "Shells")->check(CLI::PositiveNumber);
  exp->add_option("--seeds", exp_seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  exp->add_option("--seed", exp_seed, "Base seed");
  exp->add_option("--sigma", exp_sigma, "Noise grid");
  exp->add_option("--snr", exp_snr, "SNR grid");
  exp->add_option("--n", exp_n, "Observation-count grid");
  exp->add_option("--sampler", exp_sampler, "Sampler name");
  exp->add_option("--tau", exp_tau, "Gaussian width");
  exp->add_option("--eta", exp_eta, "Restricted range factor");
  exp->add_flag("--in-plane", exp_in_plane, "In-plane recovery");
  exp->add_flag("--oracle-base", exp_oracle, "Oracle base case");
  exp->add_flag("--blind-base", exp_blind, "Blind base case");
  exp->add_option("--workers", exp_workers, "Worker threads (default SO3ORBIT_WORKERS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_sig) {
      Signal x = random_signal(gen_L, gen_R, gen_seed, gen_real);
      emit(to_json(x), gen_out,
           "signal L=" + std::to_string(x.L) + " R=" + std::to_string(x.R) +
               " norm=" + std::to_string(x.norm()) + (gen_real ? " real" : ""));
    } else if (*gen_dist) {
      Distribution rho;
      std::string how;
      if (!gen_sampler.empty()) {
        auto s = resolve_sampler(gen_sampler, gen_tau, gen_eta);
        rho = s->rho_hat(gen_L);
        how = sampler_suffix(*s);
      } else {
        rho = random_distribution(gen_L, gen_seed, gen_in_plane);
        how = " random";
      }
      if (gen_in_plane && !rho.in_plane) throw UsageError("--in-plane needs the inplane-uniform sampler or a random draw");
      emit(to_json(rho), gen_out,
           "distribution L=" + std::to_string(rho.L) + how + (rho.in_plane ? " in-plane" : ""));
    } else if (*sim) {
      const Signal x = load_signal(sim_signal);
      const double sigma = resolve_sigma(sim_noise, x);
      const NoiseMode mode = resolve_mode(sim_noise.mode);
      auto s = resolve_sampler(sim_sampler, sim_tau, sim_eta);
      const RotationSample rot = sample_rotations(*s, sim_n, sim_seed);
      const ObservationSet obs = generate_observations(x, rot, sigma, sim_seed, mode);
      emit(to_json(obs), sim_out,
           "observations n=" + std::to_string(sim_n) + " sigma=" + std::to_string(sigma) +
               " snr=" + std::to_string(obs.snr) + sampler_suffix(*s));
    } else if (*mom) {
      FirstMoment m1;
      SecondMoment m2;
      std::string summary;
      const int sources = int(!mom_dist.empty()) + int(!mom_obs.empty()) + int(!mom_sampler.empty());
      if (sources != 1) throw UsageError("give exactly one of --dist, --obs or --sampler");
      if (!mom_dist.empty()) {
        if (mom_signal.empty()) throw UsageError("--dist needs --signal");
        const Signal x = load_signal(mom_signal);
        const Distribution rho = load_distribution(mom_dist);
        if (rho.L != x.L) throw UsageError("signal and distribution band limits differ");
        m1 = population_first_moment(rho, x);
        m2 = population_second_moment(rho, x);
        summary = "population moments L=" + std::to_string(x.L) + " R=" + std::to_string(x.R);
      } else if (!mom_obs.empty()) {
        if (!mom_noise.sigma) throw UsageError("--obs needs --sigma");
        const ObservationSet obs = load_observations(mom_obs);
        EmpiricalMoments e = empirical_moments(obs, *mom_noise.sigma, !mom_no_debias);
        m1 = std::move(e.m1);
        m2 = std::move(e.m2);
        summary = "empirical moments n=" + std::to_string(obs.size());
      } else {
        if (mom_signal.empty()) throw UsageError("--sampler needs --signal");
        if (mom_n < 1) throw UsageError("--sampler needs --n >= 1");
        const Signal x = load_signal(mom_signal);
        const double sigma = resolve_sigma(mom_noise, x);
        std::shared_ptr<const RotationSampler> s = resolve_sampler(mom_sampler, mom_tau, mom_eta);
        ObservationStream stream(x, s, mom_n, sigma, mom_seed, resolve_mode(mom_noise.mode));
        EmpiricalMoments e = empirical_moments(stream, sigma, !mom_no_debias);
        m1 = std::move(e.m1);
        m2 = std::move(e.m2);
        summary = "empirical moments n=" + std::to_string(mom_n) + " sigma=" + std::to_string(sigma) +
                  sampler_suffix(*s);
      }
      emit(moments_to_json(m1, m2), mom_out, summary);
    } else if (*rec) {
      if (rec_moments.empty() == rec_obs.empty()) throw UsageError("give exactly one of --moments or --obs");
      FirstMoment m1;
      SecondMoment m2;
      if (!rec_moments.empty()) {
        load_moments(rec_moments, m1, m2);
      } else {
        if (!rec_sigma) throw UsageError("--obs needs --sigma");
        const ObservationSet obs = load_observations(rec_obs);
        EmpiricalMoments e = empirical_moments(obs, *rec_sigma, true);
        m1 = std::move(e.m1);
        m2 = std::move(e.m2);
      }
      RecoveryOptions o;
      o.L = rec_L > 0 ? rec_L : m1.L;
      o.R = m1.R;
      o.mode = rec_oracle ? BaseMode::oracle : BaseMode::blind;
      o.in_plane = rec_in_plane;
      o.include_l1_equal_l = !rec_no_l1;
      o.use_first_moment = rec_first;
      o.rank_tolerance = rec_rank_tol;
      o.unstable_condition = rec_cond;
      o.solver_tolerance = rec_solver_tol;
      if (o.L > m1.L) throw UsageError("--L exceeds the band limit of the moments");
      std::optional<Truth> truth;
      if (!rec_truth.empty()) {
        truth = Truth{load_signal(rec_truth), std::nullopt};
        if (!rec_truth_dist.empty()) truth->rho = load_distribution(rec_truth_dist);
      } else if (!rec_truth_dist.empty()) {
        throw UsageError("--truth-dist needs --truth");
      }
      if (rec_oracle && !truth) throw UsageError("--oracle-base needs --truth");
      RecoveryResult res;
      try {
        res = frequency_march(m1, m2, o, truth ? &*truth : nullptr);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      std::cout << res.report.to_csv();
      if (res.report.signal_error) std::cout << "# signal_error " << *res.report.signal_error << '\n';
      if (res.report.distribution_error) {
        std::cout << "# distribution_error " << *res.report.distribution_error << '\n';
      }
      if (!rec_out.empty()) {
        save_signal(res.x, rec_out + "_signal.json");
        save_distribution(res.rho, rec_out + "_dist.json");
        write_text_file(res.report.to_csv(), rec_out + "_report.csv");
        write_json_file(to_json(res.report), rec_out + "_report.json");
      }
      if (rec_strict && (res.report.any_failed() || res.report.any_unstable())) {
        throw StrictFailure("recovery has failed or unstable stages");
      }
    } else if (*exp) {
      ExperimentConfig c;
      try {
        c = experiment_config_from_json(read_json_file(exp_config));
      } catch (const UnsupportedVersion& e) {
        throw UnsupportedVersion(exp_config + ": " + e.what());
      } catch (const ParseError& e) {
        throw ParseError(exp_config + ": " + e.what());
      }
      if (!exp_out_dir.empty()) c.out_dir = exp_out_dir;
      if (!exp_name.empty()) c.name = exp_name;
      if (exp_L) c.L = *exp_L;
      if (exp_R) c.R = *exp_R;
      if (exp_seeds) c.seeds = *exp_seeds;
      if (exp_seed) c.seed = *exp_seed;
      if (!exp_sigma.empty()) {
        c.sigma = exp_sigma;
        c.snr.clear();
      }
      if (!exp_snr.empty()) {
        c.snr = exp_snr;
        c.sigma.clear();
      }
      if (!exp_n.empty()) c.n = exp_n;
      if (!exp_sampler.empty()) c.sampler = exp_sampler;
      if (exp_tau) c.tau = *exp_tau;
      if (exp_eta) c.eta = *exp_eta;
      if (exp_in_plane) c.in_plane = true;
      if (exp_oracle && exp_blind) throw UsageError("--oracle-base and --blind-base exclude each other");
      if (exp_oracle) c.mode = BaseMode::oracle;
      if (exp_blind) c.mode = BaseMode::blind;
      if (exp_workers) c.workers = *exp_workers;
      try {
        c.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const ResultTable t = run_experiment(c);
      for (const auto& p : write_results(t)) std::cout << "wrote " << p << '\n';
      for (const auto& cell : t.cells) {
        std::cout << "cell " << cell.cell << " median_error " << cell.median_error << " failed "
                  << cell.failed << '\n';
      }
      if (t.slope) std::cout << "loglog_slope " << *t.slope << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StrictFailure& e) {
    std::cerr << "strict: " << e.what() << '\n';
    return kExitStrict;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const UnsupportedVersion& e) {
    std::cerr << "unsupported version: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
