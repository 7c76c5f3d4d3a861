// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Arguments select a subset, e.g. `acceptance 1 9`.
// SO3ORBIT_ACCEPTANCE_OUT names a directory for the emitted tables.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "exact_cg.hpp"
#include "so3orbit/experiment.hpp"
#include "so3orbit/harmonics.hpp"
#include "so3orbit/model.hpp"
#include "so3orbit/moments.hpp"
#include "so3orbit/recover.hpp"
#include "so3orbit/simulate.hpp"

using namespace so3orbit;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string out_dir() {
  const char* d = std::getenv("SO3ORBIT_ACCEPTANCE_OUT");
  return d ? d : ".";
}

RecoveryOptions oracle_options(int L, int R, bool in_plane) {
  RecoveryOptions o;
  o.L = L;
  o.R = R;
  o.mode = BaseMode::oracle;
  o.in_plane = in_plane;
  return o;
}

Rotation haar(Rng& rng) {
  return Rotation::from_euler(rng.uniform(0, 2 * kPi), std::acos(1 - 2 * rng.uniform()),
                              rng.uniform(0, 2 * kPi));
}

CVector random_vec(Rng& rng, int l) {
  CVector v(band_dim(l));
  for (auto& z : v) z = rng.complex_normal();
  return v;
}

// 1. exact moments, generic distribution, oracle base
void exact_recovery(Outcome& o) {
  const int L = 8, R = 3;
  double worst_x = 0, worst_rho = 0, worst_t = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t0 = Clock::now();
    const Signal x = random_signal(L, R, seed, false);
    const Distribution rho = random_distribution(L, 100 + seed, false);
    const FirstMoment m1 = population_first_moment(rho, x);
    const SecondMoment m2 = population_second_moment(rho, x);
    const Truth truth{x, rho};
    const RecoveryResult r = frequency_march(m1, m2, oracle_options(L, R, false), &truth);
    const double t = since(t0);
    o.require(!r.report.any_failed(), "seed " + std::to_string(seed) + " has a failed stage");
    worst_x = std::max(worst_x, relative_error(x, r.x).relative_error);
    worst_rho = std::max(worst_rho, relative_error(rho, r.rho).relative_error);
    worst_t = std::max(worst_t, t);
  }
  o.require(worst_x < 1e-6, "signal error");
  o.require(worst_rho < 1e-6, "distribution error");
  o.require(worst_t < 60, "runtime");
  o.detail << "L=8 R=3 10 seeds: max signal error " << worst_x << ", max distribution error "
           << worst_rho << ", max " << worst_t << " s/seed";
}

// 2. in-plane exact moments, and the R = 3 counting limit at band 3
void in_plane_recovery(Outcome& o) {
  const int L = 6, R = 4;
  double worst_x = 0, worst_rho = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Signal x = random_signal(L, R, seed, false);
    const Distribution rho = random_distribution(L, 200 + seed, true);
    const FirstMoment m1 = population_first_moment(rho, x);
    const SecondMoment m2 = population_second_moment(rho, x);
    const Truth truth{x, rho};
    const RecoveryResult r = frequency_march(m1, m2, oracle_options(L, R, true), &truth);
    o.require(!r.report.any_failed(), "seed " + std::to_string(seed) + " has a failed stage");
    worst_x = std::max(worst_x, relative_error(x, r.x).relative_error);
    worst_rho = std::max(worst_rho, relative_error(rho, r.rho).relative_error);
  }
  o.require(worst_x < 1e-6 && worst_rho < 1e-6, "in-plane error");

  const Signal x = random_signal(3, 3, 9, false);
  const Distribution rho = random_distribution(3, 209, true);
  const SecondMoment m2 = population_second_moment(rho, x);
  std::string message;
  try {
    solve_signal_band(3, m2, rho, x, oracle_options(3, 3, true));
  } catch (const UnderdeterminedSystem& e) {
    message = e.what();
  }
  o.require(!message.empty(), "R=3 band 3 did not raise UnderdeterminedSystem");
  o.detail << "L=6 R=4 10 seeds: max signal error " << worst_x << ", max distribution error "
           << worst_rho << "; R=3 band 3: \"" << message << "\"";
}

// 3. closed-form moments against the quadrature oracle
void moment_oracle(Outcome& o) {
  const int L = 3, R = 2;
  const auto t0 = Clock::now();
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Distribution rho = random_distribution(L, 300 + seed, false);
    const Signal x = random_signal(L, R, 310 + seed, false);
    const SO3Function dens = SO3Function::from_distribution(rho);
    const QuadratureGrid grid = QuadratureGrid::for_band(3 * L);
    const QuadratureFirst q1 = quadrature_first_moment(dens, x, grid);
    const SecondMoment q2 = quadrature_second_moment(dens, x, grid);
    o.require(q1.warnings.empty() && q2.warnings.empty(), "quadrature warnings");
    worst = std::max(worst, max_abs_diff(q1.moment, population_first_moment(rho, x)));
    worst = std::max(worst, max_abs_diff(q2, population_second_moment(rho, x)));
  }
  const double t = since(t0);
  o.require(worst < 1e-8, "agreement");
  o.require(t < 300, "runtime");
  o.detail << "L=3 R=2 5 seeds: max |closed form - quadrature| " << worst << ", " << t << " s";
}

// 4. pure noise: debiasing removes exactly the sigma^2 contraction
void debias(Outcome& o) {
  const int L = 3, R = 2;
  const std::uint64_t n = 100000;
  const double sigma = 1.0;
  std::shared_ptr<const RotationSampler> s = make_sampler("uniform", 1.0, 1.0);
  ObservationStream obs(Signal::zeros(L, R), s, n, sigma, 4, NoiseMode::real_symmetric);
  const SecondMoment raw = empirical_moments(obs, sigma, false).m2;
  const SecondMoment deb = empirical_moments(obs, sigma, true).m2;

  // per-entry standard error from the single-observation contributions
  std::map<Triple, RMatrix> sum_sq;
  std::map<Triple, CMatrix> sum;
  for (const auto& [t, c] : raw.components) {
    sum_sq[t] = RMatrix::Zero(c.rows(), c.cols());
    sum[t] = CMatrix::Zero(c.rows(), c.cols());
  }
  const Distribution id = Distribution::delta_identity(L);
  Signal y(L, R);
  for (std::uint64_t i = 0; i < n; ++i) {
    obs.observation(i, y);
    const SecondMoment one = population_second_moment(id, y);
    for (const auto& [t, c] : one.components) {
      sum[t] += c;
      sum_sq[t] += c.cwiseAbs2();
    }
  }
  auto stderr_of = [&](const Triple& t) {
    const CMatrix mean = sum.at(t) / double(n);
    RMatrix var = (sum_sq.at(t) - double(n) * mean.cwiseAbs2()) / double(n - 1);
    return RMatrix(var.cwiseMax(0.0) / double(n));  // variance of the mean
  };

  double worst_ratio_hi = 0, worst_ratio_deb = 0, worst_ratio_raw = 0, min_shift = 1e300;
  for (const auto& [t, c] : raw.components) {
    const RMatrix v = stderr_of(t);
    if (t[0] >= 1) {
      const double predicted = std::sqrt(v.sum());
      worst_ratio_hi = std::max(worst_ratio_hi, c.norm() / predicted);
    } else if (t[1] == t[2]) {
      const int l = t[1];
      // contraction sum_k <l k l -k | 0 0> E[eps_k eps_-k], E[eps_k eps_-k] = (-1)^k sigma^2
      double contraction = 0;
      for (int k = -l; k <= l; ++k)
        contraction += so3orbit_oracle::exact_cg(l, k, l, -k, 0, 0) * ((k % 2 == 0) ? 1 : -1) * sigma * sigma;
      for (int s = 0; s < R; ++s) {
        const double sd = std::sqrt(v(0, s * R + s));
        worst_ratio_deb = std::max(worst_ratio_deb, std::abs(deb.components.at(t)(0, s * R + s)) / sd);
        worst_ratio_raw = std::max(worst_ratio_raw, std::abs(c(0, s * R + s) - contraction) / sd);
        min_shift = std::min(min_shift, std::abs(contraction) / sd);
      }
    }
  }
  o.require(worst_ratio_hi < 3, "l1 >= 1 components");
  o.require(worst_ratio_deb < 3, "debiased l1 = 0 diagonal");
  o.require(worst_ratio_raw < 3, "raw l1 = 0 diagonal offset");
  o.detail << "n=1e5 sigma=1: max |M(l1>=1)|/std " << worst_ratio_hi << ", max |debiased diag|/std "
           << worst_ratio_deb << ", max |raw diag - contraction|/std " << worst_ratio_raw
           << " (contraction itself >= " << min_shift << " std)";
}

// 5. variance of the empirical band-1 Fourier matrix
void variance(Outcome& o) {
  const std::uint64_t n = 1000;
  const int reps = 200;
  for (const std::string name : {"uniform", "gaussian-euler"}) {
    auto s = make_sampler(name, 1.0, 1.0);
    const CMatrix truth = s->rho_hat(1).bands[1];
    const double target = (3.0 - truth.squaredNorm()) / double(n);
    double acc = 0;
    for (int r = 0; r < reps; ++r) {
      const RotationSample rot = sample_rotations(*s, n, 5000 + r);
      acc += (estimate_rho_hat(rot, 1) - truth).squaredNorm();
    }
    const double emp = acc / reps;
    const double rel = emp / target - 1;
    o.require(std::abs(rel) < 0.2, name);
    o.detail << name << ": empirical " << emp << " vs " << target << " (" << 100 * rel << "%); ";
  }
  o.detail << "n=1000, 200 repetitions";
}

ExperimentConfig noisy_config(ExperimentKind kind, const std::string& name) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = name;
  c.L = 5;
  c.R = 5;
  c.sampler = "gaussian-euler";
  c.tau = 1.0;
  c.seeds = 5;
  c.seed = 2026;
  c.mode = BaseMode::oracle;
  c.out_dir = out_dir();
  return c;
}

std::string medians(const ResultTable& t) {
  std::ostringstream s;
  for (std::size_t i = 0; i < t.cells.size(); ++i) s << (i ? ", " : "") << t.cells[i].median_error;
  return s.str();
}

// 6. sample-complexity slope
void sample_complexity(Outcome& o) {
  const auto t0 = Clock::now();
  ExperimentConfig c = noisy_config(ExperimentKind::n_sweep, "acceptance_n_sweep");
  c.snr = {0.5};
  c.n = {1000, 3000, 10000, 30000, 100000};
  const ResultTable t = run_experiment(c);
  write_results(t);
  const double secs = since(t0);
  int failed = 0;
  for (const auto& cell : t.cells) failed += cell.failed;
  o.require(failed == 0, "failed seeds");
  o.require(t.slope && *t.slope >= -0.65 && *t.slope <= -0.35, "slope");
  o.require(secs < 1800, "runtime");
  o.detail << "L=5 R=5 SNR=0.5 tau=1, n=1e3..1e5: medians " << medians(t) << "; slope "
           << (t.slope ? *t.slope : NAN) << ", " << secs << " s";
}

bool strictly_increasing(const ResultTable& t) {
  for (std::size_t i = 1; i < t.cells.size(); ++i)
    if (!(t.cells[i].median_error > t.cells[i - 1].median_error)) return false;
  return true;
}

// 7. error grows as the distribution approaches uniform
void non_uniformity(Outcome& o) {
  ExperimentConfig e = noisy_config(ExperimentKind::eta_sweep, "acceptance_eta_sweep");
  e.sampler = "restricted";
  e.snr = {1.0};
  e.n = {20000};
  e.eta_grid = {0.5, 1.0, 1.75};
  const ResultTable te = run_experiment(e);
  write_results(te);
  ExperimentConfig g = noisy_config(ExperimentKind::tau_sweep, "acceptance_tau_sweep");
  g.snr = {1.0};
  g.n = {20000};
  g.tau_grid = {0.5, 1.0, 2.0};
  const ResultTable tg = run_experiment(g);
  write_results(tg);
  o.require(strictly_increasing(te), "eta trend");
  o.require(strictly_increasing(tg), "tau trend");
  o.detail << "n=2e4 SNR=1: eta 0.5/1/1.75 medians " << medians(te) << "; tau 0.5/1/2 medians "
           << medians(tg);
}

// 8. conditioning
void conditioning(Outcome& o) {
  // (a) tall Gaussian matrix against the Marchenko-Pastur edge
  const int rows = 10000, cols = 10;
  Rng rng(8, 0, 0);
  RMatrix G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = rng.normal();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<RMatrix>(G).singularValues();
  const double kappa = sv(0) / sv(cols - 1);
  const double q = std::sqrt(double(cols) / rows);
  const double mp = (1 + q) / (1 - q);
  o.require(kappa < 1.10, "Gaussian kappa");

  // (b) recovery systems at L = 8, R in {3, 5, 8}
  ExperimentConfig c;
  c.kind = ExperimentKind::cond_table;
  c.name = "acceptance_cond";
  c.L = 8;
  c.R_grid = {3, 5, 8};
  c.sampler = "random";
  c.population = true;
  c.seeds = 5;
  c.seed = 2026;
  c.out_dir = out_dir();
  const ResultTable t = run_experiment(c);
  write_results(t);
  double worst = 0;
  bool finite = true;
  for (const auto& cell : t.cells) {
    for (const auto& s : cell.seeds) {
      for (int l = 1; l <= c.L; ++l) {
        const double v = s.cond_distribution[l];
        finite = finite && std::isfinite(v);
        worst = std::max(worst, v);
      }
      for (int l = 2; l <= c.L; ++l) {
        const double v = s.cond_signal[l];
        finite = finite && std::isfinite(v);
        worst = std::max(worst, v);
      }
      finite = finite && s.status != "failed";
    }
  }
  o.require(finite && worst < 1e3, "recovery condition numbers");
  o.detail << "(a) 1e4x10 Gaussian kappa " << kappa << " (Marchenko-Pastur edge ratio " << mp
           << "); (b) L=8 R=3,5,8 5 seeds: max kappa " << worst << ", table in "
           << (std::filesystem::path(out_dir()) / "acceptance_cond_cond.csv").string();
  std::printf("%s", t.cond_csv("acceptance").c_str());
}

// 9. Clebsch-Gordan and Wigner kernels
void kernels(Outcome& o) {
  double orth = 0;
  for (int l1 = 0; l1 <= 6; ++l1)
    for (int l2 = 0; l2 <= 6; ++l2)
      for (int m1 = -l1; m1 <= l1; ++m1)
        for (int m2 = -l2; m2 <= l2; ++m2)
          for (int m1p = -l1; m1p <= l1; ++m1p) {
            const int m2p = m1 + m2 - m1p;
            if (std::abs(m2p) > l2) continue;
            double s = 0;
            for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l)
              s += clebsch_gordan(l1, m1, l2, m2, l, m1 + m2) * clebsch_gordan(l1, m1p, l2, m2p, l, m1 + m2);
            orth = std::max(orth, std::abs(s - ((m1 == m1p) ? 1.0 : 0.0)));
          }
  double exact = 0;
  for (int l1 = 0; l1 <= 4; ++l1)
    for (int l2 = 0; l2 <= 4; ++l2)
      for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l)
        for (int m1 = -l1; m1 <= l1; ++m1)
          for (int m2 = -l2; m2 <= l2; ++m2) {
            if (std::abs(m1 + m2) > l) continue;
            exact = std::max(exact, std::abs(clebsch_gordan(l1, m1, l2, m2, l, m1 + m2) -
                                             so3orbit_oracle::exact_cg(l1, m1, l2, m2, l, m1 + m2)));
          }
  Rng rng(9, 0, 0);
  WignerEvaluator ev(15);
  double unit = 0, hom = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Rotation g1 = haar(rng), g2 = haar(rng);
    const auto D1 = ev.D(g1), D2 = ev.D(g2), D12 = ev.D(g1.compose(g2));
    for (int l = 0; l <= 15; ++l) {
      unit = std::max(unit, (D1[l] * D1[l].adjoint() - CMatrix::Identity(band_dim(l), band_dim(l))).norm());
      hom = std::max(hom, (D12[l] - D1[l] * D2[l]).norm());
    }
  }
  double equi = 0;
  const CGTable& cg = CGTable::shared(8);
  WignerEvaluator ev8(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto D = ev8.D(haar(rng));
    const int l2 = trial % 5, l3 = 1 + (trial / 5) % 4;
    const int l1 = std::abs(l2 - l3) + trial % (2 * std::min(l2, l3) + 1);
    const CVector a = random_vec(rng, l2), b = random_vec(rng, l3);
    equi = std::max(equi, (cg_project(D[l2] * a, D[l3] * b, l1, cg) - D[l1] * cg_project(a, b, l1, cg)).norm());
  }
  o.require(orth < 1e-12, "CG orthogonality");
  o.require(exact < 1e-12, "CG exact oracle");
  o.require(unit < 1e-10, "Wigner unitarity");
  o.require(hom < 1e-9, "Wigner homomorphism");
  o.require(equi < 1e-9, "cg_project equivariance");
  o.detail << "CG orthogonality " << orth << ", exact-oracle gap " << exact << ", unitarity " << unit
           << ", homomorphism " << hom << ", equivariance " << equi;
}

// 10. error against noise level
void noise_monotonicity(Outcome& o) {
  ExperimentConfig c = noisy_config(ExperimentKind::snr_sweep, "acceptance_snr_sweep");
  c.snr = {20, 10, 5, 2, 1, 0.5, 0.2};  // sigma spans two decades, increasing
  c.n = {50000};
  const ResultTable t = run_experiment(c);
  write_results(t);
  bool monotone = true;
  for (std::size_t i = 1; i < t.cells.size(); ++i)
    monotone = monotone && t.cells[i].median_error >= t.cells[i - 1].median_error;
  const double ratio = t.cells.front().median_error / t.cells.back().median_error;
  o.require(monotone, "nondecreasing");
  o.require(ratio < 0.1, "endpoint ratio");
  o.detail << "n=5e4 L=5 R=5, SNR 20..0.2: medians " << medians(t) << "; low/high " << ratio;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> all = {
      {1, exact_recovery}, {2, in_plane_recovery}, {3, moment_oracle}, {4, debias},
      {5, variance},       {6, sample_complexity}, {7, non_uniformity}, {8, conditioning},
      {9, kernels},        {10, noise_monotonicity}};
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
  std::filesystem::create_directories(out_dir());

  int failures = 0;
  for (const auto& [id, fn] : all) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, o.detail.str().c_str(),
                since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
