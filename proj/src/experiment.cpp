#include "so3orbit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "so3orbit/reduce.hpp"
#include "so3orbit/rng.hpp"

namespace so3orbit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

double finite_or_null_max(double a, double b) {
  if (std::isnan(a)) return b;
  if (std::isnan(b)) return a;
  return std::max(a, b);
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct CellSpec {
  int L, R;
  std::string sampler;
  double tau, eta;
  std::uint64_t n;
  std::optional<double> snr, sigma;
  bool population;
};

std::vector<CellSpec> cells_for(const ExperimentConfig& c) {
  CellSpec base{c.L, c.R, c.sampler, c.tau, c.eta, c.n.empty() ? 0 : c.n[0], std::nullopt,
                std::nullopt, c.population};
  auto noise = [&](CellSpec s, std::size_t i) {
    if (!c.sigma.empty()) {
      s.sigma = c.sigma[i];
    } else {
      s.snr = c.snr[i];
    }
    return s;
  };
  std::vector<CellSpec> out;
  switch (c.kind) {
    case ExperimentKind::snr_sweep: {
      const std::size_t k = c.sigma.empty() ? c.snr.size() : c.sigma.size();
      for (std::size_t i = 0; i < k; ++i) out.push_back(noise(base, i));
      break;
    }
    case ExperimentKind::n_sweep:
      for (std::uint64_t n : c.n) {
        CellSpec s = noise(base, 0);
        s.n = n;
        out.push_back(s);
      }
      break;
    case ExperimentKind::eta_sweep:
      for (double e : c.eta_grid) {
        CellSpec s = noise(base, 0);
        s.sampler = "restricted";
        s.eta = e;
        out.push_back(s);
      }
      break;
    case ExperimentKind::tau_sweep:
      for (double t : c.tau_grid) {
        CellSpec s = noise(base, 0);
        s.sampler = "gaussian-euler";
        s.tau = t;
        out.push_back(s);
      }
      break;
    case ExperimentKind::cond_table:
      for (int R : c.R_grid) {
        CellSpec s = base;
        s.R = R;
        s.population = true;
        s.n = 0;
        out.push_back(s);
      }
      break;
    case ExperimentKind::single_run:
      out.push_back(c.population ? base : noise(base, 0));
      if (c.population) out.back().n = 0;
      break;
  }
  return out;
}

SeedResult run_seed(const ExperimentConfig& c, const CellSpec& cell, int k, int inner_workers) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedResult r;
  r.index = k;
  r.signal_seed = Rng(c.seed, kStreamExperiment, static_cast<std::uint64_t>(k)).next();
  r.observation_seed = Rng(c.seed, kStreamExperiment, (1ull << 32) + k).next();
  r.signal_error = kNaN;
  r.distribution_error = kNaN;
  r.max_cond_distribution = kNaN;
  r.max_cond_signal = kNaN;
  try {
    const Signal x = random_signal(cell.L, cell.R, r.signal_seed, c.real_signal);
    std::shared_ptr<const RotationSampler> sampler;
    Distribution rho;
    if (cell.sampler == "random") {
      rho = random_distribution(cell.L, Rng(c.seed, kStreamExperiment, (2ull << 32) + k).next(),
                                c.in_plane);
    } else {
      sampler = make_sampler(cell.sampler, cell.tau, cell.eta);
      rho = sampler->rho_hat(cell.L);
    }
    FirstMoment m1;
    SecondMoment m2;
    if (cell.population) {
      r.sigma = 0.0;
      m1 = population_first_moment(rho, x);
      m2 = population_second_moment(rho, x);
    } else {
      r.sigma = cell.sigma ? *cell.sigma : sigma_for_snr(x, *cell.snr);
      ObservationStream stream(x, sampler, cell.n, r.sigma, r.observation_seed, c.noise);
      EmpiricalMoments e = empirical_moments(stream, r.sigma, true, inner_workers);
      m1 = std::move(e.m1);
      m2 = std::move(e.m2);
    }
    RecoveryOptions o;
    o.L = cell.L;
    o.R = cell.R;
    o.mode = c.mode;
    o.in_plane = c.in_plane;
    o.include_l1_equal_l = c.include_l1_equal_l;
    o.use_first_moment = c.use_first_moment;
    const Truth truth{x, rho};
    const RecoveryResult res = frequency_march(m1, m2, o, &truth);
    r.signal_error = *res.report.signal_error;
    r.distribution_error = *res.report.distribution_error;
    r.cond_distribution.assign(cell.L + 1, kNaN);
    r.cond_signal.assign(cell.L + 1, kNaN);
    for (const auto& st : res.report.stages) {
      if (st.kind == "distribution" && st.status != "failed") {
        r.cond_distribution[st.band] = st.cond;
        r.max_cond_distribution = finite_or_null_max(r.max_cond_distribution, st.cond);
      } else if (st.kind == "signal" && st.status != "failed") {
        r.cond_signal[st.band] = st.cond;
        r.max_cond_signal = finite_or_null_max(r.max_cond_signal, st.cond);
      }
      if (st.status == "failed") {
        r.status = "failed";
        if (r.message.empty()) r.message = st.message;
      } else if (st.status == "unstable" && r.status == "ok") {
        r.status = "unstable";
        r.message = st.message;
      }
    }
  } catch (const std::exception& e) {
    r.status = "failed";
    r.message = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

const std::set<std::string> kConfigKeys{
    "format_version", "kind",     "experiment",   "name",       "L",
    "R",              "sampler",  "tau",          "eta",        "snr",
    "sigma",          "n",        "eta_grid",     "tau_grid",   "R_grid",
    "seeds",          "seed",     "base",         "in_plane",   "real_signal",
    "noise_mode",     "population", "include_l1_equal_l", "use_first_moment", "out_dir",
    "workers"};

template <class T>
std::vector<T> grid(const json& v, const std::string& key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ParseError("experiment config: field '" + key + "' has the wrong type");
  }
}

template <class T>
T scalar(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError("experiment config: field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::snr_sweep: return "snr-sweep";
    case ExperimentKind::n_sweep: return "n-sweep";
    case ExperimentKind::eta_sweep: return "eta-sweep";
    case ExperimentKind::tau_sweep: return "tau-sweep";
    case ExperimentKind::cond_table: return "cond-table";
    case ExperimentKind::single_run: return "single-run";
  }
  return "single-run";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::snr_sweep, ExperimentKind::n_sweep, ExperimentKind::eta_sweep,
                 ExperimentKind::tau_sweep, ExperimentKind::cond_table, ExperimentKind::single_run}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw std::invalid_argument("experiment config: " + m); };
  if (L < 1) bad("L must be >= 1");
  if (R < 1) bad("R must be >= 1");
  if (seeds < 1) bad("seeds must be >= 1");
  if (workers < 0) bad("workers must be >= 0");
  const bool noisy = kind != ExperimentKind::cond_table &&
                     !(kind == ExperimentKind::single_run && population);
  if (noisy) {
    if (snr.empty() && sigma.empty()) bad("snr or sigma grid required");
    for (double s : snr)
      if (!(s > 0)) bad("snr values must be positive");
    for (double s : sigma)
      if (!(s >= 0)) bad("sigma values must be nonnegative");
    if (n.empty()) bad("n grid must be nonempty");
    for (auto v : n)
      if (v < 1) bad("n values must be >= 1");
  }
  if (kind == ExperimentKind::eta_sweep && eta_grid.empty()) bad("eta_grid must be nonempty");
  if (kind == ExperimentKind::tau_sweep && tau_grid.empty()) bad("tau_grid must be nonempty");
  if (kind == ExperimentKind::cond_table) {
    if (R_grid.empty()) bad("R_grid must be nonempty");
    for (int r : R_grid)
      if (r < 1) bad("R_grid values must be >= 1");
  }
  if (sampler == "random") {
    if (noisy) bad("sampler 'random' needs population moments (cond-table or population single-run)");
  } else {
    make_sampler(sampler, tau, eta);
  }
  for (double e : eta_grid)
    if (!(e > 0 && e <= 2)) bad("eta_grid values must lie in (0, 2]");
  for (double t : tau_grid)
    if (!(t > 0)) bad("tau_grid values must be positive");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("experiment config: expected an object");
  if (document_kind(j) != "experiment") {
    throw ParseError("experiment config: kind must be 'experiment'");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kConfigKeys.count(it.key())) throw ParseError("experiment config: unknown field '" + it.key() + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.kind = experiment_kind_from_string(scalar<std::string>(j["experiment"], "experiment"));
    if (j.contains("base")) {
      const auto b = scalar<std::string>(j["base"], "base");
      if (b == "oracle" || b == "oracle-base") {
        c.mode = BaseMode::oracle;
      } else if (b == "blind" || b == "blind-base") {
        c.mode = BaseMode::blind;
      } else {
        throw ParseError("experiment config: base must be 'oracle' or 'blind'");
      }
    }
    if (j.contains("noise_mode")) c.noise = noise_mode_from_string(scalar<std::string>(j["noise_mode"], "noise_mode"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  if (j.contains("name")) c.name = scalar<std::string>(j["name"], "name");
  if (j.contains("L")) c.L = scalar<int>(j["L"], "L");
  if (j.contains("R")) c.R = scalar<int>(j["R"], "R");
  if (j.contains("sampler")) c.sampler = scalar<std::string>(j["sampler"], "sampler");
  if (j.contains("tau")) c.tau = scalar<double>(j["tau"], "tau");
  if (j.contains("eta")) c.eta = scalar<double>(j["eta"], "eta");
  if (j.contains("snr")) c.snr = grid<double>(j["snr"], "snr");
  if (j.contains("sigma")) c.sigma = grid<double>(j["sigma"], "sigma");
  if (j.contains("n")) c.n = grid<std::uint64_t>(j["n"], "n");
  if (j.contains("eta_grid")) c.eta_grid = grid<double>(j["eta_grid"], "eta_grid");
  if (j.contains("tau_grid")) c.tau_grid = grid<double>(j["tau_grid"], "tau_grid");
  if (j.contains("R_grid")) c.R_grid = grid<int>(j["R_grid"], "R_grid");
  if (j.contains("seeds")) c.seeds = scalar<int>(j["seeds"], "seeds");
  if (j.contains("seed")) c.seed = scalar<std::uint64_t>(j["seed"], "seed");
  if (j.contains("in_plane")) c.in_plane = scalar<bool>(j["in_plane"], "in_plane");
  if (j.contains("real_signal")) c.real_signal = scalar<bool>(j["real_signal"], "real_signal");
  if (j.contains("population")) c.population = scalar<bool>(j["population"], "population");
  if (j.contains("include_l1_equal_l")) c.include_l1_equal_l = scalar<bool>(j["include_l1_equal_l"], "include_l1_equal_l");
  if (j.contains("use_first_moment")) c.use_first_moment = scalar<bool>(j["use_first_moment"], "use_first_moment");
  if (j.contains("out_dir")) c.out_dir = scalar<std::string>(j["out_dir"], "out_dir");
  if (j.contains("workers")) c.workers = scalar<int>(j["workers"], "workers");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "experiment";
  j["experiment"] = to_string(c.kind);
  j["name"] = c.name;
  j["L"] = c.L;
  j["R"] = c.R;
  j["sampler"] = c.sampler;
  j["tau"] = c.tau;
  j["eta"] = c.eta;
  j["snr"] = c.snr;
  j["sigma"] = c.sigma;
  j["n"] = c.n;
  j["eta_grid"] = c.eta_grid;
  j["tau_grid"] = c.tau_grid;
  j["R_grid"] = c.R_grid;
  j["seeds"] = c.seeds;
  j["seed"] = c.seed;
  j["base"] = c.mode == BaseMode::oracle ? "oracle" : "blind";
  j["in_plane"] = c.in_plane;
  j["real_signal"] = c.real_signal;
  j["noise_mode"] = to_string(c.noise);
  j["population"] = c.population;
  j["include_l1_equal_l"] = c.include_l1_equal_l;
  j["use_first_moment"] = c.use_first_moment;
  j["out_dir"] = c.out_dir;
  j["workers"] = c.workers;
  return j;
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double d) { return std::isnan(d); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++k;
  }
  if (k < 2) return kNaN;
  const double den = k * sxx - sx * sx;
  return den != 0 ? (k * sxy - sx * sy) / den : kNaN;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CellSpec> specs = cells_for(config);
  const int S = config.seeds;
  const std::size_t tasks = specs.size() * static_cast<std::size_t>(S);
  const int pool = std::max(1, std::min<int>(config.workers > 0 ? config.workers : default_workers(),
                                             static_cast<int>(tasks)));
  const int inner = pool > 1 ? 1 : (config.workers > 0 ? config.workers : 0);

  std::vector<SeedResult> results(tasks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      results[t] = run_seed(config, specs[t / S], static_cast<int>(t % S), inner);
    }
  };
  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < pool; ++w) threads.emplace_back(work);
    for (auto& th : threads) th.join();
  }

  ResultTable table;
  table.config = config;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const CellSpec& s = specs[c];
    CellResult cell;
    cell.cell = static_cast<int>(c);
    cell.L = s.L;
    cell.R = s.R;
    cell.sampler = s.sampler;
    cell.tau = s.tau;
    cell.eta = s.eta;
    cell.n = s.n;
    cell.snr = s.snr;
    cell.sigma = s.sigma;
    cell.max_cond_distribution = kNaN;
    cell.max_cond_signal = kNaN;
    std::vector<double> errs, derrs;
    double sum = 0;
    int finite = 0;
    for (int k = 0; k < S; ++k) {
      SeedResult& r = results[c * S + k];
      if (r.status == "failed") ++cell.failed;
      errs.push_back(r.signal_error);
      derrs.push_back(r.distribution_error);
      if (std::isfinite(r.signal_error)) {
        sum += r.signal_error;
        ++finite;
      }
      cell.max_cond_distribution = finite_or_null_max(cell.max_cond_distribution, r.max_cond_distribution);
      cell.max_cond_signal = finite_or_null_max(cell.max_cond_signal, r.max_cond_signal);
      cell.seconds += r.seconds;
      cell.seeds.push_back(std::move(r));
    }
    cell.median_error = median(errs);
    cell.mean_error = finite > 0 ? sum / finite : kNaN;
    cell.median_distribution_error = median(derrs);
    table.cells.push_back(std::move(cell));
  }
  if (config.kind == ExperimentKind::n_sweep) {
    std::vector<double> xs, ys;
    for (const auto& c : table.cells) {
      xs.push_back(static_cast<double>(c.n));
      ys.push_back(c.median_error);
    }
    table.slope = loglog_slope(xs, ys);
  }
  table.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return table;
}

std::string ResultTable::summary_csv(const std::string& stamp) const {
  std::ostringstream o;
  o << "# so3orbit " << to_string(config.kind) << ' ' << config.name << ' ' << stamp << '\n';
  o << "cell,kind,L,R,sampler,tau,eta,n,snr,sigma,seeds,failed,median_error,mean_error,"
       "median_distribution_error,max_cond_distribution,max_cond_signal,errors\n";
  for (const auto& c : cells) {
    std::string errs;
    for (std::size_t k = 0; k < c.seeds.size(); ++k) {
      if (k) errs += ';';
      errs += fmt(c.seeds[k].signal_error);
    }
    o << c.cell << ',' << to_string(config.kind) << ',' << c.L << ',' << c.R << ',' << c.sampler
      << ',' << fmt(c.tau) << ',' << fmt(c.eta) << ',' << c.n << ',' << opt(c.snr) << ','
      << opt(c.sigma) << ',' << c.seeds.size() << ',' << c.failed << ',' << fmt(c.median_error)
      << ',' << fmt(c.mean_error) << ',' << fmt(c.median_distribution_error) << ','
      << fmt(c.max_cond_distribution) << ',' << fmt(c.max_cond_signal) << ',' << errs << '\n';
  }
  return o.str();
}

std::string ResultTable::long_csv(const std::string& stamp) const {
  std::ostringstream o;
  o << "# so3orbit " << to_string(config.kind) << ' ' << config.name << ' ' << stamp << '\n';
  o << "cell,L,R,sampler,tau,eta,n,snr,sigma,seed,signal_seed,observation_seed,noise_sigma,"
       "signal_error,distribution_error,max_cond_distribution,max_cond_signal,status\n";
  for (const auto& c : cells) {
    for (const auto& r : c.seeds) {
      o << c.cell << ',' << c.L << ',' << c.R << ',' << c.sampler << ',' << fmt(c.tau) << ','
        << fmt(c.eta) << ',' << c.n << ',' << opt(c.snr) << ',' << opt(c.sigma) << ',' << r.index
        << ',' << r.signal_seed << ',' << r.observation_seed << ',' << fmt(r.sigma) << ','
        << fmt(r.signal_error) << ',' << fmt(r.distribution_error) << ','
        << fmt(r.max_cond_distribution) << ',' << fmt(r.max_cond_signal) << ',' << r.status << '\n';
    }
  }
  return o.str();
}

std::string ResultTable::cond_csv(const std::string& stamp) const {
  std::ostringstream o;
  o << "# so3orbit cond-table " << config.name << ' ' << stamp << '\n';
  o << "band";
  for (const auto& c : cells) o << ",signal_R" << c.R;
  for (const auto& c : cells) o << ",distribution_R" << c.R;
  o << '\n';
  for (int l = 1; l <= config.L; ++l) {
    o << l;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& c : cells) {
        if (pass == 0 && l < 2) {
          o << ",-";
          continue;
        }
        std::vector<double> v;
        for (const auto& r : c.seeds) {
          const auto& src = pass == 0 ? r.cond_signal : r.cond_distribution;
          if (static_cast<int>(src.size()) > l) v.push_back(src[l]);
        }
        o << ',' << fmt(median(v));
      }
    }
    o << '\n';
  }
  return o.str();
}

json ResultTable::to_json() const {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "experiment_result";
  j["config"] = so3orbit::to_json(config);
  j["seconds"] = seconds;
  if (slope) j["loglog_slope"] = num_or_null(*slope);
  json arr = json::array();
  for (const auto& c : cells) {
    json e;
    e["cell"] = c.cell;
    e["L"] = c.L;
    e["R"] = c.R;
    e["sampler"] = c.sampler;
    e["tau"] = c.tau;
    e["eta"] = c.eta;
    e["n"] = c.n;
    e["snr"] = c.snr ? json(*c.snr) : json(nullptr);
    e["sigma"] = c.sigma ? json(*c.sigma) : json(nullptr);
    e["median_error"] = num_or_null(c.median_error);
    e["mean_error"] = num_or_null(c.mean_error);
    e["median_distribution_error"] = num_or_null(c.median_distribution_error);
    e["max_cond_distribution"] = num_or_null(c.max_cond_distribution);
    e["max_cond_signal"] = num_or_null(c.max_cond_signal);
    e["failed"] = c.failed;
    e["seconds"] = c.seconds;
    json seeds = json::array();
    for (const auto& r : c.seeds) {
      json s;
      s["seed"] = r.index;
      s["signal_seed"] = r.signal_seed;
      s["observation_seed"] = r.observation_seed;
      s["noise_sigma"] = r.sigma;
      s["signal_error"] = num_or_null(r.signal_error);
      s["distribution_error"] = num_or_null(r.distribution_error);
      json cd = json::array(), cs = json::array();
      for (double v : r.cond_distribution) cd.push_back(num_or_null(v));
      for (double v : r.cond_signal) cs.push_back(num_or_null(v));
      s["cond_distribution"] = std::move(cd);
      s["cond_signal"] = std::move(cs);
      s["status"] = r.status;
      s["message"] = r.message;
      s["seconds"] = r.seconds;
      seeds.push_back(std::move(s));
    }
    e["seeds"] = std::move(seeds);
    arr.push_back(std::move(e));
  }
  j["cells"] = std::move(arr);
  return j;
}

std::vector<std::string> write_results(const ResultTable& table) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(table.config.out_dir, ec);
  if (ec) throw IoError("cannot create '" + table.config.out_dir + "': " + ec.message());
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const fs::path dir(table.config.out_dir);
  const std::string base = table.config.name;
  std::vector<std::string> paths;
  auto put = [&](const std::string& file, const std::string& text) {
    const std::string p = (dir / file).string();
    write_text_file(text, p);
    paths.push_back(p);
  };
  put(base + ".csv", table.summary_csv(stamp));
  put(base + "_long.csv", table.long_csv(stamp));
  if (table.config.kind == ExperimentKind::cond_table) put(base + "_cond.csv", table.cond_csv(stamp));
  const std::string jp = (dir / (base + ".json")).string();
  write_json_file(table.to_json(), jp);
  paths.push_back(jp);
  return paths;
}

}  // namespace so3orbit
