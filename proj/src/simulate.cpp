#include "so3orbit/simulate.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "so3orbit/reduce.hpp"

namespace so3orbit {

namespace {

double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// E[exp(-i m t)] for t ~ U[0, a)
cplx uniform_phase(int m, double a) {
  if (m == 0) return 1.0;
  const cplx ima(0.0, m * a);
  return (1.0 - std::exp(-ima)) / ima;
}

// E[d^l(beta)] for beta ~ N(0, tau^2). d^l is a trigonometric polynomial of
// degree l in beta, so sampling it on N > 2L points and weighting by the
// truncated characteristic function is exact.
std::vector<RMatrix> gaussian_beta_mean(int L, double tau) {
  WignerEvaluator ev(L);
  const int N = 2 * L + 2;
  std::vector<RMatrix> out;
  for (int l = 0; l <= L; ++l) out.push_back(RMatrix::Zero(band_dim(l), band_dim(l)));
  for (int j = 0; j < N; ++j) {
    const double b = 2.0 * kPi * j / N;
    double w = 1.0;
    for (int k = 1; k <= L; ++k) w += 2.0 * std::exp(-0.5 * k * k * tau * tau) * std::cos(k * b);
    const auto d = ev.small_d(b);
    for (int l = 0; l <= L; ++l) out[l] += (w / N) * d[l];
  }
  return out;
}

// E[d^l(beta)] for beta with density sin(beta)/2 on [0, pi].
std::vector<RMatrix> haar_beta_mean(int L) {
  WignerEvaluator ev(L);
  const int n = 2 * L + 24;
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  std::vector<RMatrix> out;
  for (int l = 0; l <= L; ++l) out.push_back(RMatrix::Zero(band_dim(l), band_dim(l)));
  for (int i = 0; i < n; ++i) {
    double b = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, kPi, i, &b, &w, t);
    const auto d = ev.small_d(b);
    for (int l = 0; l <= L; ++l) out[l] += (0.5 * w * std::sin(b)) * d[l];
  }
  gsl_integration_glfixed_table_free(t);
  return out;
}

// rho_hat = E[D]^* with E[D_{m,m'}] = pa(m) E[d_{m,m'}] pg(m').
template <class PhaseA, class PhaseG>
Distribution factorized_rho(int L, const std::vector<RMatrix>& dmean, PhaseA pa, PhaseG pg) {
  Distribution rho(L);
  for (int l = 1; l <= L; ++l) {
    CMatrix ed(band_dim(l), band_dim(l));
    for (int m = -l; m <= l; ++m)
      for (int mp = -l; mp <= l; ++mp)
        ed(midx(l, m), midx(l, mp)) = pa(m) * dmean[l](midx(l, m), midx(l, mp)) * pg(mp);
    rho.bands[l] = ed.adjoint();
  }
  return rho;
}

}  // namespace

GaussianEulerSampler::GaussianEulerSampler(double tau) : tau_(tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("gaussian-euler: tau must be >= 0");
}

Rotation GaussianEulerSampler::draw(Rng& rng) const {
  const double a = tau_ * rng.normal();
  const double b = tau_ * rng.normal();
  const double g = tau_ * rng.normal();
  return Rotation::from_euler(a, b, g);
}

std::string GaussianEulerSampler::tag() const { return "gaussian-euler(tau=" + fmt(tau_) + ")"; }

Distribution GaussianEulerSampler::rho_hat(int L) const {
  const double t2 = tau_ * tau_;
  auto phase = [t2](int m) { return cplx(std::exp(-0.5 * m * m * t2)); };
  return factorized_rho(L, gaussian_beta_mean(L, tau_), phase, phase);
}

RestrictedSampler::RestrictedSampler(double eta) : eta_(eta) {
  if (!(eta > 0.0) || eta > 2.0) {
    throw std::invalid_argument("restricted: eta must lie in (0, 2], got " + fmt(eta));
  }
}

Rotation RestrictedSampler::draw(Rng& rng) const {
  Rotation r;
  r.alpha = eta_ * kPi * rng.uniform();
  r.beta = std::acos(1.0 - 2.0 * rng.uniform());
  r.gamma = eta_ * kPi * rng.uniform();
  return r;
}

std::string RestrictedSampler::tag() const { return "restricted(eta=" + fmt(eta_) + ")"; }

Distribution RestrictedSampler::rho_hat(int L) const {
  const double a = eta_ * kPi;
  auto phase = [a](int m) { return uniform_phase(m, a); };
  return factorized_rho(L, haar_beta_mean(L), phase, phase);
}

InplaneSampler::InplaneSampler(double tilt_tau) : tau_(tilt_tau) {
  if (!(tilt_tau >= 0.0)) throw std::invalid_argument("inplane-uniform: tau must be >= 0");
}

Rotation InplaneSampler::draw(Rng& rng) const {
  const double a = 2.0 * kPi * rng.uniform();
  const double b = tau_ * rng.normal();
  const double g = tau_ * rng.normal();
  return Rotation::from_euler(a, b, g);
}

std::string InplaneSampler::tag() const { return "inplane-uniform(tau=" + fmt(tau_) + ")"; }

Distribution InplaneSampler::rho_hat(int L) const {
  const double t2 = tau_ * tau_;
  auto pa = [](int m) { return cplx(m == 0 ? 1.0 : 0.0); };
  auto pg = [t2](int m) { return cplx(std::exp(-0.5 * m * m * t2)); };
  Distribution rho = factorized_rho(L, gaussian_beta_mean(L, tau_), pa, pg);
  rho.in_plane = true;
  return rho;
}

Rotation UniformSampler::draw(Rng& rng) const {
  Rotation r;
  r.alpha = 2.0 * kPi * rng.uniform();
  r.beta = std::acos(1.0 - 2.0 * rng.uniform());
  r.gamma = 2.0 * kPi * rng.uniform();
  return r;
}

std::unique_ptr<RotationSampler> make_sampler(const std::string& name, double tau, double eta) {
  if (name == "gaussian-euler") return std::make_unique<GaussianEulerSampler>(tau);
  if (name == "restricted") return std::make_unique<RestrictedSampler>(eta);
  if (name == "inplane-uniform") return std::make_unique<InplaneSampler>(tau);
  if (name == "uniform") return std::make_unique<UniformSampler>();
  throw std::invalid_argument("unknown sampler '" + name +
                              "' (expected gaussian-euler, restricted, inplane-uniform, uniform)");
}

RotationSample sample_rotations(const RotationSampler& sampler, std::uint64_t n,
                                std::uint64_t seed) {
  RotationSample out;
  out.sampler_tag = sampler.tag();
  out.rotations.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Rng rng(seed, kStreamRotation, i);
    out.rotations.push_back(sampler.draw(rng));
  }
  return out;
}

RotationSample sample_gaussian_euler(double tau, std::uint64_t n, std::uint64_t seed) {
  return sample_rotations(GaussianEulerSampler(tau), n, seed);
}

RotationSample sample_restricted(double eta, std::uint64_t n, std::uint64_t seed) {
  return sample_rotations(RestrictedSampler(eta), n, seed);
}

RotationSample sample_inplane(double tilt_tau, std::uint64_t n, std::uint64_t seed) {
  return sample_rotations(InplaneSampler(tilt_tau), n, seed);
}

RotationSample sample_uniform(std::uint64_t n, std::uint64_t seed) {
  return sample_rotations(UniformSampler(), n, seed);
}

std::string to_string(NoiseMode mode) {
  return mode == NoiseMode::circular ? "circular" : "real_symmetric";
}

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "circular") return NoiseMode::circular;
  if (s == "real_symmetric" || s == "real-symmetric") return NoiseMode::real_symmetric;
  throw std::invalid_argument("unknown noise mode '" + s + "'");
}

double ObservationSet::observation(std::uint64_t i, Signal& out) const {
  out = data.at(i);
  return i < noise_energy.size() ? noise_energy[i] : std::nan("");
}

double add_noise(Signal& y, double sigma, std::uint64_t seed, std::uint64_t index,
                 NoiseMode mode) {
  if (sigma == 0.0) return 0.0;
  Rng rng(seed, kStreamNoise, index);
  const double var = sigma * sigma;
  double energy = 0.0;
  for (int l = 0; l <= y.L; ++l) {
    auto& b = y.bands[l];
    for (int s = 0; s < y.R; ++s) {
      if (mode == NoiseMode::circular) {
        for (int m = -l; m <= l; ++m) {
          const cplx e = rng.complex_normal(var);
          b(midx(l, m), s) += e;
          energy += std::norm(e);
        }
      } else {
        const cplx e0 = sigma * rng.normal();
        b(midx(l, 0), s) += e0;
        energy += std::norm(e0);
        for (int m = 1; m <= l; ++m) {
          const cplx e = rng.complex_normal(var);
          b(midx(l, m), s) += e;
          b(midx(l, -m), s) += parity(m) * std::conj(e);
          energy += 2.0 * std::norm(e);
        }
      }
    }
  }
  return energy;
}

ObservationStream::ObservationStream(Signal x, std::shared_ptr<const RotationSampler> sampler,
                                     std::uint64_t n, double sigma, std::uint64_t seed,
                                     NoiseMode mode)
    : x_(std::move(x)),
      sampler_(std::move(sampler)),
      n_(n),
      sigma_(sigma),
      seed_(seed),
      mode_(mode),
      wigner_(x_.L) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("ObservationStream: sigma must be >= 0");
}

double ObservationStream::observation(std::uint64_t i, Signal& out) const {
  Rng rng(seed_, kStreamRotation, i);
  const auto D = wigner_.D(sampler_->draw(rng));
  for (int l = 0; l <= x_.L; ++l) out.bands[l].noalias() = D[l] * x_.bands[l];
  return add_noise(out, sigma_, seed_, i, mode_);
}

ObservationSet generate_observations(const Signal& x, const RotationSample& rotations,
                                     double sigma, std::uint64_t seed, NoiseMode mode) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("generate_observations: sigma must be >= 0");
  ObservationSet obs;
  obs.L_ = x.L;
  obs.R_ = x.R;
  obs.sigma_ = sigma;
  obs.mode = mode;
  WignerEvaluator ev(x.L);
  double energy = 0.0;
  for (std::uint64_t i = 0; i < rotations.rotations.size(); ++i) {
    Signal y = rotate_signal(x, ev.D(rotations.rotations[i]));
    y.real_symmetric = false;
    const double e = add_noise(y, sigma, seed, i, mode);
    obs.noise_energy.push_back(e);
    energy += e;
    obs.data.push_back(std::move(y));
  }
  const double n = static_cast<double>(obs.data.size());
  obs.snr = energy > 0.0 ? x.norm() * std::sqrt(n) / std::sqrt(energy)
                         : std::numeric_limits<double>::infinity();
  return obs;
}

double sigma_for_snr(const Signal& x, double snr) {
  if (!(snr > 0.0)) throw std::invalid_argument("sigma_for_snr: snr must be > 0");
  return x.norm() / (snr * std::sqrt(static_cast<double>(x.coefficient_count())));
}

Distribution estimate_distribution(const RotationSample& rotations, int L) {
  const auto n = rotations.rotations.size();
  if (n == 0) throw std::invalid_argument("estimate_rho_hat: empty rotation sample");
  WignerEvaluator ev(L);
  struct Acc {
    std::vector<CMatrix> s;
    Acc& operator+=(const Acc& o) {
      for (std::size_t l = 0; l < s.size(); ++l) s[l] += o.s[l];
      return *this;
    }
  };
  auto leaf = [&](std::uint64_t b, std::uint64_t e) {
    Acc a;
    for (int l = 0; l <= L; ++l) a.s.push_back(CMatrix::Zero(band_dim(l), band_dim(l)));
    for (std::uint64_t i = b; i < e; ++i) {
      const auto D = ev.D(rotations.rotations[i]);
      for (int l = 0; l <= L; ++l) a.s[l] += D[l].adjoint();
    }
    return a;
  };
  const Acc total = tree_reduce<Acc>(0, n, leaf, 1);
  Distribution rho(L);
  for (int l = 1; l <= L; ++l) rho.bands[l] = total.s[l] / static_cast<double>(n);
  rho.bands[0](0, 0) = 1.0;
  return rho;
}

CMatrix estimate_rho_hat(const RotationSample& rotations, int ell) {
  if (ell < 0) throw std::invalid_argument("estimate_rho_hat: ell must be >= 0");
  return estimate_distribution(rotations, ell).bands[ell];
}

}  // namespace so3orbit
