#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "so3orbit/harmonics.hpp"
#include "so3orbit/rng.hpp"
#include "so3orbit/rotation.hpp"
#include "so3orbit/signal.hpp"

namespace so3orbit {

/// A law on SO(3). draw() consumes a generator; rho_hat() gives the
/// population Fourier matrices E[D^l(g)]^* of the same law, computed from the
/// factorized angle expectations (no Monte Carlo).
class RotationSampler {
 public:
  virtual ~RotationSampler() = default;
  virtual Rotation draw(Rng& rng) const = 0;
  virtual std::string tag() const = 0;
  virtual Distribution rho_hat(int L) const = 0;
};

/// alpha, beta, gamma i.i.d. N(0, tau^2), then canonicalized.
class GaussianEulerSampler : public RotationSampler {
 public:
  explicit GaussianEulerSampler(double tau);
  Rotation draw(Rng& rng) const override;
  std::string tag() const override;
  Distribution rho_hat(int L) const override;
  double tau() const { return tau_; }

 private:
  double tau_;
};

/// alpha, gamma ~ U[0, eta pi), beta = acos(1 - 2u). eta = 2 is Haar.
class RestrictedSampler : public RotationSampler {
 public:
  explicit RestrictedSampler(double eta);
  Rotation draw(Rng& rng) const override;
  std::string tag() const override;
  Distribution rho_hat(int L) const override;

 private:
  double eta_;
};

/// alpha ~ U[0, 2pi) independent of (beta, gamma), which follow the tilt law
/// of a Gaussian-Euler sampler with parameter tau. The law is invariant under
/// g -> Rz(t) g, so rho_hat has only its m' = 0 column.
class InplaneSampler : public RotationSampler {
 public:
  explicit InplaneSampler(double tilt_tau = 1.0);
  Rotation draw(Rng& rng) const override;
  std::string tag() const override;
  Distribution rho_hat(int L) const override;

 private:
  double tau_;
};

/// Haar measure.
class UniformSampler : public RotationSampler {
 public:
  Rotation draw(Rng& rng) const override;
  std::string tag() const override { return "uniform"; }
  Distribution rho_hat(int L) const override { return Distribution::uniform(L); }
};

/// Builds a sampler from its CLI name: gaussian-euler (tau), restricted (eta),
/// inplane-uniform (tau = tilt), uniform. Throws std::invalid_argument.
std::unique_ptr<RotationSampler> make_sampler(const std::string& name, double tau, double eta);

struct RotationSample {
  std::vector<Rotation> rotations;
  std::string sampler_tag;
};

/// Rotation i is drawn from its own generator keyed by (seed, i).
RotationSample sample_rotations(const RotationSampler& sampler, std::uint64_t n,
                                std::uint64_t seed);
RotationSample sample_gaussian_euler(double tau, std::uint64_t n, std::uint64_t seed);
RotationSample sample_restricted(double eta, std::uint64_t n, std::uint64_t seed);
RotationSample sample_inplane(double tilt_tau, std::uint64_t n, std::uint64_t seed);
RotationSample sample_uniform(std::uint64_t n, std::uint64_t seed);

/// circular: i.i.d. complex Gaussian, re and im each N(0, sigma^2 / 2).
/// real_symmetric: eps_{-m} = (-1)^m conj(eps_m), eps_0 real N(0, sigma^2),
/// so every coefficient still has E|eps|^2 = sigma^2 and real signals stay real.
enum class NoiseMode { circular, real_symmetric };

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& s);

/// Random access to observations y_i = D(g_i) x + eps_i.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;
  virtual std::uint64_t size() const = 0;
  virtual int L() const = 0;
  virtual int R() const = 0;
  virtual double sigma() const = 0;
  virtual NoiseMode noise_mode() const = 0;
  /// Writes observation i into out (already shaped L x R). Returns
  /// ||eps_i||^2 when known, otherwise NaN.
  virtual double observation(std::uint64_t i, Signal& out) const = 0;
};

/// Materialized observations.
class ObservationSet : public ObservationSource {
 public:
  int L_ = 0;
  int R_ = 0;
  std::vector<Signal> data;
  std::vector<double> noise_energy;  // optional, per observation
  double sigma_ = 0.0;
  double snr = 0.0;
  NoiseMode mode = NoiseMode::circular;

  std::uint64_t size() const override { return data.size(); }
  int L() const override { return L_; }
  int R() const override { return R_; }
  double sigma() const override { return sigma_; }
  NoiseMode noise_mode() const override { return mode; }
  double observation(std::uint64_t i, Signal& out) const override;
};

/// Observations generated on demand from (seed, i); memory does not grow with n.
class ObservationStream : public ObservationSource {
 public:
  ObservationStream(Signal x, std::shared_ptr<const RotationSampler> sampler, std::uint64_t n,
                    double sigma, std::uint64_t seed, NoiseMode mode);

  std::uint64_t size() const override { return n_; }
  int L() const override { return x_.L; }
  int R() const override { return x_.R; }
  double sigma() const override { return sigma_; }
  NoiseMode noise_mode() const override { return mode_; }
  double observation(std::uint64_t i, Signal& out) const override;

 private:
  Signal x_;
  std::shared_ptr<const RotationSampler> sampler_;
  std::uint64_t n_;
  double sigma_;
  std::uint64_t seed_;
  NoiseMode mode_;
  WignerEvaluator wigner_;
};

/// Adds noise draws for observation index `index` to y.
double add_noise(Signal& y, double sigma, std::uint64_t seed, std::uint64_t index, NoiseMode mode);

/// y_i = D(g_i) x + eps_i. The realized snr is ||x|| sqrt(n) / sqrt(sum ||eps_i||^2).
ObservationSet generate_observations(const Signal& x, const RotationSample& rotations,
                                     double sigma, std::uint64_t seed,
                                     NoiseMode mode = NoiseMode::circular);

/// Noise level giving the target SNR: sigma = ||x|| / (snr sqrt(R (L+1)^2)).
double sigma_for_snr(const Signal& x, double snr);

/// (1/n) sum_i D^l(g_i)^*.
CMatrix estimate_rho_hat(const RotationSample& rotations, int ell);
Distribution estimate_distribution(const RotationSample& rotations, int L);

}  // namespace so3orbit
