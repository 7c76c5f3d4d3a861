#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "so3orbit/harmonics.hpp"
#include "so3orbit/model.hpp"
#include "so3orbit/rng.hpp"

using namespace so3orbit;

namespace {

bool bit_equal(const Signal& a, const Signal& b) {
  if (a.L != b.L || a.R != b.R) return false;
  for (int l = 0; l <= a.L; ++l)
    if (a.bands[l] != b.bands[l]) return false;
  return true;
}

Rotation haar(Rng& rng) {
  return Rotation::from_euler(2 * kPi * rng.uniform(), std::acos(1 - 2 * rng.uniform()),
                              2 * kPi * rng.uniform());
}

}  // namespace

TEST_CASE("Rng is reproducible and roughly standard") {
  Rng a(42, 3, 7), b(42, 3, 7), c(42, 3, 8);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    (void)c;
  }
  CHECK(Rng(42, 3, 7).next() != Rng(42, 3, 8).next());
  Rng r(1);
  double s = 0, s2 = 0, u = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
    u += r.uniform();
  }
  CHECK(std::abs(s / n) < 5 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(u / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("random_signal shapes, determinism and symmetry") {
  const Signal x0 = random_signal(0, 2, 7, false);
  CHECK(x0.bands.size() == 1);
  CHECK(x0.bands[0].rows() == 1);
  CHECK(x0.bands[0].cols() == 2);
  CHECK(x0.bands[0].allFinite());

  CHECK(bit_equal(random_signal(5, 3, 1, false), random_signal(5, 3, 1, false)));
  CHECK_FALSE(bit_equal(random_signal(5, 3, 1, false), random_signal(5, 3, 2, false)));

  const Signal xs = random_signal(5, 3, 1, true);
  CHECK(xs.real_symmetric);
  CHECK(xs.satisfies_real_symmetry(1e-12));
  CHECK_FALSE(random_signal(5, 3, 1, false).satisfies_real_symmetry(1e-3));

  // both modes keep E||x||^2 = R (L+1)^2
  double e_plain = 0, e_sym = 0;
  for (int seed = 0; seed < 400; ++seed) {
    e_plain += std::pow(random_signal(3, 2, seed, false).norm(), 2);
    e_sym += std::pow(random_signal(3, 2, seed, true).norm(), 2);
  }
  CHECK(e_plain / 400 == doctest::Approx(32).epsilon(0.05));
  CHECK(e_sym / 400 == doctest::Approx(32).epsilon(0.05));

  CHECK_THROWS_AS(Signal(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(Signal(2, 0), std::invalid_argument);
}

TEST_CASE("real symmetric signals stay real under rotation") {
  const Signal x = random_signal(6, 2, 4, true);
  Rng rng(8);
  for (int t = 0; t < 20; ++t) CHECK(rotate_signal(x, haar(rng)).satisfies_real_symmetry(1e-10));
}

TEST_CASE("random_distribution") {
  const Distribution d0 = random_distribution(0, 5, false);
  CHECK(d0.bands.size() == 1);
  CHECK(d0.bands[0](0, 0) == cplx(1.0));

  const Distribution full = random_distribution(3, 9, false);
  CHECK(full.bands[0](0, 0) == cplx(1.0));
  for (int l = 1; l <= 3; ++l) {
    Eigen::JacobiSVD<CMatrix> svd(full.bands[l]);
    CHECK(svd.singularValues().minCoeff() > 1e-3);
  }
  CHECK(full.is_real_function(1e-14));

  const Distribution ip = random_distribution(5, 9, true);
  CHECK(ip.in_plane);
  for (int l = 1; l <= 5; ++l) {
    int nonzero = 0;
    for (int q = 0; q < band_dim(l); ++q) nonzero += ip.bands[l].col(q).norm() > 0 ? 1 : 0;
    CHECK(nonzero == 1);
    CHECK(ip.bands[l].col(l).norm() > 1e-3);
  }
  CHECK(ip.is_real_function(1e-14));
}

TEST_CASE("QuadratureGrid integrates Wigner entries") {
  const QuadratureGrid g = QuadratureGrid::for_band(6);
  double total = 0;
  for (int ib = 0; ib < g.n_beta; ++ib) total += g.weight(ib) * g.n_alpha * g.n_gamma;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(g.exact_for_band(6));
  CHECK(g.halved().exact_for_band(6));
  WignerEvaluator ev(6);
  std::vector<CMatrix> acc;
  for (int l = 0; l <= 6; ++l) acc.push_back(CMatrix::Zero(band_dim(l), band_dim(l)));
  for (int ib = 0; ib < g.n_beta; ++ib)
    for (double a : g.alpha)
      for (double c : g.gamma) {
        const auto D = ev.D(a, g.beta[ib], c);
        for (int l = 0; l <= 6; ++l) acc[l] += g.weight(ib) * D[l];
      }
  CHECK(std::abs(acc[0](0, 0) - 1.0) < 1e-12);
  for (int l = 1; l <= 6; ++l) CHECK(acc[l].norm() < 1e-10);
}

TEST_CASE("density_distribution") {
  // f == 1 gives the uniform law
  const Distribution u = density_distribution(SO3Function::constant(1.0), 4, 4);
  CHECK(u.bands[0](0, 0) == cplx(1.0));
  for (int l = 1; l <= 4; ++l) CHECK(u.bands[l].norm() < 1e-10);

  // a random degree-2 f, L = 4 >= 2 deg(f): the truncated inversion is exact
  const Distribution coeff = random_distribution(2, 17, false);
  SO3Function f(coeff.bands);
  const Distribution rho = density_distribution(f, 4, 8);
  CHECK(std::abs(rho.bands[0](0, 0) - 1.0) < 1e-10);
  CHECK(rho.is_real_function(1e-10));
  Rng rng(3);
  double fmass = 0;
  for (const auto& b : coeff.bands) fmass += b.squaredNorm();
  double worst_neg = 0, worst_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    const Rotation g = haar(rng);
    const double v = density_value(rho, g);
    worst_neg = std::min(worst_neg, v);
    // int |f|^2 = sum_l (2l+1) ||c_l||^2 by orthogonality of D entries
    double mass = 0;
    for (int l = 0; l <= 2; ++l) mass += band_dim(l) * coeff.bands[l].squaredNorm();
    worst_mismatch = std::max(worst_mismatch, std::abs(v - std::norm(f(g)) / mass));
  }
  (void)fmass;
  CHECK(worst_neg > -1e-10);
  CHECK(worst_mismatch < 1e-9);

  CHECK_THROWS_AS(density_distribution(SO3Function::constant(0.0), 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(density_distribution(f, 4, 7), std::invalid_argument);
}

TEST_CASE("relative_error") {
  const Signal x = random_signal(3, 2, 11, false);
  CHECK(relative_error(x, x).relative_error == 0.0);
  CHECK(relative_error(x, cplx(2.0) * x).relative_error == doctest::Approx(1.0).epsilon(1e-14));

  Signal e = random_signal(3, 2, 12, false);
  e *= cplx(0.1 * x.norm() / e.norm());
  const RecoveryMetrics m = relative_error(x, x + e);
  CHECK(std::abs(m.relative_error - 0.1) < 1e-12);
  CHECK(m.per_band_error.size() == 4);
  CHECK_THROWS_AS(relative_error(x, random_signal(3, 3, 1, false)), std::invalid_argument);

  const Distribution r = random_distribution(3, 2, false);
  CHECK(relative_error(r, r).relative_error == 0.0);
}
