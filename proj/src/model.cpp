#include "so3orbit/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "so3orbit/harmonics.hpp"
#include "so3orbit/rng.hpp"

namespace so3orbit {

namespace {

double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

CMatrix real_function_part(const CMatrix& a, int l) {
  CMatrix s(a.rows(), a.cols());
  for (int p = -l; p <= l; ++p)
    for (int q = -l; q <= l; ++q)
      s(midx(l, p), midx(l, q)) = parity(p - q) * std::conj(a(midx(l, -p), midx(l, -q)));
  return (a + s) / std::sqrt(2.0);
}

}  // namespace

Signal random_signal(int L, int R, std::uint64_t seed, bool real_symmetric) {
  Signal x(L, R);
  x.real_symmetric = real_symmetric;
  Rng rng(seed, kStreamSignal);
  for (int l = 0; l <= L; ++l) {
    auto& b = x.bands[l];
    for (int s = 0; s < R; ++s)
      for (int m = -l; m <= l; ++m) b(midx(l, m), s) = rng.complex_normal();
    if (!real_symmetric) continue;
    for (int s = 0; s < R; ++s) {
      for (int m = 1; m <= l; ++m) b(midx(l, -m), s) = parity(m) * std::conj(b(midx(l, m), s));
      b(midx(l, 0), s) = std::sqrt(2.0) * b(midx(l, 0), s).real();
    }
  }
  return x;
}

Distribution random_distribution(int L, std::uint64_t seed, bool in_plane) {
  Distribution rho(L);
  rho.in_plane = in_plane;
  Rng rng(seed, kStreamDistribution);
  for (int l = 1; l <= L; ++l) {
    const int d = band_dim(l);
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw std::runtime_error("random_distribution: resampling did not terminate");
      CMatrix a(d, d);
      for (int i = 0; i < d * d; ++i) a.data()[i] = rng.complex_normal() / static_cast<double>(d);
      a = real_function_part(a, l);
      if (in_plane) {
        for (int q = -l; q <= l; ++q)
          if (q != 0) a.col(midx(l, q)).setZero();
        if (a.col(midx(l, 0)).norm() <= 1e-3) continue;
      } else {
        Eigen::JacobiSVD<CMatrix> svd(a);
        if (svd.singularValues().minCoeff() <= 1e-3) continue;
      }
      rho.bands[l] = a;
      break;
    }
  }
  return rho;
}

SO3Function SO3Function::constant(cplx value) {
  CMatrix c(1, 1);
  c(0, 0) = value;
  return SO3Function({c});
}

cplx SO3Function::operator()(const std::vector<CMatrix>& wigner) const {
  cplx v = 0.0;
  for (int l = 0; l <= degree(); ++l) {
    v += static_cast<double>(band_dim(l)) * (bands[l].cwiseProduct(wigner[l].transpose())).sum();
  }
  return v;
}

cplx SO3Function::operator()(const Rotation& g) const {
  return (*this)(WignerEvaluator(std::max(0, degree())).D(g));
}

double density_value(const Distribution& rho, const Rotation& g) {
  return SO3Function::from_distribution(rho)(g).real();
}

Distribution density_distribution(const SO3Function& f, int L, int quad_band) {
  if (L < 0) throw std::invalid_argument("density_distribution: L must be >= 0");
  if (f.bands.empty()) throw std::invalid_argument("density_distribution: empty function");
  double fnorm = 0.0;
  for (const auto& b : f.bands) fnorm += b.squaredNorm();
  if (fnorm == 0.0) throw std::invalid_argument("density_distribution: f is identically zero");
  const int need = 2 * f.degree() + L;
  if (quad_band < need) {
    throw std::invalid_argument("density_distribution: quad_band " + std::to_string(quad_band) +
                                " below required " + std::to_string(need));
  }

  const QuadratureGrid grid = QuadratureGrid::for_band(quad_band);
  WignerEvaluator ev(std::max(L, f.degree()));
  std::vector<CMatrix> acc;
  for (int l = 0; l <= L; ++l) acc.push_back(CMatrix::Zero(band_dim(l), band_dim(l)));
  double mass = 0.0;
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    const double w = grid.weight(ib);
    for (double a : grid.alpha) {
      for (double c : grid.gamma) {
        const auto D = ev.D(a, grid.beta[ib], c);
        const double value = std::norm(f(D)) * w;
        mass += value;
        for (int l = 0; l <= L; ++l) acc[l] += value * D[l].adjoint();
      }
    }
  }
  Distribution rho(L);
  for (int l = 0; l <= L; ++l) rho.bands[l] = acc[l] / mass;
  rho.bands[0](0, 0) = 1.0;
  return rho;
}

RecoveryMetrics relative_error(const Signal& x, const Signal& xhat) {
  if (x.L != xhat.L || x.R != xhat.R) {
    throw std::invalid_argument("relative_error: shape mismatch");
  }
  RecoveryMetrics m;
  double num = 0.0, den = 0.0;
  for (int l = 0; l <= x.L; ++l) {
    const double e = (x.bands[l] - xhat.bands[l]).squaredNorm();
    const double n = x.bands[l].squaredNorm();
    num += e;
    den += n;
    m.per_band_error.push_back(n > 0.0 ? std::sqrt(e / n) : std::sqrt(e));
  }
  m.relative_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return m;
}

RecoveryMetrics relative_error(const Distribution& rho, const Distribution& rho_hat) {
  if (rho.L != rho_hat.L) throw std::invalid_argument("relative_error: band limit mismatch");
  RecoveryMetrics m;
  m.per_band_error.push_back(std::abs(rho.bands[0](0, 0) - rho_hat.bands[0](0, 0)));
  double num = 0.0, den = 0.0;
  for (int l = 1; l <= rho.L; ++l) {
    const double e = (rho.bands[l] - rho_hat.bands[l]).squaredNorm();
    const double n = rho.bands[l].squaredNorm();
    num += e;
    den += n;
    m.per_band_error.push_back(n > 0.0 ? std::sqrt(e / n) : std::sqrt(e));
  }
  m.relative_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return m;
}

}  // namespace so3orbit
