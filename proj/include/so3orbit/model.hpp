#pragma once

#include <cstdint>
#include <vector>

#include "so3orbit/quadrature.hpp"
#include "so3orbit/rotation.hpp"
#include "so3orbit/signal.hpp"
#include "so3orbit/types.hpp"

namespace so3orbit {

/// I.i.d. standard complex Gaussian coefficients (E|z|^2 = 1). With
/// real_symmetric the m > 0 entries are kept, mirrored onto -m, and the real
/// m = 0 entry is scaled by sqrt(2), so E||x||^2 = R (L+1)^2 in both modes.
Signal random_signal(int L, int R, std::uint64_t seed, bool real_symmetric);

/// Generic distribution coefficients. Band l >= 1 starts as complex Gaussian
/// entries scaled by 1/(2l+1) and is projected onto the real-function
/// subspace, A -> (A + S(A)) / sqrt(2) with S(A)_{a,b} = (-1)^(a-b) conj(A_{-a,-b}),
/// which keeps the entry variance. in_plane zeroes the m' != 0 columns.
/// Bands whose smallest singular value is <= 1e-3 are redrawn (full case) or
/// whose column norm is <= 1e-3 (in-plane case).
Distribution random_distribution(int L, std::uint64_t seed, bool in_plane);

/// Band-limited function on SO(3), f(g) = sum_l (2l+1) Tr(c_l D^l(g)).
/// A Distribution is the special case whose function is a density.
struct SO3Function {
  std::vector<CMatrix> bands;

  SO3Function() = default;
  explicit SO3Function(std::vector<CMatrix> b) : bands(std::move(b)) {}
  static SO3Function constant(cplx value);
  static SO3Function from_distribution(const Distribution& rho) { return SO3Function(rho.bands); }

  int degree() const { return static_cast<int>(bands.size()) - 1; }
  /// wigner must cover degree().
  cplx operator()(const std::vector<CMatrix>& wigner) const;
  cplx operator()(const Rotation& g) const;
};

/// Density value of rho at g through the inversion formula. Real for
/// distributions that satisfy is_real_function().
double density_value(const Distribution& rho, const Rotation& g);

/// Fourier matrices rho_hat(H_l) = int rho(g) D^l(g)^* dg, l = 0..L, of the
/// normalized density rho = |f|^2 / int |f|^2, evaluated on a product grid
/// that integrates band quad_band exactly.
/// Throws std::invalid_argument for a zero f or quad_band < 2 deg(f) + L.
Distribution density_distribution(const SO3Function& f, int L, int quad_band);

struct RecoveryMetrics {
  double relative_error = 0.0;
  std::vector<double> per_band_error;  // ||x_l - xhat_l|| / ||x_l|| (absolute when ||x_l|| = 0)
  double snr = 0.0;
};

/// Frobenius relative error over all bands.
RecoveryMetrics relative_error(const Signal& x, const Signal& xhat);
/// Same metric over bands 1..L (band 0 is fixed to 1 in both).
RecoveryMetrics relative_error(const Distribution& rho, const Distribution& rho_hat);

}  // namespace so3orbit
