#pragma once

#include <vector>

#include "so3orbit/types.hpp"

namespace so3orbit {

/// Band-limited signal on R spherical shells: bands[l] is the (2l+1) x R
/// matrix of spherical-harmonic coefficients x^l_m[s].
struct Signal {
  int L = 0;
  int R = 0;
  bool real_symmetric = false;
  std::vector<CMatrix> bands;

  Signal() = default;
  Signal(int L, int R);

  static Signal zeros(int L, int R) { return Signal(L, R); }

  /// Column s of band l.
  CVector shell(int l, int s) const { return bands[l].col(s); }

  double norm() const;
  /// Total number of complex coefficients, R (L+1)^2.
  int coefficient_count() const { return R * (L + 1) * (L + 1); }
  /// Bands 0..l_max of this signal.
  Signal truncated(int l_max) const;

  /// Checks x^l_{-m}[s] = (-1)^m conj(x^l_m[s]).
  bool satisfies_real_symmetry(double tol) const;

  Signal& operator+=(const Signal& o);
  Signal& operator-=(const Signal& o);
  Signal& operator*=(cplx a);
};

Signal operator+(Signal a, const Signal& b);
Signal operator-(Signal a, const Signal& b);
Signal operator*(cplx a, Signal b);

/// Fourier matrices of a distribution on SO(3), bands[l] = rho_hat(H_l),
/// (2l+1) x (2l+1), with bands[0] = [1].
///
/// Convention: rho_hat(H_l) = E_rho[ D^l(g)^* ] (adjoint), so the expected
/// action on a band is E[D^l(g)] = rho_hat(H_l)^*. An in-plane uniform
/// distribution (invariant under g -> Rz(t) g) has only its m' = 0 column
/// nonzero.
struct Distribution {
  int L = 0;
  bool in_plane = false;
  std::vector<CMatrix> bands;

  Distribution() = default;
  explicit Distribution(int L);

  static Distribution uniform(int L);
  /// Point mass at the identity rotation: every band is the identity.
  static Distribution delta_identity(int L);

  Distribution truncated(int l_max) const;
  /// Checks rho_hat_{-a,-b} = (-1)^(a-b) conj(rho_hat_{a,b}), which holds
  /// exactly when the underlying function on SO(3) is real valued.
  bool is_real_function(double tol) const;
};

}  // namespace so3orbit
