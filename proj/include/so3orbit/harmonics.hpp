#pragma once

#include <vector>

#include "so3orbit/rotation.hpp"
#include "so3orbit/signal.hpp"
#include "so3orbit/types.hpp"

namespace so3orbit {

/// Clebsch-Gordan coefficient <l1 m1 l2 m2 | l m> (Condon-Shortley phase).
///
/// Evaluated from the Racah factorial sum with log-factorials and explicit
/// sign tracking. Returns exactly 0 outside the selection and triangle rules,
/// including out-of-range orders.
double clebsch_gordan(int l1, int m1, int l2, int m2, int l, int m);

/// Precomputed Clebsch-Gordan coefficients for l1, l2 <= l_max and every
/// coupled l in [|l1-l2|, l1+l2]. Immutable after construction.
class CGTable {
 public:
  explicit CGTable(int l_max);

  int l_max() const { return l_max_; }

  double operator()(int l1, int m1, int l2, int m2, int l, int m) const;

  /// Dense (2l1+1) x (2l2+1) row-major block for the coupling (l1, l2) -> l.
  /// Entry [m1+l1][m2+l2] is <l1 m1 l2 m2 | l, m1+m2> (zero when |m1+m2| > l).
  const double* block(int l1, int l2, int l) const;

  /// Process-wide table covering at least l_max. The returned reference stays
  /// valid for the lifetime of the program.
  static const CGTable& shared(int l_max);

 private:
  std::size_t block_offset(int l1, int l2, int l) const;

  int l_max_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// Projection of a (x) b onto H_{l1}:
///   out[k1] = sum_{k2+k3=k1} <l2 k2 l3 k3 | l1 k1> a[k2] b[k3],
/// where a lives in H_{l2} and b in H_{l3}. Throws std::invalid_argument when
/// (l1, l2, l3) violates the triangle rule.
CVector cg_project(const CVector& a, const CVector& b, int l1, const CGTable& table);
CVector cg_project(const CVector& a, const CVector& b, int l1);

/// Accumulates weight * cg_project(a, b, l1) into out without temporaries.
/// a, b, out are raw pointers to contiguous coefficient vectors.
void cg_project_accumulate(const cplx* a, int l2, const cplx* b, int l3, int l1,
                           const CGTable& table, cplx weight, cplx* out);

/// Wigner small-d matrix d^l(beta), rows m, columns m', both ascending.
RMatrix wigner_small_d(int l, double beta);

/// D^l(g)_{m,m'} = exp(-i m alpha) d^l_{m,m'}(beta) exp(-i m' gamma).
CMatrix wigner_D(int l, const Rotation& g);

/// Evaluates all Wigner matrices up to a band limit with cached factorial
/// coefficients. Raw (non-canonical) Euler angles are accepted; the result is
/// the representation of Rz(alpha) Ry(beta) Rz(gamma) in every case.
class WignerEvaluator {
 public:
  explicit WignerEvaluator(int l_max);

  int l_max() const { return l_max_; }

  std::vector<RMatrix> small_d(double beta) const;
  std::vector<CMatrix> D(double alpha, double beta, double gamma) const;
  std::vector<CMatrix> D(const Rotation& g) const { return D(g.alpha, g.beta, g.gamma); }

 private:
  struct Term {
    int row, col;
    int cos_power, sin_power;
    double coefficient;
  };
  int l_max_;
  std::vector<std::vector<Term>> terms_;
};

/// Band-wise action X_l -> D^l(g) X_l.
Signal rotate_signal(const Signal& x, const Rotation& g);
Signal rotate_signal(const Signal& x, const std::vector<CMatrix>& wigner);

}  // namespace so3orbit
