#pragma once

#include <vector>

namespace so3orbit {

/// Product rule for integrals over SO(3) with Haar measure of total mass 1:
/// trapezoid in alpha and gamma, Gauss-Legendre in cos(beta).
///
/// A grid integrates every function of band <= B exactly when
/// n_alpha, n_gamma >= B + 1 and 2 n_beta - 1 >= B.
struct QuadratureGrid {
  int n_alpha = 0;
  int n_beta = 0;
  int n_gamma = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> beta_weight;  // sums to 1
  std::vector<double> gamma;

  QuadratureGrid() = default;
  QuadratureGrid(int n_alpha, int n_beta, int n_gamma);

  /// Default orders (2B+2, B+2, 2B+2): exact at band B and still exact after
  /// halving, so the halving diagnostic stays quiet on resolved integrands.
  static QuadratureGrid for_band(int B);

  /// Orders divided by two (rounded up, at least 1).
  QuadratureGrid halved() const;
  bool exact_for_band(int B) const;
  /// Largest band integrated exactly.
  int exact_band() const;

  std::size_t size() const {
    return static_cast<std::size_t>(n_alpha) * n_beta * n_gamma;
  }
  double weight(int ib) const {
    return beta_weight[ib] / (static_cast<double>(n_alpha) * n_gamma);
  }
};

}  // namespace so3orbit
