#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "so3orbit/model.hpp"
#include "so3orbit/quadrature.hpp"
#include "so3orbit/signal.hpp"
#include "so3orbit/simulate.hpp"

namespace so3orbit {

/// Band l holds rho_hat(H_l)^* X_l, shape (2l+1) x R.
using FirstMoment = Signal;

using Triple = std::array<int, 3>;

/// Second moment in isotypic components. components[{l1,l2,l3}] is a
/// (2l1+1) x (R*R) matrix, entry (m + l1, s2*R + s3) =
///   sum_{k2+k3=m} <l2 k2 l3 k3 | l1 m> E[y^{l2}_{k2}[s2] y^{l3}_{k3}[s3]]
/// (bilinear, no conjugation). Every triple with l1,l2,l3 <= L obeying the
/// triangle rule is present.
struct SecondMoment {
  int L = 0;
  int R = 0;
  std::map<Triple, CMatrix> components;
  double sigma_used = 0.0;
  std::optional<std::uint64_t> n_used;  // empty for population moments
  std::vector<std::string> warnings;

  static std::vector<Triple> admissible_triples(int L);
  static SecondMoment zeros(int L, int R);

  const CMatrix& at(int l1, int l2, int l3) const;
  CMatrix& at(int l1, int l2, int l3);
  cplx operator()(int l1, int l2, int l3, int m, int s2, int s3) const {
    return at(l1, l2, l3)(midx(l1, m), s2 * R + s3);
  }
  bool has(int l1, int l2, int l3) const { return components.count({l1, l2, l3}) != 0; }
};

/// Largest absolute entry difference over all components (shapes must match).
double max_abs_diff(const SecondMoment& a, const SecondMoment& b);
double max_abs_diff(const FirstMoment& a, const FirstMoment& b);

FirstMoment population_first_moment(const Distribution& rho, const Signal& x);
/// Component (l1,l2,l3)[:, s2, s3] = rho_hat(H_l1)^* cg_project(x^{l2}[s2], x^{l3}[s3], l1).
SecondMoment population_second_moment(const Distribution& rho, const Signal& x);

struct QuadratureFirst {
  FirstMoment moment;
  std::vector<std::string> warnings;
};

/// int rho(g) D(g) x dg on the grid. A warning is recorded when the grid is
/// not exact for band deg(rho) + L, or when the halved grid changes any entry
/// by more than 1e-6.
QuadratureFirst quadrature_first_moment(const SO3Function& rho_density, const Signal& x,
                                        const QuadratureGrid& grid);
/// int rho(g) cg_project((gx)^{l2}[s2], (gx)^{l3}[s3], l1) dg; warnings as
/// above (needed band deg(rho) + 2L) go into SecondMoment::warnings.
SecondMoment quadrature_second_moment(const SO3Function& rho_density, const Signal& x,
                                      const QuadratureGrid& grid);

struct EmpiricalMoments {
  FirstMoment m1;
  SecondMoment m2;
  /// Mean ||eps_i||^2 when the source knows its noise draws, else NaN.
  double mean_noise_energy = 0.0;
};

/// One pass over the observations (tree summation, result independent of
/// the worker count). With debias the noise bias for sigma and the source's
/// noise mode is removed from the second moment.
EmpiricalMoments empirical_moments(const ObservationSource& obs, double sigma, bool debias = true,
                                   int workers = 0);
FirstMoment empirical_first_moment(const ObservationSource& obs, int workers = 0);
SecondMoment empirical_second_moment(const ObservationSource& obs, double sigma, int workers = 0);

/// E[eps eps^T] contracted onto component (0,l,l)[0,s,s]: zero for circular
/// noise, (-1)^l sqrt(2l+1) sigma^2 for real-symmetric noise. All other
/// components carry no bias.
double noise_bias(int l, double sigma, NoiseMode mode);
void debias_second_moment(SecondMoment& m2, double sigma, NoiseMode mode);

}  // namespace so3orbit
