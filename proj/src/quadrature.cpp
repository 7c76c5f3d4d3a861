#include "so3orbit/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "so3orbit/types.hpp"

namespace so3orbit {

QuadratureGrid::QuadratureGrid(int na, int nb, int ng) : n_alpha(na), n_beta(nb), n_gamma(ng) {
  if (na < 1 || nb < 1 || ng < 1) {
    throw std::invalid_argument("QuadratureGrid: orders must be >= 1");
  }
  for (int i = 0; i < na; ++i) alpha.push_back(2.0 * kPi * i / na);
  for (int i = 0; i < ng; ++i) gamma.push_back(2.0 * kPi * i / ng);

  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(nb);
  if (table == nullptr) throw std::runtime_error("QuadratureGrid: GSL table allocation failed");
  for (int i = 0; i < nb; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, table);
    // x = cos(beta); Haar measure on beta is d(cos beta) / 2
    beta.push_back(std::acos(std::clamp(x, -1.0, 1.0)));
    beta_weight.push_back(0.5 * w);
  }
  gsl_integration_glfixed_table_free(table);
}

QuadratureGrid QuadratureGrid::for_band(int B) {
  if (B < 0) throw std::invalid_argument("QuadratureGrid::for_band requires B >= 0");
  return QuadratureGrid(2 * B + 2, B + 2, 2 * B + 2);
}

QuadratureGrid QuadratureGrid::halved() const {
  auto half = [](int n) { return std::max(1, (n + 1) / 2); };
  return QuadratureGrid(half(n_alpha), half(n_beta), half(n_gamma));
}

int QuadratureGrid::exact_band() const {
  return std::min({n_alpha - 1, n_gamma - 1, 2 * n_beta - 1});
}

bool QuadratureGrid::exact_for_band(int B) const { return exact_band() >= B; }

}  // namespace so3orbit
