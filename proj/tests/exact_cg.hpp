#pragma once

// Clebsch-Gordan coefficients in exact rational arithmetic, for test oracles.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdlib>

namespace so3orbit_oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline cpp_int fact(int n) {
  cpp_int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Exact Racah sum: CG = sign(S) * sqrt(P * S^2) with P, S rational.
inline double exact_cg(int j1, int m1, int j2, int m2, int j, int m) {
  if (m1 + m2 != m || j < std::abs(j1 - j2) || j > j1 + j2) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m) > j) return 0.0;
  cpp_rational P(cpp_int(2 * j + 1) * fact(j + j1 - j2) * fact(j - j1 + j2) * fact(j1 + j2 - j),
                 fact(j1 + j2 + j + 1));
  P *= cpp_rational(fact(j + m) * fact(j - m) * fact(j1 - m1) * fact(j1 + m1) * fact(j2 - m2) *
                    fact(j2 + m2));
  cpp_rational S = 0;
  for (int k = 0; k <= j1 + j2 + j; ++k) {
    const int a = j1 + j2 - j - k, b = j1 - m1 - k, c = j2 + m2 - k, d = j - j2 + m1 + k,
              e = j - j1 - m2 + k;
    if (a < 0 || b < 0 || c < 0 || d < 0 || e < 0) continue;
    cpp_rational t(cpp_int(1), fact(k) * fact(a) * fact(b) * fact(c) * fact(d) * fact(e));
    S += (k % 2 == 0) ? t : cpp_rational(-t);
  }
  if (S == 0) return 0.0;
  const double sq = static_cast<double>(cpp_rational(P * S * S));
  return (S > 0 ? 1.0 : -1.0) * std::sqrt(sq);
}

}  // namespace so3orbit_oracle
