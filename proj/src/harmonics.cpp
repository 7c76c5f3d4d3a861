#include "so3orbit/harmonics.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace so3orbit {

namespace {

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

bool triangle(int a, int b, int c) { return c >= std::abs(a - b) && c <= a + b; }

}  // namespace

double clebsch_gordan(int l1, int m1, int l2, int m2, int l, int m) {
  if (l1 < 0 || l2 < 0 || l < 0) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  if (m1 + m2 != m) return 0.0;
  if (!triangle(l1, l2, l)) return 0.0;

  const double log_pref =
      0.5 * (std::log(2.0 * l + 1.0) + log_factorial(l + l1 - l2) + log_factorial(l - l1 + l2) +
             log_factorial(l1 + l2 - l) - log_factorial(l1 + l2 + l + 1) + log_factorial(l + m) +
             log_factorial(l - m) + log_factorial(l1 - m1) + log_factorial(l1 + m1) +
             log_factorial(l2 - m2) + log_factorial(l2 + m2));

  const int k_min = std::max({0, l2 - l - m1, l1 - l + m2});
  const int k_max = std::min({l1 + l2 - l, l1 - m1, l2 + m2});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double log_den = log_factorial(k) + log_factorial(l1 + l2 - l - k) +
                           log_factorial(l1 - m1 - k) + log_factorial(l2 + m2 - k) +
                           log_factorial(l - l2 + m1 + k) + log_factorial(l - l1 - m2 + k);
    const double magnitude = std::exp(log_pref - log_den);
    sum += (k % 2 == 0) ? magnitude : -magnitude;
  }
  return sum;
}

CGTable::CGTable(int l_max) : l_max_(l_max) {
  if (l_max < 0) throw std::invalid_argument("CGTable requires l_max >= 0");
  const int n = l_max + 1;
  const int nl = 2 * l_max + 1;
  offsets_.assign(static_cast<std::size_t>(n) * n * nl, 0);
  std::size_t total = 0;
  for (int l1 = 0; l1 <= l_max; ++l1) {
    for (int l2 = 0; l2 <= l_max; ++l2) {
      for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l) {
        offsets_[(static_cast<std::size_t>(l1) * n + l2) * nl + l] = total;
        total += static_cast<std::size_t>(band_dim(l1)) * band_dim(l2);
      }
    }
  }
  data_.assign(total, 0.0);
  for (int l1 = 0; l1 <= l_max; ++l1) {
    for (int l2 = 0; l2 <= l_max; ++l2) {
      for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l) {
        double* blk = data_.data() + block_offset(l1, l2, l);
        for (int m1 = -l1; m1 <= l1; ++m1) {
          for (int m2 = -l2; m2 <= l2; ++m2) {
            blk[midx(l1, m1) * band_dim(l2) + midx(l2, m2)] =
                clebsch_gordan(l1, m1, l2, m2, l, m1 + m2);
          }
        }
      }
    }
  }
}

std::size_t CGTable::block_offset(int l1, int l2, int l) const {
  const int n = l_max_ + 1;
  const int nl = 2 * l_max_ + 1;
  return offsets_[(static_cast<std::size_t>(l1) * n + l2) * nl + l];
}

const double* CGTable::block(int l1, int l2, int l) const {
  if (l1 < 0 || l2 < 0 || l1 > l_max_ || l2 > l_max_) {
    throw std::out_of_range("CGTable::block: band outside table (l_max=" +
                            std::to_string(l_max_) + ")");
  }
  if (!triangle(l1, l2, l)) {
    throw std::invalid_argument("CGTable::block: triangle rule violated");
  }
  return data_.data() + block_offset(l1, l2, l);
}

double CGTable::operator()(int l1, int m1, int l2, int m2, int l, int m) const {
  if (l1 < 0 || l2 < 0 || l1 > l_max_ || l2 > l_max_) {
    return clebsch_gordan(l1, m1, l2, m2, l, m);
  }
  if (!triangle(l1, l2, l) || m1 + m2 != m) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  return block(l1, l2, l)[midx(l1, m1) * band_dim(l2) + midx(l2, m2)];
}

const CGTable& CGTable::shared(int l_max) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<CGTable>> tables;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = tables.lower_bound(l_max);
  if (it != tables.end()) return *it->second;
  auto [pos, inserted] = tables.emplace(l_max, std::make_unique<CGTable>(l_max));
  return *pos->second;
}

void cg_project_accumulate(const cplx* a, int l2, const cplx* b, int l3, int l1,
                           const CGTable& table, cplx weight, cplx* out) {
  const double* blk = table.block(l2, l3, l1);
  const int d3 = band_dim(l3);
  for (int k2 = -l2; k2 <= l2; ++k2) {
    const cplx wa = weight * a[midx(l2, k2)];
    if (wa == cplx(0.0)) continue;
    // k3 range keeps k1 = k2 + k3 inside [-l1, l1].
    const int k3_lo = std::max(-l3, -l1 - k2);
    const int k3_hi = std::min(l3, l1 - k2);
    const double* row = blk + midx(l2, k2) * d3;
    for (int k3 = k3_lo; k3 <= k3_hi; ++k3) {
      out[midx(l1, k2 + k3)] += row[midx(l3, k3)] * (wa * b[midx(l3, k3)]);
    }
  }
}

CVector cg_project(const CVector& a, const CVector& b, int l1, const CGTable& table) {
  if ((a.size() - 1) % 2 != 0 || (b.size() - 1) % 2 != 0) {
    throw std::invalid_argument("cg_project: vectors must have odd length 2l+1");
  }
  const int l2 = static_cast<int>(a.size() - 1) / 2;
  const int l3 = static_cast<int>(b.size() - 1) / 2;
  if (l1 < 0 || !triangle(l2, l3, l1)) {
    throw std::invalid_argument("cg_project: triangle rule violated for (l1=" +
                                std::to_string(l1) + ", l2=" + std::to_string(l2) +
                                ", l3=" + std::to_string(l3) + ")");
  }
  CVector out = CVector::Zero(band_dim(l1));
  cg_project_accumulate(a.data(), l2, b.data(), l3, l1, table, 1.0, out.data());
  return out;
}

CVector cg_project(const CVector& a, const CVector& b, int l1) {
  const int l2 = static_cast<int>(a.size() - 1) / 2;
  const int l3 = static_cast<int>(b.size() - 1) / 2;
  return cg_project(a, b, l1, CGTable::shared(std::max(l2, l3)));
}

WignerEvaluator::WignerEvaluator(int l_max) : l_max_(l_max), terms_(l_max + 1) {
  if (l_max < 0) throw std::invalid_argument("WignerEvaluator requires l_max >= 0");
  for (int j = 0; j <= l_max; ++j) {
    auto& terms = terms_[j];
    for (int mp = -j; mp <= j; ++mp) {    // row
      for (int m = -j; m <= j; ++m) {     // column
        const double log_num = 0.5 * (log_factorial(j + mp) + log_factorial(j - mp) +
                                      log_factorial(j + m) + log_factorial(j - m));
        const int s_min = std::max(0, m - mp);
        const int s_max = std::min(j + m, j - mp);
        for (int s = s_min; s <= s_max; ++s) {
          const double log_den = log_factorial(j + m - s) + log_factorial(s) +
                                 log_factorial(mp - m + s) + log_factorial(j - mp - s);
          // the pure-cosine diagonal term is exactly 1, which keeps d(0) = I bitwise
          const double magnitude = (mp == m && s == 0) ? 1.0 : std::exp(log_num - log_den);
          const int sign_power = mp - m + s;
          terms.push_back({midx(j, mp), midx(j, m), 2 * j + m - mp - 2 * s, mp - m + 2 * s,
                           (sign_power % 2 == 0) ? magnitude : -magnitude});
        }
      }
    }
  }
}

std::vector<RMatrix> WignerEvaluator::small_d(double beta) const {
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  const int max_pow = 2 * l_max_;
  std::vector<double> cp(max_pow + 1, 1.0), sp(max_pow + 1, 1.0);
  for (int p = 1; p <= max_pow; ++p) {
    cp[p] = cp[p - 1] * c;
    sp[p] = sp[p - 1] * s;
  }
  std::vector<RMatrix> out;
  out.reserve(l_max_ + 1);
  for (int j = 0; j <= l_max_; ++j) {
    RMatrix d = RMatrix::Zero(band_dim(j), band_dim(j));
    for (const auto& t : terms_[j]) {
      d(t.row, t.col) += t.coefficient * cp[t.cos_power] * sp[t.sin_power];
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CMatrix> WignerEvaluator::D(double alpha, double beta, double gamma) const {
  const auto d = small_d(beta);
  std::vector<CMatrix> out;
  out.reserve(l_max_ + 1);
  // exp(-i m alpha) for m = -l_max..l_max
  const int n = 2 * l_max_ + 1;
  std::vector<cplx> ea(n), eg(n);
  for (int m = -l_max_; m <= l_max_; ++m) {
    ea[m + l_max_] = std::polar(1.0, -m * alpha);
    eg[m + l_max_] = std::polar(1.0, -m * gamma);
  }
  for (int j = 0; j <= l_max_; ++j) {
    CMatrix Dj(band_dim(j), band_dim(j));
    for (int m = -j; m <= j; ++m) {
      for (int mp = -j; mp <= j; ++mp) {
        Dj(midx(j, m), midx(j, mp)) =
            ea[m + l_max_] * d[j](midx(j, m), midx(j, mp)) * eg[mp + l_max_];
      }
    }
    out.push_back(std::move(Dj));
  }
  return out;
}

RMatrix wigner_small_d(int l, double beta) {
  if (l < 0) throw std::invalid_argument("wigner_small_d requires l >= 0");
  return WignerEvaluator(l).small_d(beta)[l];
}

CMatrix wigner_D(int l, const Rotation& g) {
  if (l < 0) throw std::invalid_argument("wigner_D requires l >= 0");
  return WignerEvaluator(l).D(g)[l];
}

Signal rotate_signal(const Signal& x, const std::vector<CMatrix>& wigner) {
  if (static_cast<int>(wigner.size()) < x.L + 1) {
    throw std::invalid_argument("rotate_signal: Wigner matrices do not cover the band limit");
  }
  Signal out = x;
  for (int l = 0; l <= x.L; ++l) out.bands[l] = wigner[l] * x.bands[l];
  return out;
}

Signal rotate_signal(const Signal& x, const Rotation& g) {
  return rotate_signal(x, WignerEvaluator(x.L).D(g));
}

}  // namespace so3orbit
