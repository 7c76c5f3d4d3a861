#include "so3orbit/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace so3orbit {

namespace {

void require_same_shape(const Signal& a, const Signal& b) {
  if (a.L != b.L || a.R != b.R) {
    throw std::invalid_argument("signal shape mismatch: (L=" + std::to_string(a.L) +
                                ", R=" + std::to_string(a.R) + ") vs (L=" +
                                std::to_string(b.L) + ", R=" + std::to_string(b.R) + ")");
  }
}

double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

Signal::Signal(int L_, int R_) : L(L_), R(R_) {
  if (L_ < 0 || R_ < 1) throw std::invalid_argument("Signal requires L >= 0 and R >= 1");
  bands.reserve(L_ + 1);
  for (int l = 0; l <= L_; ++l) bands.push_back(CMatrix::Zero(band_dim(l), R_));
}

double Signal::norm() const {
  double s = 0.0;
  for (const auto& b : bands) s += b.squaredNorm();
  return std::sqrt(s);
}

Signal Signal::truncated(int l_max) const {
  if (l_max > L) throw std::invalid_argument("truncated: l_max exceeds band limit");
  Signal out(l_max, R);
  out.real_symmetric = real_symmetric;
  for (int l = 0; l <= l_max; ++l) out.bands[l] = bands[l];
  return out;
}

bool Signal::satisfies_real_symmetry(double tol) const {
  for (int l = 0; l <= L; ++l) {
    for (int m = 0; m <= l; ++m) {
      for (int s = 0; s < R; ++s) {
        const cplx want = parity(m) * std::conj(bands[l](midx(l, m), s));
        if (std::abs(bands[l](midx(l, -m), s) - want) > tol) return false;
      }
    }
  }
  return true;
}

Signal& Signal::operator+=(const Signal& o) {
  require_same_shape(*this, o);
  for (int l = 0; l <= L; ++l) bands[l] += o.bands[l];
  return *this;
}

Signal& Signal::operator-=(const Signal& o) {
  require_same_shape(*this, o);
  for (int l = 0; l <= L; ++l) bands[l] -= o.bands[l];
  return *this;
}

Signal& Signal::operator*=(cplx a) {
  for (auto& b : bands) b *= a;
  return *this;
}

Signal operator+(Signal a, const Signal& b) { return a += b; }
Signal operator-(Signal a, const Signal& b) { return a -= b; }
Signal operator*(cplx a, Signal b) { return b *= a; }

Distribution::Distribution(int L_) : L(L_) {
  if (L_ < 0) throw std::invalid_argument("Distribution requires L >= 0");
  bands.reserve(L_ + 1);
  for (int l = 0; l <= L_; ++l) bands.push_back(CMatrix::Zero(band_dim(l), band_dim(l)));
  bands[0](0, 0) = 1.0;
}

Distribution Distribution::uniform(int L) { return Distribution(L); }

Distribution Distribution::delta_identity(int L) {
  Distribution d(L);
  for (int l = 0; l <= L; ++l) d.bands[l].setIdentity();
  return d;
}

Distribution Distribution::truncated(int l_max) const {
  if (l_max > L) throw std::invalid_argument("truncated: l_max exceeds band limit");
  Distribution out(l_max);
  out.in_plane = in_plane;
  for (int l = 0; l <= l_max; ++l) out.bands[l] = bands[l];
  return out;
}

bool Distribution::is_real_function(double tol) const {
  for (int l = 0; l <= L; ++l) {
    for (int a = -l; a <= l; ++a) {
      for (int b = -l; b <= l; ++b) {
        const cplx want = parity(a - b) * std::conj(bands[l](midx(l, a), midx(l, b)));
        if (std::abs(bands[l](midx(l, -a), midx(l, -b)) - want) > tol) return false;
      }
    }
  }
  return true;
}

}  // namespace so3orbit
