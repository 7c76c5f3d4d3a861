#include "so3orbit/rotation.hpp"

#include <algorithm>
#include <cmath>

#include "so3orbit/types.hpp"

namespace so3orbit {

namespace {

double wrap_two_pi(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  // fmod can return exactly 2pi after the shift for tiny negative inputs.
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

}  // namespace

Eigen::Matrix3d rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d Rotation::matrix() const {
  return rot_z(alpha) * rot_y(beta) * rot_z(gamma);
}

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
  // m(2,0) = -sin(b) cos(g), m(2,1) = sin(b) sin(g), m(2,2) = cos(b)
  // m(0,2) = cos(a) sin(b),  m(1,2) = sin(a) sin(b)
  const double sb = std::hypot(m(2, 0), m(2, 1));
  const double cb = std::clamp(m(2, 2), -1.0, 1.0);
  Rotation r;
  r.beta = std::atan2(sb, cb);
  if (sb > 1e-12) {
    r.alpha = std::atan2(m(1, 2), m(0, 2));
    r.gamma = std::atan2(m(2, 1), -m(2, 0));
  } else if (cb > 0.0) {
    // Rz(alpha + gamma)
    r.beta = 0.0;
    r.alpha = std::atan2(m(1, 0), m(0, 0));
    r.gamma = 0.0;
  } else {
    // Rz(alpha - gamma) Ry(pi)
    r.beta = kPi;
    r.alpha = std::atan2(-m(0, 1), m(1, 1));
    r.gamma = 0.0;
  }
  r.alpha = wrap_two_pi(r.alpha);
  r.gamma = wrap_two_pi(r.gamma);
  return r;
}

Rotation Rotation::from_euler(double alpha, double beta, double gamma) {
  return from_matrix(rot_z(alpha) * rot_y(beta) * rot_z(gamma));
}

Rotation Rotation::compose(const Rotation& other) const {
  return from_matrix(matrix() * other.matrix());
}

Rotation Rotation::inverse() const { return from_matrix(matrix().transpose()); }

bool Rotation::is_canonical() const {
  return alpha >= 0.0 && alpha < 2.0 * kPi && gamma >= 0.0 && gamma < 2.0 * kPi &&
         beta >= 0.0 && beta <= kPi;
}

}  // namespace so3orbit
