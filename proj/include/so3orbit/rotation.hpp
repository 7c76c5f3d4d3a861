#pragma once

#include <Eigen/Dense>

namespace so3orbit {

/// A rotation in ZYZ Euler angles, g = Rz(alpha) Ry(beta) Rz(gamma).
///
/// Instances built through from_euler() or from_matrix() are canonical:
/// alpha, gamma in [0, 2pi) and beta in [0, pi]. At the poles (beta = 0 or
/// pi) the decomposition is not unique and gamma is set to 0.
struct Rotation {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  static Rotation identity() { return {}; }

  /// Canonicalizes arbitrary real angles by going through the rotation matrix.
  static Rotation from_euler(double alpha, double beta, double gamma);
  static Rotation from_matrix(const Eigen::Matrix3d& m);

  Eigen::Matrix3d matrix() const;

  /// this * other (other is applied first).
  Rotation compose(const Rotation& other) const;
  Rotation inverse() const;

  bool is_canonical() const;
};

Eigen::Matrix3d rot_z(double angle);
Eigen::Matrix3d rot_y(double angle);

}  // namespace so3orbit
