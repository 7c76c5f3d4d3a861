#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace so3orbit {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

// Length-(2l+1) vectors are stored with m ascending from -l to l, so the
// coefficient of order m sits at index m + l.
constexpr int band_dim(int l) { return 2 * l + 1; }
constexpr int midx(int l, int m) { return m + l; }

constexpr double kPi = 3.14159265358979323846;

/// Malformed input file. The message carries the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersion : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A least-squares system has fewer independent equations than unknowns.
class UnderdeterminedSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The band-1 Gram matrix does not have the rank the base case needs.
class DegenerateSignal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace so3orbit
