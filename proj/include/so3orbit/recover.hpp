#pragma once

#include <optional>
#include <string>
#include <vector>

#include "so3orbit/moments.hpp"
#include "so3orbit/signal.hpp"

namespace so3orbit {

enum class BaseMode { blind, oracle };

std::string to_string(BaseMode mode);

struct RecoveryOptions {
  int L = 0;
  int R = 0;
  BaseMode mode = BaseMode::blind;
  bool in_plane = false;
  /// Stages whose relative residual exceeds this are marked in the report.
  double solver_tolerance = 1e-10;
  /// Blind base: the fourth Gram eigenvalue must not exceed this times the first.
  double rank_tolerance = 1e-8;
  bool include_l1_equal_l = true;
  /// Append first-moment rows where they are linear in the unknowns: to the
  /// distribution system at band 1 and to every signal system.
  bool use_first_moment = false;
  /// Stages with a larger condition number are flagged unstable.
  double unstable_condition = 1e8;
  /// Reflection fix: the two sign residuals must differ by this much (relative).
  double ambiguity_tolerance = 1e-3;

  /// Throws std::invalid_argument for nonpositive tolerances or bad sizes.
  void validate() const;
};

/// Ground truth for oracle-base runs and error reporting.
struct Truth {
  Signal x;
  std::optional<Distribution> rho;
};

/// The reflection fix cannot tell the two signs apart.
class AmbiguousReflection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BaseCase {
  CMatrix X0;    // 1 x R
  CMatrix X1;    // 3 x R
  CMatrix rho1;  // 3 x 3, least squares from the band-1 first moment
  Eigen::VectorXd gram_eigenvalues;  // descending, blind base only
  double residual_kept = 0.0;      // (1,1,1) residual of the chosen sign
  double residual_rejected = 0.0;  // and of the other sign
  bool flipped = false;
  bool ambiguous = false;
};

/// Band 0 from the first moment; band 1 from the Gram matrix of the uniform
/// second-moment component (blind) or copied from truth (oracle). Blind base
/// needs a real-symmetric signal (the Gram matrix is then real) and R >= 3.
/// Throws DegenerateSignal when the Gram rank is below 3 or above 3 within
/// rank_tolerance or the (0,1,1) component is visibly complex, AmbiguousReflection when the sign cannot be resolved, and
/// std::invalid_argument for oracle mode without truth.
BaseCase recover_base_case(const FirstMoment& m1, const SecondMoment& m2,
                           const RecoveryOptions& opts, const Truth* truth = nullptr);

/// (1,1,1) component predicted from band-1 data: rho1^* cg_project(x1[s2], x1[s3], 1).
CMatrix predict_111(const CMatrix& X1, const CMatrix& rho1);

/// Least-squares solution of A V = B by SVD.
struct LinearSolve {
  CMatrix solution;
  int rows = 0;
  int cols = 0;
  double cond = 0.0;      // sigma_max / sigma_min, infinite when singular
  double residual = 0.0;  // ||A V - B||_F / ||B||_F, 0 when B = 0
  bool unstable = false;
};

/// Throws UnderdeterminedSystem when A has fewer rows than columns or is zero.
LinearSolve solve_least_squares(const CMatrix& A, const CMatrix& B, double unstable_condition);

/// Distribution system at band ell. Row (l2, l3, s2, s3), l2 <= l3 (s2 <= s3
/// when l2 = l3), both bands below ell (at most 1 when ell = 1); entry m1 is
/// cg_project(x^{l2}[s2], x^{l3}[s3], ell)[m1]. The unknowns are
/// conj(rho_hat(H_ell)[:, s1]); the matrix does not depend on s1, the
/// overload taking s1 only checks its range.
CMatrix assemble_A_rho(int ell, const Signal& known, const RecoveryOptions& opts);
CMatrix assemble_A_rho(int ell, const Signal& known, const RecoveryOptions& opts, int s1);
/// Right-hand sides, one column per s1 (only s1 = 0 in in-plane mode).
CMatrix rhs_rho(int ell, const SecondMoment& m2, const RecoveryOptions& opts);

/// Signal system at band ell with the band-ell shell in slot 3. Rows
/// (l1, j, s1, s2) for rho bands l1 <= ell (< ell without include_l1_equal_l),
/// lower signal bands j < ell obeying the triangle rule, column s1 of
/// rho_hat(H_l1) and shell s2 of band j. In in-plane mode only s1 = 0 enters
/// and (l1, j) is restricted to l1 + j = ell (plus l1 = 2 at ell = 2).
CMatrix assemble_A_x(int ell, const Distribution& rho_known, const Signal& known,
                     const RecoveryOptions& opts);
CMatrix assemble_A_x(int ell, int s, const Distribution& rho_known, const Signal& known,
                     const RecoveryOptions& opts);
/// One column per shell s.
CMatrix rhs_x(int ell, const SecondMoment& m2, const RecoveryOptions& opts);

/// Returns rho_hat(H_ell) in solution (columns other than 0 zero in in-plane mode).
LinearSolve solve_distribution_band(int ell, const SecondMoment& m2, const Signal& known,
                                    const RecoveryOptions& opts,
                                    const FirstMoment* m1 = nullptr);
/// Returns X_ell, shape (2 ell + 1) x R.
LinearSolve solve_signal_band(int ell, const SecondMoment& m2, const Distribution& rho_known,
                              const Signal& known, const RecoveryOptions& opts,
                              const FirstMoment* m1 = nullptr);

struct StageReport {
  int band = 0;
  std::string kind;  // base, distribution, signal
  int rows = 0;
  int cols = 0;
  double cond = 0.0;
  double residual = 0.0;
  std::optional<double> error;  // against truth, when supplied
  double seconds = 0.0;
  std::string status = "ok";  // ok, unstable, failed
  std::string message;
};

struct RecoveryReport {
  std::string mode;
  bool in_plane = false;
  std::vector<StageReport> stages;
  std::optional<double> signal_error;
  std::optional<double> distribution_error;
  double seconds = 0.0;

  bool any_failed() const;
  bool any_unstable() const;
  /// One row per stage: band,kind,rows,cols,cond,residual,error,seconds,status,message.
  std::string to_csv() const;
};

struct RecoveryResult {
  Signal x;
  Distribution rho;
  RecoveryReport report;
};

/// Base case, then for ell = 1..L the distribution band followed (ell >= 2) by
/// the signal band. Stage failures zero the band, are recorded, and the march
/// goes on. With truth, errors are direct in oracle mode and computed on the
/// rotation-invariant Grams X_l^* X_l and rho_l^* rho_l in blind mode.
RecoveryResult frequency_march(const FirstMoment& m1, const SecondMoment& m2,
                               const RecoveryOptions& opts, const Truth* truth = nullptr);

/// Relative errors of rotation-invariant band data, for blind-base runs.
double gram_error(const Signal& x, const Signal& xhat);
double gram_error(const Distribution& rho, const Distribution& rho_hat);

}  // namespace so3orbit
