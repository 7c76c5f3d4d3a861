#include "so3orbit/recover.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "so3orbit/harmonics.hpp"

namespace so3orbit {

namespace {

bool triangle(int a, int b, int c) { return c >= std::abs(a - b) && c <= a + b; }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Cartesian (x, y, z) -> spherical components (m = -1, 0, 1) of a real vector.
CMatrix spherical_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix U = CMatrix::Zero(3, 3);
  U(0, 0) = r;
  U(0, 1) = cplx(0, r);
  U(1, 2) = 1.0;
  U(2, 0) = -r;
  U(2, 1) = cplx(0, r);
  return U;
}

double relative(const CMatrix& diff, const CMatrix& ref) {
  const double n = ref.norm();
  return n > 0 ? diff.norm() / n : diff.norm();
}

struct RhoRow {
  int l2, l3, s2, s3;
};

std::vector<RhoRow> rho_rows(int ell, int R) {
  const int cap = ell == 1 ? 1 : ell - 1;
  std::vector<RhoRow> rows;
  for (int l2 = 0; l2 <= cap; ++l2) {
    for (int l3 = l2; l3 <= cap; ++l3) {
      if (!triangle(l2, l3, ell)) continue;
      for (int s2 = 0; s2 < R; ++s2) {
        for (int s3 = (l2 == l3 ? s2 : 0); s3 < R; ++s3) {
          // antisymmetric coupling of a vector with itself vanishes
          if (l2 == l3 && s2 == s3 && (2 * l2 - ell) % 2 != 0) continue;
          rows.push_back({l2, l3, s2, s3});
        }
      }
    }
  }
  return rows;
}

struct XRow {
  int l1, j, s1, s2;
};

std::vector<XRow> x_rows(int ell, int R, int rho_L, const RecoveryOptions& opts) {
  std::vector<std::pair<int, int>> pairs;  // (l1, j)
  const int l1_max = std::min(opts.include_l1_equal_l ? ell : ell - 1, rho_L);
  if (opts.in_plane) {
    for (int i = 1; i <= ell - 1; ++i) {
      if (i <= l1_max) pairs.push_back({i, ell - i});
    }
    if (ell == 2 && l1_max >= 2) {
      pairs.push_back({2, 0});
      pairs.push_back({2, 1});
    }
  } else {
    for (int l1 = 1; l1 <= l1_max; ++l1)
      for (int j = 0; j < ell; ++j)
        if (triangle(j, ell, l1)) pairs.push_back({l1, j});
  }
  std::vector<XRow> rows;
  for (const auto& [l1, j] : pairs) {
    const int s1_lo = opts.in_plane ? 0 : -l1;
    const int s1_hi = opts.in_plane ? 0 : l1;
    for (int s1 = s1_lo; s1 <= s1_hi; ++s1)
      for (int s2 = 0; s2 < R; ++s2) rows.push_back({l1, j, s1, s2});
  }
  return rows;
}

void check_band(int ell, int L, const char* what) {
  if (ell < 1 || ell > L) {
    throw std::invalid_argument(std::string(what) + ": band " + std::to_string(ell) +
                                " outside [1, " + std::to_string(L) + "]");
  }
}

CMatrix rho1_from_first_moment(const CMatrix& X1, const CMatrix& M1_1, bool in_plane) {
  // M1_1 = rho1^* X1, i.e. X1^T conj(rho1) = M1_1^T
  const CMatrix At = X1.transpose();
  CMatrix conj_rho = At.completeOrthogonalDecomposition().solve(CMatrix(M1_1.transpose()));
  CMatrix rho1 = conj_rho.conjugate();
  if (in_plane) {
    rho1.col(midx(1, -1)).setZero();
    rho1.col(midx(1, 1)).setZero();
  }
  return rho1;
}

BaseCase base_case_impl(const FirstMoment& m1, const SecondMoment& m2, const RecoveryOptions& opts,
                        const Truth* truth) {
  if (m1.L < 1 || m2.L < 1) throw std::invalid_argument("base case: moments must cover band 1");
  const int R = m1.R;
  BaseCase out;
  out.X0 = m1.bands[0];
  if (opts.mode == BaseMode::oracle) {
    if (truth == nullptr) throw std::invalid_argument("oracle-base recovery requires the true signal");
    if (truth->x.L < 1 || truth->x.R != R) {
      throw std::invalid_argument("oracle-base: true signal does not match the moments");
    }
    out.X0 = truth->x.bands[0];
    out.X1 = truth->x.bands[1];
  } else {
    if (R < 3) throw DegenerateSignal("blind base needs R >= 3 shells (rank-3 band 1)");
    // real signal: M2(0,1,1)[0, s, s'] = -G(s, s') / sqrt(3)
    const CMatrix& c = m2.at(0, 1, 1);
    // a complex signal leaves an O(1) imaginary part; noise only a small one
    if (c.imag().norm() > 0.1 * c.real().norm()) {
      throw DegenerateSignal("blind base needs a real signal: the (0,1,1) component is not real");
    }
    Eigen::MatrixXd G(R, R);
    for (int s = 0; s < R; ++s)
      for (int sp = 0; sp < R; ++sp) G(s, sp) = -std::sqrt(3.0) * c(0, s * R + sp).real();
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    out.gram_eigenvalues = eig.eigenvalues().reverse();
    const Eigen::VectorXd& lam = out.gram_eigenvalues;
    if (!(lam(0) > 0)) throw DegenerateSignal("band-1 Gram matrix is not positive");
    if (lam(2) <= opts.rank_tolerance * lam(0)) {
      throw DegenerateSignal("band-1 Gram matrix has rank below 3");
    }
    if (R > 3 && lam(3) > opts.rank_tolerance * lam(0)) {
      std::ostringstream msg;
      msg << "band-1 Gram matrix is not rank 3 (fourth eigenvalue " << lam(3) << ", first "
          << lam(0) << ")";
      throw DegenerateSignal(msg.str());
    }
    const Eigen::MatrixXd V = eig.eigenvectors().rightCols(3).rowwise().reverse();
    const Eigen::MatrixXd Xr = lam.head(3).cwiseSqrt().asDiagonal() * V.transpose();
    out.X1 = spherical_basis() * Xr.cast<cplx>();
  }
  out.rho1 = rho1_from_first_moment(out.X1, m1.bands[1], opts.in_plane);

  const CMatrix& target = m2.at(1, 1, 1);
  const CMatrix pred = predict_111(out.X1, out.rho1);
  const double r_plus = (pred - target).norm();
  const double r_minus = (pred + target).norm();
  out.flipped = opts.mode == BaseMode::blind && r_minus < r_plus;
  out.residual_kept = out.flipped ? r_minus : r_plus;
  out.residual_rejected = out.flipped ? r_plus : r_minus;
  out.ambiguous = std::abs(r_plus - r_minus) <= opts.ambiguity_tolerance * std::max(r_plus, r_minus);
  if (out.flipped) {
    out.X1 = -out.X1;
    out.rho1 = -out.rho1;
  }
  return out;
}

}  // namespace

std::string to_string(BaseMode mode) { return mode == BaseMode::blind ? "blind-base" : "oracle-base"; }

void RecoveryOptions::validate() const {
  if (L < 1) throw std::invalid_argument("recovery needs L >= 1");
  if (R < 1) throw std::invalid_argument("recovery needs R >= 1");
  if (!(solver_tolerance > 0) || !(rank_tolerance > 0) || !(unstable_condition > 0) ||
      !(ambiguity_tolerance > 0)) {
    throw std::invalid_argument("recovery tolerances must be positive");
  }
}

CMatrix predict_111(const CMatrix& X1, const CMatrix& rho1) {
  const int R = static_cast<int>(X1.cols());
  const CGTable& cg = CGTable::shared(1);
  CMatrix raw = CMatrix::Zero(3, static_cast<Eigen::Index>(R) * R);
  for (int s2 = 0; s2 < R; ++s2)
    for (int s3 = 0; s3 < R; ++s3)
      cg_project_accumulate(X1.col(s2).data(), 1, X1.col(s3).data(), 1, 1, cg, 1.0,
                            raw.col(s2 * R + s3).data());
  return rho1.adjoint() * raw;
}

BaseCase recover_base_case(const FirstMoment& m1, const SecondMoment& m2,
                           const RecoveryOptions& opts, const Truth* truth) {
  BaseCase b = base_case_impl(m1, m2, opts, truth);
  if (opts.mode == BaseMode::blind && b.ambiguous) {
    std::ostringstream msg;
    msg << "reflection is ambiguous: (1,1,1) residuals " << b.residual_kept << " and "
        << b.residual_rejected;
    throw AmbiguousReflection(msg.str());
  }
  return b;
}

LinearSolve solve_least_squares(const CMatrix& A, const CMatrix& B, double unstable_condition) {
  LinearSolve out;
  out.rows = static_cast<int>(A.rows());
  out.cols = static_cast<int>(A.cols());
  if (A.rows() < A.cols()) {
    throw UnderdeterminedSystem("underdetermined system: " + std::to_string(A.rows()) +
                                " rows for " + std::to_string(A.cols()) + " unknowns");
  }
  Eigen::BDCSVD<CMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0)) {
    throw UnderdeterminedSystem("underdetermined system: coefficient matrix is zero");
  }
  const double smin = sv(sv.size() - 1);
  out.cond = smin > 0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  out.solution = svd.solve(B);
  const double bn = B.norm();
  out.residual = bn > 0 ? (A * out.solution - B).norm() / bn : (A * out.solution).norm();
  out.unstable = !std::isfinite(out.cond) || out.cond > unstable_condition;
  return out;
}

CMatrix assemble_A_rho(int ell, const Signal& known, const RecoveryOptions& opts) {
  const int cap = ell == 1 ? 1 : ell - 1;
  if (ell < 1) throw std::invalid_argument("assemble_A_rho: band must be >= 1");
  if (known.L < cap) {
    throw std::invalid_argument("assemble_A_rho: known signal must cover band " + std::to_string(cap));
  }
  const auto rows = rho_rows(ell, opts.R > 0 ? opts.R : known.R);
  const CGTable& cg = CGTable::shared(std::max(cap, 1));
  CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), band_dim(ell));
  CVector tmp(band_dim(ell));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& w = rows[r];
    tmp.setZero();
    cg_project_accumulate(known.bands[w.l2].col(w.s2).data(), w.l2,
                          known.bands[w.l3].col(w.s3).data(), w.l3, ell, cg, 1.0, tmp.data());
    A.row(static_cast<Eigen::Index>(r)) = tmp.transpose();
  }
  return A;
}

CMatrix assemble_A_rho(int ell, const Signal& known, const RecoveryOptions& opts, int s1) {
  if (std::abs(s1) > ell) throw std::invalid_argument("assemble_A_rho: column index out of range");
  return assemble_A_rho(ell, known, opts);
}

CMatrix rhs_rho(int ell, const SecondMoment& m2, const RecoveryOptions& opts) {
  const int R = m2.R;
  const auto rows = rho_rows(ell, R);
  const int ncols = opts.in_plane ? 1 : band_dim(ell);
  CMatrix B(static_cast<Eigen::Index>(rows.size()), ncols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& w = rows[r];
    const CMatrix& c = m2.at(ell, w.l2, w.l3);
    for (int k = 0; k < ncols; ++k) {
      const int m = opts.in_plane ? 0 : k - ell;
      B(static_cast<Eigen::Index>(r), k) = c(midx(ell, m), w.s2 * R + w.s3);
    }
  }
  return B;
}

CMatrix assemble_A_x(int ell, const Distribution& rho_known, const Signal& known,
                     const RecoveryOptions& opts) {
  if (ell < 2) throw std::invalid_argument("assemble_A_x: band must be >= 2");
  if (known.L < ell - 1) {
    throw std::invalid_argument("assemble_A_x: known signal must cover band " + std::to_string(ell - 1));
  }
  const int R = opts.R > 0 ? opts.R : known.R;
  const auto rows = x_rows(ell, R, rho_known.L, opts);
  const CGTable& cg = CGTable::shared(ell);
  const int d = band_dim(ell);
  CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& w = rows[r];
    const double* blk = cg.block(w.j, ell, w.l1);
    const CMatrix& rho = rho_known.bands[w.l1];
    const CMatrix& xj = known.bands[w.j];
    for (int k3 = -ell; k3 <= ell; ++k3) {
      cplx acc = 0.0;
      for (int k2 = -w.j; k2 <= w.j; ++k2) {
        const int k1 = k2 + k3;
        if (std::abs(k1) > w.l1) continue;
        acc += blk[midx(w.j, k2) * d + midx(ell, k3)] *
               std::conj(rho(midx(w.l1, k1), midx(w.l1, w.s1))) * xj(midx(w.j, k2), w.s2);
      }
      A(static_cast<Eigen::Index>(r), midx(ell, k3)) = acc;
    }
  }
  return A;
}

CMatrix assemble_A_x(int ell, int s, const Distribution& rho_known, const Signal& known,
                     const RecoveryOptions& opts) {
  if (s < 0 || s >= known.R) throw std::invalid_argument("assemble_A_x: shell out of range");
  return assemble_A_x(ell, rho_known, known, opts);
}

CMatrix rhs_x(int ell, const SecondMoment& m2, const RecoveryOptions& opts) {
  const int R = m2.R;
  const auto rows = x_rows(ell, R, ell, opts);
  CMatrix B(static_cast<Eigen::Index>(rows.size()), R);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& w = rows[r];
    const CMatrix& c = m2.at(w.l1, w.j, ell);
    for (int s = 0; s < R; ++s) B(static_cast<Eigen::Index>(r), s) = c(midx(w.l1, w.s1), w.s2 * R + s);
  }
  return B;
}

LinearSolve solve_distribution_band(int ell, const SecondMoment& m2, const Signal& known,
                                    const RecoveryOptions& opts, const FirstMoment* m1) {
  check_band(ell, m2.L, "solve_distribution_band");
  CMatrix A = assemble_A_rho(ell, known, opts);
  CMatrix B = rhs_rho(ell, m2, opts);
  if (opts.use_first_moment && m1 != nullptr && known.L >= ell) {
    // M1_l = rho_l^* X_l: row s has entries X_l[:, s], right side M1_l[m, s]
    const Eigen::Index n0 = A.rows();
    const int R = known.R;
    A.conservativeResize(n0 + R, Eigen::NoChange);
    B.conservativeResize(n0 + R, Eigen::NoChange);
    for (int s = 0; s < R; ++s) {
      A.row(n0 + s) = known.bands[ell].col(s).transpose();
      for (Eigen::Index k = 0; k < B.cols(); ++k) {
        const int m = opts.in_plane ? 0 : static_cast<int>(k) - ell;
        B(n0 + s, k) = m1->bands[ell](midx(ell, m), s);
      }
    }
  }
  LinearSolve sol = solve_least_squares(A, B, opts.unstable_condition);
  CMatrix rho = CMatrix::Zero(band_dim(ell), band_dim(ell));
  if (opts.in_plane) {
    rho.col(midx(ell, 0)) = sol.solution.col(0).conjugate();
  } else {
    rho = sol.solution.conjugate();
  }
  sol.solution = std::move(rho);
  return sol;
}

LinearSolve solve_signal_band(int ell, const SecondMoment& m2, const Distribution& rho_known,
                              const Signal& known, const RecoveryOptions& opts,
                              const FirstMoment* m1) {
  check_band(ell, m2.L, "solve_signal_band");
  if (ell < 2) throw std::invalid_argument("solve_signal_band: band must be >= 2");
  if (rho_known.L < ell) {
    throw std::invalid_argument("solve_signal_band: distribution must be known through band " +
                                std::to_string(ell));
  }
  CMatrix A = assemble_A_x(ell, rho_known, known, opts);
  CMatrix B = rhs_x(ell, m2, opts);
  if (A.rows() != B.rows()) {
    // rows beyond the known distribution bands are absent from A
    throw std::invalid_argument("solve_signal_band: distribution bands missing");
  }
  if (opts.use_first_moment && m1 != nullptr) {
    // M1_l[m, s] = sum_k conj(rho_l[k, m]) X_l[k, s]
    const Eigen::Index n0 = A.rows();
    const int first = opts.in_plane ? 0 : -ell;
    const int last = opts.in_plane ? 0 : ell;
    const Eigen::Index extra = last - first + 1;
    A.conservativeResize(n0 + extra, Eigen::NoChange);
    B.conservativeResize(n0 + extra, Eigen::NoChange);
    for (int m = first; m <= last; ++m) {
      A.row(n0 + m - first) = rho_known.bands[ell].col(midx(ell, m)).adjoint();
      B.row(n0 + m - first) = m1->bands[ell].row(midx(ell, m));
    }
  }
  return solve_least_squares(A, B, opts.unstable_condition);
}

bool RecoveryReport::any_failed() const {
  for (const auto& s : stages)
    if (s.status == "failed") return true;
  return false;
}

bool RecoveryReport::any_unstable() const {
  for (const auto& s : stages)
    if (s.status == "unstable") return true;
  return false;
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string RecoveryReport::to_csv() const {
  std::ostringstream out;
  out << "band,kind,rows,cols,cond,residual,error,seconds,status,message\n";
  for (const auto& s : stages) {
    out << s.band << ',' << s.kind << ',' << s.rows << ',' << s.cols << ',' << fmt(s.cond) << ','
        << fmt(s.residual) << ',' << (s.error ? fmt(*s.error) : "") << ',' << fmt(s.seconds) << ','
        << s.status << ',' << csv_field(s.message) << '\n';
  }
  return out.str();
}

double gram_error(const Signal& x, const Signal& xhat) {
  if (x.L != xhat.L || x.R != xhat.R) throw std::invalid_argument("gram_error: shape mismatch");
  double num = 0, den = 0;
  for (int l = 0; l <= x.L; ++l) {
    const CMatrix g = x.bands[l].adjoint() * x.bands[l];
    num += (xhat.bands[l].adjoint() * xhat.bands[l] - g).squaredNorm();
    den += g.squaredNorm();
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

double gram_error(const Distribution& rho, const Distribution& rho_hat) {
  if (rho.L != rho_hat.L) throw std::invalid_argument("gram_error: band limit mismatch");
  double num = 0, den = 0;
  for (int l = 1; l <= rho.L; ++l) {
    const CMatrix g = rho.bands[l].adjoint() * rho.bands[l];
    num += (rho_hat.bands[l].adjoint() * rho_hat.bands[l] - g).squaredNorm();
    den += g.squaredNorm();
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

RecoveryResult frequency_march(const FirstMoment& m1, const SecondMoment& m2,
                               const RecoveryOptions& opts, const Truth* truth) {
  opts.validate();
  const int L = opts.L, R = opts.R;
  if (m1.L < L || m2.L < L) throw std::invalid_argument("moments do not cover band " + std::to_string(L));
  if (m1.R != R || m2.R != R) throw std::invalid_argument("moments do not have R shells");
  if (opts.mode == BaseMode::oracle && truth == nullptr) {
    throw std::invalid_argument("oracle-base recovery requires the true signal");
  }
  const auto t_start = Clock::now();

  RecoveryResult res;
  res.x = Signal(L, R);
  res.rho = Distribution(L);
  res.rho.in_plane = opts.in_plane;
  auto& rep = res.report;
  rep.mode = to_string(opts.mode);
  rep.in_plane = opts.in_plane;

  std::optional<Signal> true_x;
  std::optional<Distribution> true_rho;
  if (truth != nullptr) {
    true_x = truth->x.L > L ? truth->x.truncated(L) : truth->x;
    if (true_x->L != L || true_x->R != R) {
      throw std::invalid_argument("true signal does not match the recovery size");
    }
    if (truth->rho) {
      true_rho = truth->rho->L > L ? truth->rho->truncated(L) : *truth->rho;
      if (true_rho->L != L) throw std::invalid_argument("true distribution does not cover band L");
    }
  }
  const bool direct = opts.mode == BaseMode::oracle;
  auto band_error_x = [&](int l) -> std::optional<double> {
    if (!true_x) return std::nullopt;
    const CMatrix& t = true_x->bands[l];
    const CMatrix& e = res.x.bands[l];
    if (direct) return relative(e - t, t);
    return relative(e.adjoint() * e - t.adjoint() * t, t.adjoint() * t);
  };
  auto band_error_rho = [&](int l) -> std::optional<double> {
    if (!true_rho) return std::nullopt;
    const CMatrix& t = true_rho->bands[l];
    const CMatrix& e = res.rho.bands[l];
    if (direct) return relative(e - t, t);
    return relative(e.adjoint() * e - t.adjoint() * t, t.adjoint() * t);
  };
  auto finish = [&](StageReport& st, const LinearSolve& sol) {
    st.rows = sol.rows;
    st.cols = sol.cols;
    st.cond = sol.cond;
    st.residual = sol.residual;
    if (sol.unstable) {
      st.status = "unstable";
      st.message = "condition number above " + fmt(opts.unstable_condition);
    } else if (sol.residual > opts.solver_tolerance) {
      st.message = "residual above solver tolerance";
    }
  };

  {
    StageReport st;
    st.band = 1;
    st.kind = "base";
    const auto t0 = Clock::now();
    try {
      const BaseCase b = base_case_impl(m1, m2, opts, truth);
      res.x.bands[0] = b.X0;
      res.x.bands[1] = b.X1;
      res.rho.bands[1] = b.rho1;
      st.rows = 3 * R;
      st.cols = 3;
      const Eigen::JacobiSVD<CMatrix> sv(b.X1);
      const double smin = sv.singularValues()(std::min<Eigen::Index>(2, sv.singularValues().size() - 1));
      st.cond = smin > 0 ? sv.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
      const double tn = m2.at(1, 1, 1).norm();
      st.residual = tn > 0 ? b.residual_kept / tn : b.residual_kept;
      if (true_x) {
        st.error = direct ? relative(b.X1 - true_x->bands[1], true_x->bands[1])
                          : relative(b.X1.adjoint() * b.X1 - true_x->bands[1].adjoint() * true_x->bands[1],
                                     true_x->bands[1].adjoint() * true_x->bands[1]);
      }
      if (opts.mode == BaseMode::blind && b.ambiguous) {
        st.status = "unstable";
        st.message = "reflection ambiguous";
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      st.status = "failed";
      st.message = e.what();
      res.x.bands[0] = m1.bands[0];
    }
    st.seconds = seconds_since(t0);
    rep.stages.push_back(st);
  }

  for (int ell = 1; ell <= L; ++ell) {
    {
      StageReport st;
      st.band = ell;
      st.kind = "distribution";
      const auto t0 = Clock::now();
      try {
        const LinearSolve sol = solve_distribution_band(ell, m2, res.x.truncated(std::max(1, ell - 1)),
                                                        opts, &m1);
        res.rho.bands[ell] = sol.solution;
        finish(st, sol);
        st.error = band_error_rho(ell);
      } catch (const std::exception& e) {
        res.rho.bands[ell].setZero();
        st.status = "failed";
        st.message = "distribution band " + std::to_string(ell) + ": " + e.what();
      }
      st.seconds = seconds_since(t0);
      rep.stages.push_back(st);
    }
    if (ell < 2) continue;
    StageReport st;
    st.band = ell;
    st.kind = "signal";
    const auto t0 = Clock::now();
    try {
      const LinearSolve sol = solve_signal_band(ell, m2, res.rho.truncated(ell),
                                                res.x.truncated(ell - 1), opts, &m1);
      res.x.bands[ell] = sol.solution;
      finish(st, sol);
      st.error = band_error_x(ell);
    } catch (const std::exception& e) {
      res.x.bands[ell].setZero();
      st.status = "failed";
      st.message = "signal band " + std::to_string(ell) + ": " + e.what();
    }
    st.seconds = seconds_since(t0);
    rep.stages.push_back(st);
  }

  if (true_x) {
    rep.signal_error = direct ? relative_error(*true_x, res.x).relative_error : gram_error(*true_x, res.x);
  }
  if (true_rho) {
    rep.distribution_error =
        direct ? relative_error(*true_rho, res.rho).relative_error : gram_error(*true_rho, res.rho);
  }
  rep.seconds = seconds_since(t_start);
  return res;
}

}  // namespace so3orbit
