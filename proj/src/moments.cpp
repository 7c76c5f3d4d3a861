#include "so3orbit/moments.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "so3orbit/harmonics.hpp"
#include "so3orbit/reduce.hpp"

namespace so3orbit {

namespace {

double parity(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

std::string triple_name(int l1, int l2, int l3) {
  return "(" + std::to_string(l1) + "," + std::to_string(l2) + "," + std::to_string(l3) + ")";
}

// Flat storage plan for one (L, R). Only l2 <= l3 components are accumulated;
// the others follow from the swap symmetry.
struct Layout {
  int L = 0;
  int R = 0;
  std::vector<std::size_t> band_offset;
  std::size_t m1_size = 0;
  struct Coupling {
    int l1;
    std::size_t offset;
  };
  struct Pair {
    int l2, l3;
    std::vector<Coupling> couplings;
  };
  std::vector<Pair> pairs;
  std::size_t m2_size = 0;

  Layout(int L_, int R_) : L(L_), R(R_) {
    for (int l = 0; l <= L; ++l) {
      band_offset.push_back(m1_size);
      m1_size += static_cast<std::size_t>(band_dim(l)) * R;
    }
    for (int l2 = 0; l2 <= L; ++l2)
      for (int l3 = l2; l3 <= L; ++l3) {
        Pair p{l2, l3, {}};
        for (int l1 = l3 - l2; l1 <= std::min(l2 + l3, L); ++l1) {
          p.couplings.push_back({l1, m2_size});
          m2_size += static_cast<std::size_t>(band_dim(l1)) * R * R;
        }
        pairs.push_back(std::move(p));
      }
  }
};

struct Accumulator {
  std::vector<cplx> m1;
  std::vector<cplx> m2;
  double noise_energy = 0.0;

  explicit Accumulator(const Layout& lay) : m1(lay.m1_size), m2(lay.m2_size) {}

  Accumulator& operator+=(const Accumulator& o) {
    for (std::size_t i = 0; i < m1.size(); ++i) m1[i] += o.m1[i];
    for (std::size_t i = 0; i < m2.size(); ++i) m2[i] += o.m2[i];
    noise_energy += o.noise_energy;
    return *this;
  }
};

// Adds the columns of Y (one flattened observation each, band-major as in
// the first-moment layout) to acc with optional weights. The bilinear block
// S = Y diag(w) Y^T is formed once per call and projected onto the isotypic
// components, which costs far less than projecting every observation.
void accumulate_block(const Layout& lay, const CGTable& cg, const CMatrix& Y, Eigen::Index cols,
                      const CVector* weights, Accumulator& acc) {
  const auto Yc = Y.leftCols(cols);
  const Eigen::Index D = static_cast<Eigen::Index>(lay.m1_size);
  CMatrix S(D, D);
  CVector first;
  CMatrix Yw;
  if (weights != nullptr) {
    Yw = Yc * weights->head(cols).asDiagonal();
  } else {
    Yw = Yc;
  }
  first = Yw.rowwise().sum();
  // only blocks with l2 <= l3 are read below
  for (int l = 0; l <= lay.L; ++l) {
    const Eigen::Index off = static_cast<Eigen::Index>(lay.band_offset[l]);
    const Eigen::Index rows = static_cast<Eigen::Index>(band_dim(l)) * lay.R;
    S.block(off, off, rows, D - off).noalias() = Yw.middleRows(off, rows) * Yc.bottomRows(D - off).transpose();
  }
  for (std::size_t i = 0; i < lay.m1_size; ++i) acc.m1[i] += first(static_cast<Eigen::Index>(i));

  const int R = lay.R;
  for (const auto& p : lay.pairs) {
    const int d2 = band_dim(p.l2), d3 = band_dim(p.l3);
    for (int s2 = 0; s2 < R; ++s2) {
      const Eigen::Index base2 = static_cast<Eigen::Index>(lay.band_offset[p.l2]) + s2 * d2;
      for (int s3 = (p.l2 == p.l3 ? s2 : 0); s3 < R; ++s3) {
        const Eigen::Index base3 = static_cast<Eigen::Index>(lay.band_offset[p.l3]) + s3 * d3;
        for (const auto& c : p.couplings) {
          const int l1 = c.l1;
          const double* blk = cg.block(p.l2, p.l3, l1);
          cplx* col = acc.m2.data() + c.offset +
                      static_cast<std::size_t>(s2 * R + s3) * band_dim(l1);
          for (int k2 = -p.l2; k2 <= p.l2; ++k2) {
            const int lo = std::max(-p.l3, -l1 - k2);
            const int hi = std::min(p.l3, l1 - k2);
            const int row = midx(p.l2, k2) * d3;
            for (int k3 = lo; k3 <= hi; ++k3) {
              col[midx(l1, k2 + k3)] +=
                  blk[row + midx(p.l3, k3)] * S(base2 + midx(p.l2, k2), base3 + midx(p.l3, k3));
            }
          }
        }
      }
    }
  }
}

void flatten_into(const Layout& lay, const Signal& y, CMatrix& Y, Eigen::Index col) {
  for (int l = 0; l <= lay.L; ++l) {
    const Eigen::Index cnt = static_cast<Eigen::Index>(band_dim(l)) * lay.R;
    Y.col(col).segment(static_cast<Eigen::Index>(lay.band_offset[l]), cnt) =
        Eigen::Map<const CVector>(y.bands[l].data(), cnt);
  }
}

// Scales by 1/total and fills in the components the accumulator skips.
void finalize(const Layout& lay, const Accumulator& acc, cplx scale, FirstMoment& m1,
              SecondMoment& m2) {
  const int R = lay.R;
  m1 = Signal(lay.L, R);
  for (int l = 0; l <= lay.L; ++l) {
    const cplx* src = acc.m1.data() + lay.band_offset[l];
    m1.bands[l] = scale * Eigen::Map<const CMatrix>(src, band_dim(l), R);
  }
  m2 = SecondMoment::zeros(lay.L, R);
  for (const auto& p : lay.pairs) {
    for (const auto& c : p.couplings) {
      const int d1 = band_dim(c.l1);
      CMatrix comp = scale * Eigen::Map<const CMatrix>(acc.m2.data() + c.offset, d1, R * R);
      const double sign = parity(p.l2 + p.l3 - c.l1);
      if (p.l2 == p.l3) {
        for (int s2 = 0; s2 < R; ++s2)
          for (int s3 = 0; s3 < s2; ++s3) comp.col(s2 * R + s3) = sign * comp.col(s3 * R + s2);
        m2.at(c.l1, p.l2, p.l3) = comp;
      } else {
        CMatrix swapped(d1, R * R);
        for (int s2 = 0; s2 < R; ++s2)
          for (int s3 = 0; s3 < R; ++s3) swapped.col(s3 * R + s2) = sign * comp.col(s2 * R + s3);
        m2.at(c.l1, p.l2, p.l3) = comp;
        m2.at(c.l1, p.l3, p.l2) = swapped;
      }
    }
  }
}

std::string format_diff(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct QuadratureResult {
  FirstMoment m1;
  SecondMoment m2;
};

QuadratureResult integrate(const SO3Function& rho, const Signal& x, const QuadratureGrid& grid) {
  const Layout lay(x.L, x.R);
  const CGTable& cg = CGTable::shared(x.L);
  WignerEvaluator ev(std::max(x.L, rho.degree()));
  Accumulator acc(lay);
  const Eigen::Index chunk = static_cast<Eigen::Index>(kReduceBlock);
  CMatrix Y(static_cast<Eigen::Index>(lay.m1_size), chunk);
  CVector w(chunk);
  Eigen::Index used = 0;
  Signal y(x.L, x.R);
  for (int ib = 0; ib < grid.n_beta; ++ib) {
    for (double a : grid.alpha) {
      for (double c : grid.gamma) {
        const auto D = ev.D(a, grid.beta[ib], c);
        w(used) = grid.weight(ib) * rho(D);
        for (int l = 0; l <= x.L; ++l) y.bands[l].noalias() = D[l] * x.bands[l];
        flatten_into(lay, y, Y, used);
        if (++used == chunk) {
          accumulate_block(lay, cg, Y, used, &w, acc);
          used = 0;
        }
      }
    }
  }
  if (used > 0) accumulate_block(lay, cg, Y, used, &w, acc);
  QuadratureResult r;
  finalize(lay, acc, 1.0, r.m1, r.m2);
  return r;
}

}  // namespace

std::vector<Triple> SecondMoment::admissible_triples(int L) {
  std::vector<Triple> out;
  for (int l1 = 0; l1 <= L; ++l1)
    for (int l2 = 0; l2 <= L; ++l2)
      for (int l3 = 0; l3 <= L; ++l3)
        if (l1 >= std::abs(l2 - l3) && l1 <= l2 + l3) out.push_back({l1, l2, l3});
  return out;
}

SecondMoment SecondMoment::zeros(int L, int R) {
  if (L < 0 || R < 1) throw std::invalid_argument("SecondMoment requires L >= 0 and R >= 1");
  SecondMoment m;
  m.L = L;
  m.R = R;
  for (const auto& t : admissible_triples(L))
    m.components.emplace(t, CMatrix::Zero(band_dim(t[0]), R * R));
  return m;
}

const CMatrix& SecondMoment::at(int l1, int l2, int l3) const {
  auto it = components.find({l1, l2, l3});
  if (it == components.end()) {
    throw std::out_of_range("SecondMoment: no component " + triple_name(l1, l2, l3));
  }
  return it->second;
}

CMatrix& SecondMoment::at(int l1, int l2, int l3) {
  auto it = components.find({l1, l2, l3});
  if (it == components.end()) {
    throw std::out_of_range("SecondMoment: no component " + triple_name(l1, l2, l3));
  }
  return it->second;
}

double max_abs_diff(const SecondMoment& a, const SecondMoment& b) {
  if (a.L != b.L || a.R != b.R) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (const auto& [t, c] : a.components) {
    worst = std::max(worst, (c - b.at(t[0], t[1], t[2])).cwiseAbs().maxCoeff());
  }
  return worst;
}

double max_abs_diff(const FirstMoment& a, const FirstMoment& b) {
  if (a.L != b.L || a.R != b.R) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (int l = 0; l <= a.L; ++l)
    worst = std::max(worst, (a.bands[l] - b.bands[l]).cwiseAbs().maxCoeff());
  return worst;
}

FirstMoment population_first_moment(const Distribution& rho, const Signal& x) {
  if (rho.L != x.L) {
    throw std::invalid_argument("population_first_moment: distribution L=" +
                                std::to_string(rho.L) + " but signal L=" + std::to_string(x.L));
  }
  FirstMoment m(x.L, x.R);
  for (int l = 0; l <= x.L; ++l) m.bands[l] = rho.bands[l].adjoint() * x.bands[l];
  return m;
}

SecondMoment population_second_moment(const Distribution& rho, const Signal& x) {
  if (rho.L != x.L) {
    throw std::invalid_argument("population_second_moment: distribution L=" +
                                std::to_string(rho.L) + " but signal L=" + std::to_string(x.L));
  }
  const int R = x.R;
  const CGTable& cg = CGTable::shared(x.L);
  SecondMoment m = SecondMoment::zeros(x.L, R);
  for (auto& [t, comp] : m.components) {
    const auto [l1, l2, l3] = t;
    const CMatrix rho_adj = rho.bands[l1].adjoint();
    CVector proj(band_dim(l1));
    for (int s2 = 0; s2 < R; ++s2)
      for (int s3 = 0; s3 < R; ++s3) {
        proj.setZero();
        cg_project_accumulate(x.bands[l2].col(s2).data(), l2, x.bands[l3].col(s3).data(), l3, l1,
                              cg, 1.0, proj.data());
        comp.col(s2 * R + s3) = rho_adj * proj;
      }
  }
  return m;
}

QuadratureFirst quadrature_first_moment(const SO3Function& rho_density, const Signal& x,
                                        const QuadratureGrid& grid) {
  QuadratureFirst out;
  out.moment = integrate(rho_density, x, grid).m1;
  const int need = rho_density.degree() + x.L;
  if (!grid.exact_for_band(need)) {
    out.warnings.push_back("grid exact to band " + std::to_string(grid.exact_band()) +
                           ", integrand needs " + std::to_string(need));
  }
  const double diff = max_abs_diff(out.moment, integrate(rho_density, x, grid.halved()).m1);
  if (diff > 1e-6) {
    out.warnings.push_back("halving the grid changed the first moment by " + format_diff(diff));
  }
  return out;
}

SecondMoment quadrature_second_moment(const SO3Function& rho_density, const Signal& x,
                                      const QuadratureGrid& grid) {
  SecondMoment m = integrate(rho_density, x, grid).m2;
  const int need = rho_density.degree() + 2 * x.L;
  if (!grid.exact_for_band(need)) {
    m.warnings.push_back("grid exact to band " + std::to_string(grid.exact_band()) +
                         ", integrand needs " + std::to_string(need));
  }
  const double diff = max_abs_diff(m, integrate(rho_density, x, grid.halved()).m2);
  if (diff > 1e-6) {
    m.warnings.push_back("halving the grid changed the second moment by " + format_diff(diff));
  }
  return m;
}

EmpiricalMoments empirical_moments(const ObservationSource& obs, double sigma, bool debias,
                                   int workers) {
  const std::uint64_t n = obs.size();
  if (n == 0) throw std::invalid_argument("empirical moments: empty observation set");
  if (!(sigma >= 0.0)) throw std::invalid_argument("empirical moments: sigma must be >= 0");
  const Layout lay(obs.L(), obs.R());
  const CGTable& cg = CGTable::shared(obs.L());
  auto leaf = [&](std::uint64_t b, std::uint64_t e) {
    Accumulator acc(lay);
    CMatrix Y(static_cast<Eigen::Index>(lay.m1_size), static_cast<Eigen::Index>(e - b));
    Signal y(obs.L(), obs.R());
    for (std::uint64_t i = b; i < e; ++i) {
      acc.noise_energy += obs.observation(i, y);
      flatten_into(lay, y, Y, static_cast<Eigen::Index>(i - b));
    }
    accumulate_block(lay, cg, Y, Y.cols(), nullptr, acc);
    return acc;
  };
  const Accumulator total =
      tree_reduce<Accumulator>(0, n, leaf, workers > 0 ? workers : default_workers());
  EmpiricalMoments out;
  finalize(lay, total, 1.0 / static_cast<double>(n), out.m1, out.m2);
  out.m2.n_used = n;
  out.mean_noise_energy = total.noise_energy / static_cast<double>(n);
  if (debias) debias_second_moment(out.m2, sigma, obs.noise_mode());
  return out;
}

FirstMoment empirical_first_moment(const ObservationSource& obs, int workers) {
  return empirical_moments(obs, 0.0, false, workers).m1;
}

SecondMoment empirical_second_moment(const ObservationSource& obs, double sigma, int workers) {
  return empirical_moments(obs, sigma, true, workers).m2;
}

double noise_bias(int l, double sigma, NoiseMode mode) {
  if (mode == NoiseMode::circular) return 0.0;
  return parity(l) * std::sqrt(static_cast<double>(band_dim(l))) * sigma * sigma;
}

void debias_second_moment(SecondMoment& m2, double sigma, NoiseMode mode) {
  m2.sigma_used = sigma;
  if (sigma == 0.0) return;
  for (int l = 0; l <= m2.L; ++l) {
    const double b = noise_bias(l, sigma, mode);
    if (b == 0.0) continue;
    CMatrix& comp = m2.at(0, l, l);
    for (int s = 0; s < m2.R; ++s) comp(0, s * m2.R + s) -= b;
  }
}

}  // namespace so3orbit
