#pragma once

// Dense primal-dual interior-point solver for small semidefinite programs
// with Hermitian (or real symmetric) matrix blocks.
//
// Problem form (maximisation):
//
//     maximize    sum_j Re Tr(C_j X_j)
//     subject to  sum_j Re Tr(A_ij X_j)  = b_i      (equalities)
//                 sum_j Re Tr(A_ij X_j) >= b_i      (inequalities)
//                 X_j >= 0
//
// Complex blocks are mapped to real symmetric blocks of twice the size via
// X -> [[Re X, -Im X], [Im X, Re X]]; 1x1 blocks and inequality slacks are
// collected into a single nonnegative-orthant block. The real core runs an
// infeasible-start HKM predictor-corrector iteration.

#include "distrust/core.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace distrust::sdp {

enum class Field { complex, real };

struct BlockSpec {
  int dim = 1;
  Field field = Field::complex;
};

/// One linear constraint: sum over listed blocks of Re Tr(A X) compared with rhs.
struct Constraint {
  std::vector<std::pair<int, ComplexMatrix>> terms;
  double rhs = 0.0;
};

class SdpProblem {
 public:
  int add_block(int dim, Field field = Field::complex) {
    if (dim < 1) throw DimensionError("SdpProblem: block dimension must be positive");
    blocks_.push_back({dim, field});
    objective_.emplace_back();
    return static_cast<int>(blocks_.size()) - 1;
  }

  void set_objective(int block, ComplexMatrix c) {
    check_term(block, c);
    objective_.at(static_cast<std::size_t>(block)) = std::move(c);
  }

  int add_equality(Constraint c) {
    for (const auto& [blk, a] : c.terms) check_term(blk, a);
    equalities_.push_back(std::move(c));
    return static_cast<int>(equalities_.size()) - 1;
  }

  int add_inequality(Constraint c) {
    for (const auto& [blk, a] : c.terms) check_term(blk, a);
    inequalities_.push_back(std::move(c));
    return static_cast<int>(inequalities_.size()) - 1;
  }

  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  const std::vector<ComplexMatrix>& objective() const { return objective_; }
  const std::vector<Constraint>& equalities() const { return equalities_; }
  const std::vector<Constraint>& inequalities() const { return inequalities_; }

 private:
  void check_term(int block, const ComplexMatrix& a) const {
    if (block < 0 || block >= static_cast<int>(blocks_.size()))
      throw DimensionError("SdpProblem: unknown block index");
    const auto& spec = blocks_[static_cast<std::size_t>(block)];
    if (a.rows() != spec.dim || a.cols() != spec.dim)
      throw DimensionError("SdpProblem: coefficient matrix does not match block dimension");
    if (detail::hermiticity_defect(a) > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
      throw InvariantError("SdpProblem: coefficient matrix is not Hermitian");
    if ((spec.field == Field::real || spec.dim == 1) && a.imag().cwiseAbs().maxCoeff() > 1e-12)
      throw InvariantError("SdpProblem: complex coefficient on a real block");
  }

  std::vector<BlockSpec> blocks_;
  std::vector<ComplexMatrix> objective_;
  std::vector<Constraint> equalities_;
  std::vector<Constraint> inequalities_;
};

enum class Status { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "?";
}

struct SdpSolution {
  Status status = Status::numerical_failure;
  double value = 0.0;       // primal objective
  double dual_value = 0.0;  // dual objective b^T y
  double gap = 0.0;         // dual_value - value
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  std::vector<ComplexMatrix> blocks;
  /// Multipliers: equalities first, then inequalities.
  RealVector dual;
};

struct SolverOptions {
  double tolerance = 1e-8;
  double report_tolerance = 1e-7;
  int max_iterations = 200;
  double step_fraction = 0.98;
  bool verbose = false;
};

// ---------------------------------------------------------------------------
// Real standard form and the interior-point core.

struct RealForm {
  std::vector<int> dims;              // real symmetric PSD blocks
  int lp = 0;                         // nonnegative orthant size
  std::vector<RealMatrix> c;          // objective per PSD block
  RealVector c_lp;
  std::vector<RealMatrix> a;          // per block: m x svec_len(dim), rows svec(A_ij)
  std::vector<std::vector<char>> nz;  // per block, per constraint: nonzero flag
  RealMatrix a_lp;                    // m x lp
  RealVector b;

  int constraints() const { return static_cast<int>(b.size()); }
};

struct RealResult {
  Status status = Status::numerical_failure;
  std::vector<RealMatrix> x, z;
  RealVector x_lp, z_lp, y;
  double pobj = 0, dobj = 0, pinf = 0, dinf = 0, rgap = 0;
  int iterations = 0;
};

namespace detail {

inline int svec_len(int n) { return n * (n + 1) / 2; }

inline RealVector svec(const RealMatrix& s) {
  const int n = static_cast<int>(s.rows());
  RealVector v(svec_len(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    v(k++) = s(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = std::numbers::sqrt2 * 0.5 * (s(i, j) + s(j, i));
  }
  return v;
}

template <typename Vec>
RealMatrix smat(const Vec& v, int n) {
  RealMatrix s(n, n);
  int k = 0;
  constexpr double inv = 1.0 / std::numbers::sqrt2;
  for (int j = 0; j < n; ++j) {
    s(j, j) = v(k++);
    for (int i = j + 1; i < n; ++i) {
      s(i, j) = v(k++) * inv;
      s(j, i) = s(i, j);
    }
  }
  return s;
}

inline RealMatrix sym(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

// Largest step alpha with X + alpha dX PSD, given the Cholesky factor of X.
inline double max_step_psd(const Eigen::LLT<RealMatrix>& chol, const RealMatrix& dx) {
  RealMatrix w = chol.matrixL().solve(dx);
  w = chol.matrixL().solve(w.transpose()).transpose();
  w = sym(w);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(w, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

inline double max_step_lp(const RealVector& x, const RealVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  return a;
}

}  // namespace detail

class InteriorPoint {
 public:
  InteriorPoint(const RealForm& f, const SolverOptions& opt) : f_(f), opt_(opt) {}

  RealResult run() {
    const int m = f_.constraints();
    const int nb = static_cast<int>(f_.dims.size());
    RealResult r;
    init(r);

    const double bnorm = f_.b.norm();
    double cnorm2 = f_.c_lp.squaredNorm();
    for (const auto& c : f_.c) cnorm2 += c.squaredNorm();
    const double cnorm = std::sqrt(cnorm2);
    int total = f_.lp;
    for (int d : f_.dims) total += d;

    std::vector<Eigen::LLT<RealMatrix>> cx(static_cast<std::size_t>(nb)), cz(static_cast<std::size_t>(nb));
    std::vector<RealMatrix> zinv(static_cast<std::size_t>(nb));
    int stalls = 0;
    double best_merit = std::numeric_limits<double>::infinity();
    RealResult best;

    for (int it = 0; it <= opt_.max_iterations; ++it) {
      r.iterations = it;
      // Residuals.
      const RealVector ax = apply_a(r.x, r.x_lp);
      const RealVector rp = f_.b - ax;
      std::vector<RealMatrix> rd(static_cast<std::size_t>(nb));
      const auto aty = apply_at(r.y);
      double rdn2 = 0;
      for (int j = 0; j < nb; ++j) {
        rd[j] = f_.c[j] - aty.first[j] + r.z[j];
        rdn2 += rd[j].squaredNorm();
      }
      const RealVector rd_lp = f_.c_lp - aty.second + r.z_lp;
      rdn2 += rd_lp.squaredNorm();

      double pobj = f_.c_lp.dot(r.x_lp), xz = r.x_lp.dot(r.z_lp);
      for (int j = 0; j < nb; ++j) {
        pobj += (f_.c[j].cwiseProduct(r.x[j])).sum();
        xz += (r.x[j].cwiseProduct(r.z[j])).sum();
      }
      const double dobj = f_.b.dot(r.y);
      r.pobj = pobj;
      r.dobj = dobj;
      r.pinf = rp.norm() / (1.0 + bnorm);
      r.dinf = std::sqrt(rdn2) / (1.0 + cnorm);
      r.rgap = std::max(std::abs(dobj - pobj), std::abs(xz)) / (1.0 + std::abs(pobj) + std::abs(dobj));
      const double merit = std::max({r.pinf, r.dinf, r.rgap});
      if (opt_.verbose)
        std::fprintf(stderr, "it %3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e\n", it, pobj, dobj,
                     r.pinf, r.dinf, r.rgap);
      if (merit < best_merit) {
        best_merit = merit;
        best = r;
      }
      if (merit <= opt_.tolerance) {
        r.status = Status::optimal;
        return r;
      }
      // Diverging objective with the other side (nearly) feasible certifies
      // infeasibility of the opposite problem.
      const double big = 1e8 * (1.0 + bnorm + cnorm);
      if (dobj < -big && r.dinf < 1e-6) {
        r.status = Status::infeasible;
        return r;
      }
      if (pobj > big && r.pinf < 1e-6) {
        r.status = Status::unbounded;
        return r;
      }
      if (it == opt_.max_iterations) break;

      const double mu = xz / total;
      bool ok = true;
      for (int j = 0; j < nb; ++j) {
        cx[j].compute(r.x[j]);
        cz[j].compute(r.z[j]);
        if (cx[j].info() != Eigen::Success || cz[j].info() != Eigen::Success) {
          ok = false;
          break;
        }
        zinv[j] = cz[j].solve(RealMatrix::Identity(f_.dims[j], f_.dims[j]));
        zinv[j] = detail::sym(zinv[j]);
      }
      if (!ok) break;

      // Schur complement.
      RealMatrix schur = RealMatrix::Zero(m, m);
      for (int j = 0; j < nb; ++j) {
        const int n = f_.dims[j];
        RealMatrix brows = RealMatrix::Zero(m, detail::svec_len(n));
        for (int i = 0; i < m; ++i) {
          if (!f_.nz[j][i]) continue;
          const RealMatrix ai = detail::smat(f_.a[j].row(i).transpose(), n);
          brows.row(i) = detail::svec(r.x[j] * ai * zinv[j]).transpose();
        }
        schur.noalias() += f_.a[j] * brows.transpose();
      }
      if (f_.lp > 0) {
        const RealVector w = r.x_lp.cwiseQuotient(r.z_lp);
        schur.noalias() += f_.a_lp * w.asDiagonal() * f_.a_lp.transpose();
      }
      schur = detail::sym(schur);
      Eigen::LLT<RealMatrix> schol(schur);
      std::optional<Eigen::LDLT<RealMatrix>> sldlt;
      if (schol.info() != Eigen::Success) {
        const double reg = 1e-13 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
        sldlt.emplace(schur + reg * RealMatrix::Identity(m, m));
      }
      auto solve_schur = [&](const RealVector& rhs) -> RealVector {
        RealVector s = sldlt ? RealVector(sldlt->solve(rhs)) : RealVector(schol.solve(rhs));
        // One step of iterative refinement.
        const RealVector res = rhs - schur * s;
        s += sldlt ? RealVector(sldlt->solve(res)) : RealVector(schol.solve(res));
        return s;
      };

      // Predictor (sigma = 0), then corrector.
      Direction pred = direction(r, rd, rd_lp, zinv, 0.0, mu, nullptr, solve_schur);
      double ap = std::min(1.0, step_primal(r, pred, cx));
      double ad = std::min(1.0, step_dual(r, pred, cz));
      double mu_aff = 0;
      for (int j = 0; j < nb; ++j)
        mu_aff += ((r.x[j] + ap * pred.dx[j]).cwiseProduct(r.z[j] + ad * pred.dz[j])).sum();
      mu_aff += (r.x_lp + ap * pred.dx_lp).dot(r.z_lp + ad * pred.dz_lp);
      mu_aff /= total;
      double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
      sigma = std::clamp(sigma, 0.0, 1.0);
      Direction corr = direction(r, rd, rd_lp, zinv, sigma, mu, &pred, solve_schur);
      const double gamma = std::min(opt_.step_fraction, 0.9 + 0.09 * std::min(ap, ad));
      ap = std::min(1.0, gamma * step_primal(r, corr, cx));
      ad = std::min(1.0, gamma * step_dual(r, corr, cz));
      if (!std::isfinite(ap) || !std::isfinite(ad)) break;
      if (opt_.verbose) std::fprintf(stderr, "      sigma %.3e ap %.3e ad %.3e\n", sigma, ap, ad);

      for (int j = 0; j < nb; ++j) {
        r.x[j] += ap * corr.dx[j];
        r.z[j] += ad * corr.dz[j];
        r.x[j] = detail::sym(r.x[j]);
        r.z[j] = detail::sym(r.z[j]);
      }
      r.x_lp += ap * corr.dx_lp;
      r.z_lp += ad * corr.dz_lp;
      r.y += ad * corr.dy;

      if (ap < 1e-9 && ad < 1e-9) {
        if (++stalls >= 3) break;
      } else {
        stalls = 0;
      }
    }
    // Did not reach the working tolerance: fall back to the best iterate.
    best.status = std::max({best.pinf, best.dinf, best.rgap}) <= opt_.report_tolerance
                      ? Status::optimal
                      : Status::numerical_failure;
    return best;
  }

 private:
  struct Direction {
    std::vector<RealMatrix> dx, dz;
    RealVector dx_lp, dz_lp, dy;
  };

  void init(RealResult& r) const {
    const int m = f_.constraints();
    const int nb = static_cast<int>(f_.dims.size());
    double xi_p = 10.0, xi_d = 10.0;
    double cmax = f_.c_lp.size() ? f_.c_lp.cwiseAbs().maxCoeff() : 0.0;
    for (int j = 0; j < nb; ++j) {
      xi_p = std::max(xi_p, std::sqrt(static_cast<double>(f_.dims[j])));
      xi_d = std::max(xi_d, std::sqrt(static_cast<double>(f_.dims[j])));
      cmax = std::max(cmax, f_.c[j].norm());
    }
    for (int i = 0; i < m; ++i) {
      double an2 = f_.lp ? f_.a_lp.row(i).squaredNorm() : 0.0;
      for (int j = 0; j < nb; ++j) an2 += f_.a[j].row(i).squaredNorm();
      const double an = std::sqrt(an2);
      xi_p = std::max(xi_p, (1.0 + std::abs(f_.b(i))) / (1.0 + an));
      xi_d = std::max(xi_d, an);
    }
    xi_d = std::max(xi_d, 1.0 + cmax);
    r.x.clear();
    r.z.clear();
    for (int j = 0; j < nb; ++j) {
      r.x.push_back(xi_p * RealMatrix::Identity(f_.dims[j], f_.dims[j]));
      r.z.push_back(xi_d * RealMatrix::Identity(f_.dims[j], f_.dims[j]));
    }
    r.x_lp = RealVector::Constant(f_.lp, xi_p);
    r.z_lp = RealVector::Constant(f_.lp, xi_d);
    r.y = RealVector::Zero(m);
  }

  RealVector apply_a(const std::vector<RealMatrix>& x, const RealVector& x_lp) const {
    RealVector v = RealVector::Zero(f_.constraints());
    for (std::size_t j = 0; j < x.size(); ++j) v.noalias() += f_.a[j] * detail::svec(x[j]);
    if (f_.lp > 0) v.noalias() += f_.a_lp * x_lp;
    return v;
  }

  std::pair<std::vector<RealMatrix>, RealVector> apply_at(const RealVector& y) const {
    std::vector<RealMatrix> out;
    for (std::size_t j = 0; j < f_.dims.size(); ++j)
      out.push_back(detail::smat(RealVector(f_.a[j].transpose() * y), f_.dims[j]));
    RealVector lp = f_.lp > 0 ? RealVector(f_.a_lp.transpose() * y) : RealVector(0);
    return {std::move(out), std::move(lp)};
  }

  template <typename SolveFn>
  Direction direction(const RealResult& r, const std::vector<RealMatrix>& rd, const RealVector& rd_lp,
                      const std::vector<RealMatrix>& zinv, double sigma, double mu, const Direction* pred,
                      SolveFn&& solve_schur) const {
    const int nb = static_cast<int>(f_.dims.size());
    // G = sigma mu Z^-1 + X Rd Z^-1 - dXa dZa Z^-1 ; rhs = A(G) - b.
    std::vector<RealMatrix> g(static_cast<std::size_t>(nb));
    for (int j = 0; j < nb; ++j) {
      g[j] = sigma * mu * zinv[j] + r.x[j] * rd[j] * zinv[j];
      if (pred) g[j] -= pred->dx[j] * pred->dz[j] * zinv[j];
      g[j] = detail::sym(g[j]);
    }
    RealVector g_lp(f_.lp);
    for (int i = 0; i < f_.lp; ++i) {
      g_lp(i) = (sigma * mu + r.x_lp(i) * rd_lp(i)) / r.z_lp(i);
      if (pred) g_lp(i) -= pred->dx_lp(i) * pred->dz_lp(i) / r.z_lp(i);
    }
    const RealVector rhs = apply_a(g, g_lp) - f_.b;

    Direction d;
    d.dy = solve_schur(rhs);
    fill_direction(r, rd, rd_lp, zinv, sigma, mu, pred, d);
    // Refine dy against the primal equation A(dX) = b - A(X) itself; the
    // Schur right-hand side suffers cancellation once Z^-1 grows large.
    const RealVector rp = f_.b - apply_a(r.x, r.x_lp);
    for (int pass = 0; pass < 2; ++pass) {
      const RealVector err = apply_a(d.dx, d.dx_lp) - rp;
      if (err.norm() <= 1e-14 * (1.0 + rp.norm() + f_.b.norm())) break;
      d.dy += solve_schur(err);
      fill_direction(r, rd, rd_lp, zinv, sigma, mu, pred, d);
    }
    return d;
  }

  void fill_direction(const RealResult& r, const std::vector<RealMatrix>& rd, const RealVector& rd_lp,
                      const std::vector<RealMatrix>& zinv, double sigma, double mu, const Direction* pred,
                      Direction& d) const {
    const int nb = static_cast<int>(f_.dims.size());
    auto aty = apply_at(d.dy);
    d.dz.resize(static_cast<std::size_t>(nb));
    d.dx.resize(static_cast<std::size_t>(nb));
    for (int j = 0; j < nb; ++j) {
      d.dz[j] = aty.first[j] - rd[j];
      RealMatrix dx = sigma * mu * zinv[j] - r.x[j] - r.x[j] * d.dz[j] * zinv[j];
      if (pred) dx -= pred->dx[j] * pred->dz[j] * zinv[j];
      d.dx[j] = detail::sym(dx);
    }
    d.dz_lp = aty.second - rd_lp;
    d.dx_lp.resize(f_.lp);
    for (int i = 0; i < f_.lp; ++i) {
      double v = (sigma * mu - r.x_lp(i) * d.dz_lp(i)) / r.z_lp(i) - r.x_lp(i);
      if (pred) v -= pred->dx_lp(i) * pred->dz_lp(i) / r.z_lp(i);
      d.dx_lp(i) = v;
    }
  }

  double step_primal(const RealResult& r, const Direction& d, const std::vector<Eigen::LLT<RealMatrix>>& cx) const {
    double a = detail::max_step_lp(r.x_lp, d.dx_lp);
    for (std::size_t j = 0; j < f_.dims.size(); ++j) a = std::min(a, detail::max_step_psd(cx[j], d.dx[j]));
    return a;
  }

  double step_dual(const RealResult& r, const Direction& d, const std::vector<Eigen::LLT<RealMatrix>>& cz) const {
    double a = detail::max_step_lp(r.z_lp, d.dz_lp);
    for (std::size_t j = 0; j < f_.dims.size(); ++j) a = std::min(a, detail::max_step_psd(cz[j], d.dz[j]));
    return a;
  }

  const RealForm& f_;
  SolverOptions opt_;
};

// ---------------------------------------------------------------------------
// Hermitian problem -> real form and back.

namespace detail {

inline RealMatrix embed(const ComplexMatrix& a) {
  const auto n = a.rows();
  RealMatrix e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = a.real();
  e.topRightCorner(n, n) = -a.imag();
  e.bottomLeftCorner(n, n) = a.imag();
  e.bottomRightCorner(n, n) = a.real();
  return e;
}

struct Layout {
  // For each problem block: index into RealForm::dims (or -1 for LP) and the
  // LP offset for 1x1 blocks.
  std::vector<int> psd_index;
  std::vector<int> lp_index;
  std::vector<bool> complex;
  int slack_offset = 0;
};

inline Layout make_layout(const SdpProblem& p, RealForm& f) {
  Layout lay;
  int lp = 0;
  for (const auto& b : p.blocks()) {
    if (b.dim == 1) {
      lay.psd_index.push_back(-1);
      lay.lp_index.push_back(lp++);
      lay.complex.push_back(false);
    } else {
      const bool cx = b.field == Field::complex;
      lay.psd_index.push_back(static_cast<int>(f.dims.size()));
      lay.lp_index.push_back(-1);
      lay.complex.push_back(cx);
      f.dims.push_back(cx ? 2 * b.dim : b.dim);
    }
  }
  lay.slack_offset = lp;
  f.lp = lp + static_cast<int>(p.inequalities().size());
  return lay;
}

inline RealMatrix realify(const ComplexMatrix& a, bool cx) {
  return cx ? RealMatrix(0.5 * embed(a)) : RealMatrix(a.real());
}

inline RealForm to_real_form(const SdpProblem& p, Layout& lay) {
  RealForm f;
  lay = make_layout(p, f);
  const int m = static_cast<int>(p.equalities().size() + p.inequalities().size());
  const int nb = static_cast<int>(f.dims.size());
  f.b.resize(m);
  f.c.assign(static_cast<std::size_t>(nb), RealMatrix());
  for (int j = 0; j < nb; ++j) f.c[j] = RealMatrix::Zero(f.dims[j], f.dims[j]);
  f.c_lp = RealVector::Zero(f.lp);
  f.a.assign(static_cast<std::size_t>(nb), RealMatrix());
  f.nz.assign(static_cast<std::size_t>(nb), std::vector<char>(static_cast<std::size_t>(m), 0));
  for (int j = 0; j < nb; ++j) f.a[j] = RealMatrix::Zero(m, svec_len(f.dims[j]));
  f.a_lp = RealMatrix::Zero(m, f.lp);

  for (std::size_t blk = 0; blk < p.blocks().size(); ++blk) {
    const auto& c = p.objective()[blk];
    if (c.size() == 0) continue;
    if (lay.psd_index[blk] >= 0)
      f.c[lay.psd_index[blk]] = realify(c, lay.complex[blk]);
    else
      f.c_lp(lay.lp_index[blk]) = c(0, 0).real();
  }
  auto put = [&](int row, const Constraint& con) {
    for (const auto& [blk, a] : con.terms) {
      const auto b = static_cast<std::size_t>(blk);
      if (lay.psd_index[b] >= 0) {
        const int j = lay.psd_index[b];
        f.a[j].row(row) += svec(realify(a, lay.complex[b])).transpose();
        f.nz[j][row] = 1;
      } else {
        f.a_lp(row, lay.lp_index[b]) += a(0, 0).real();
      }
    }
    f.b(row) = con.rhs;
  };
  int row = 0;
  for (const auto& con : p.equalities()) put(row++, con);
  int s = lay.slack_offset;
  for (const auto& con : p.inequalities()) {
    put(row, con);
    f.a_lp(row, s++) = -1.0;
    ++row;
  }
  return f;
}

inline ComplexMatrix deembed(const RealMatrix& x, bool cx) {
  if (!cx) return x.cast<cplx>();
  const auto n = x.rows() / 2;
  ComplexMatrix h(n, n);
  h.real() = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  h.imag() = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  return 0.5 * (h + h.adjoint());
}

}  // namespace detail

/// Solves the program; see the header comment for the form.
inline SdpSolution solve(const SdpProblem& p, const SolverOptions& opt = {}) {
  if (p.blocks().empty()) throw DimensionError("solve: problem has no blocks");
  detail::Layout lay;
  RealForm f = detail::to_real_form(p, lay);
  // Normalise the objective so that positive rescalings of C follow the same path.
  double cscale = f.c_lp.squaredNorm();
  for (const auto& c : f.c) cscale += c.squaredNorm();
  cscale = cscale > 0 ? std::sqrt(cscale) : 1.0;
  for (auto& c : f.c) c /= cscale;
  f.c_lp /= cscale;
  RealResult r;
  if (f.constraints() == 0) {
    // Without constraints the optimum is 0 (if C <= 0) or unbounded.
    r.status = Status::optimal;
    for (std::size_t j = 0; j < f.dims.size(); ++j) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(f.c[j], Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(es.eigenvalues().size() - 1) > 0) r.status = Status::unbounded;
      r.x.push_back(RealMatrix::Zero(f.dims[j], f.dims[j]));
    }
    if (f.lp > 0 && f.c_lp.maxCoeff() > 0) r.status = Status::unbounded;
    r.x_lp = RealVector::Zero(f.lp);
    r.y = RealVector(0);
  } else {
    r = InteriorPoint(f, opt).run();
  }

  SdpSolution sol;
  sol.status = r.status;
  sol.value = cscale * r.pobj;
  sol.dual_value = cscale * r.dobj;
  sol.gap = sol.dual_value - sol.value;
  sol.primal_residual = r.pinf;
  sol.dual_residual = r.dinf;
  sol.iterations = r.iterations;
  sol.dual = cscale * r.y;
  for (std::size_t blk = 0; blk < p.blocks().size(); ++blk) {
    if (lay.psd_index[blk] >= 0)
      sol.blocks.push_back(detail::deembed(r.x[lay.psd_index[blk]], lay.complex[blk]));
    else
      sol.blocks.push_back(ComplexMatrix::Constant(1, 1, cplx(r.x_lp(lay.lp_index[blk]), 0.0)));
  }
  return sol;
}

/// Orthonormal basis (trace inner product) of the d x d Hermitian matrices.
/// Matching Re Tr(E X) against every element pins a Hermitian X entirely.
inline std::vector<ComplexMatrix> hermitian_basis(int d) {
  std::vector<ComplexMatrix> out;
  const double s = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < d; ++i) {
    ComplexMatrix e = ComplexMatrix::Zero(d, d);
    e(i, i) = 1.0;
    out.push_back(std::move(e));
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      ComplexMatrix re = ComplexMatrix::Zero(d, d), im = ComplexMatrix::Zero(d, d);
      re(i, j) = re(j, i) = s;
      im(i, j) = cplx(0, -s);
      im(j, i) = cplx(0, s);
      out.push_back(std::move(re));
      out.push_back(std::move(im));
    }
  return out;
}

// ---------------------------------------------------------------------------
// max Tr(rho A) s.t. Tr rho = 1, <psi|rho|psi> >= 1 - eps, rho >= 0.

struct InnerProductResult {
  double value = 0.0;
  ComplexMatrix state;
};

/// Exact solver via the one-dimensional Lagrange dual
///     min_{mu >= 0}  lambda_max(A + mu |psi><psi|) - mu (1 - eps),
/// with primal recovery as a mixture of the top eigenvectors bracketing the
/// optimal multiplier.
inline InnerProductResult maximize_inner_product(const ComplexMatrix& a, const ComplexVector& psi, double eps) {
  if (a.rows() != a.cols() || a.rows() != psi.size()) throw DimensionError("maximize_inner_product: dimension mismatch");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvariantError("maximize_inner_product: eps outside [0,1]");
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw InvariantError("maximize_inner_product: target not normalised");
  const double floor = 1.0 - eps;
  const ComplexMatrix proj = psi * psi.adjoint();
  const ComplexMatrix ah = 0.5 * (a + a.adjoint());

  struct Top {
    double lambda;
    ComplexVector vec;
    double fid;
  };
  auto top = [&](double mu) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ah + mu * proj);
    const auto n = es.eigenvalues().size();
    const double lmax = es.eigenvalues()(n - 1);
    // Within a (near-)degenerate top eigenspace take the vector closest to psi.
    const double spread = 1e-12 * std::max(1.0, std::abs(lmax));
    Eigen::Index first = n - 1;
    while (first > 0 && es.eigenvalues()(first - 1) >= lmax - spread) --first;
    const auto space = es.eigenvectors().middleCols(first, n - first);
    ComplexVector v = space * (space.adjoint() * psi);
    if (v.norm() < 1e-14) v = es.eigenvectors().col(n - 1);
    v.normalize();
    return Top{lmax, v, std::norm(psi.dot(v))};
  };

  auto mix = [&](const Top& lo, const Top& hi) {
    // rho = p |hi><hi| + (1-p) |lo><lo| with fidelity exactly at the floor.
    double p = 1.0;
    if (hi.fid - lo.fid > 1e-15) p = std::clamp((floor - lo.fid) / (hi.fid - lo.fid), 0.0, 1.0);
    ComplexMatrix rho = p * hi.vec * hi.vec.adjoint() + (1.0 - p) * lo.vec * lo.vec.adjoint();
    rho = 0.5 * (rho + rho.adjoint());
    const double val = (rho * ah).trace().real();
    return InnerProductResult{val, rho};
  };

  if (eps == 0.0) {
    // The floor pins rho to the target; return it exactly.
    ComplexMatrix rho = proj;
    return InnerProductResult{(psi.adjoint() * ah * psi)(0, 0).real(), rho};
  }
  const Top t0 = top(0.0);
  if (t0.fid >= floor) return InnerProductResult{t0.lambda, t0.vec * t0.vec.adjoint()};

  // Bracket the optimal multiplier: fid(mu) is nondecreasing in mu.
  const double scale = std::max(1.0, ah.cwiseAbs().maxCoeff() * static_cast<double>(a.rows()));
  double lo = 0.0, hi = scale;
  Top thi = top(hi);
  while (thi.fid < floor && hi < 1e12 * scale) {
    lo = hi;
    hi *= 4.0;
    thi = top(hi);
  }
  Top tlo = top(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const Top tm = top(mid);
    if (tm.fid >= floor) {
      hi = mid;
      thi = tm;
    } else {
      lo = mid;
      tlo = tm;
    }
  }
  return mix(tlo, thi);
}

/// The same program posed for the generic solver (used as an independent
/// route in tests and for non-rank-one weights).
inline SdpProblem inner_product_problem(const ComplexMatrix& a, const ComplexMatrix& weight, double floor) {
  SdpProblem p;
  const int d = static_cast<int>(a.rows());
  const int blk = p.add_block(d);
  p.set_objective(blk, 0.5 * (a + a.adjoint()));
  p.add_equality({{{blk, ComplexMatrix::Identity(d, d)}}, 1.0});
  p.add_inequality({{{blk, weight}}, floor});
  return p;
}

}  // namespace distrust::sdp
