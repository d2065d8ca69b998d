#pragma once

// Sampled moment-matrix relaxations. Moment matrices Gamma_ij = Tr(S_i S_j^+)
// of operator words are sampled from random preparations and projective
// measurements until their span stops growing; the relaxation then
// optimises over PSD members of that affine span.

#include "distrust/core.hpp"
#include "distrust/parallel.hpp"
#include "distrust/sdp.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace distrust {

enum class MeasurementModel { quantum, classical };

/// Ordered list of operator words. Symbols are numbered
///   phi_x = x, psi_x = n + x, then either M_{b|y} = 2n + y k + b (quantum)
///   or E_j = 2n + j (classical, one rank-one basis measurement).
/// The empty word is the identity.
struct MonomialList {
  MeasurementModel model = MeasurementModel::quantum;
  int n = 0, m = 0, k = 0;
  int basis_size = 0;  // classical model only
  std::vector<std::vector<int>> words;

  int phi(int x) const { return x; }
  int psi(int x) const { return n + x; }
  int meas(int b, int y) const { return 2 * n + y * k + b; }
  int basis(int j) const { return 2 * n + j; }
  int symbol_count() const { return 2 * n + (model == MeasurementModel::quantum ? m * k : basis_size); }
  int size() const { return static_cast<int>(words.size()); }

  /// Position of `word`, or -1.
  int find(const std::vector<int>& word) const {
    const auto it = std::find(words.begin(), words.end(), word);
    return it == words.end() ? -1 : static_cast<int>(it - words.begin());
  }

  void validate() const {
    if (find({}) < 0) throw InvariantError("MonomialList: identity word missing");
    for (int s = 0; s < symbol_count(); ++s)
      if (find({s}) < 0) throw InvariantError("MonomialList: length-one word missing");
    std::set<std::vector<int>> seen;
    for (const auto& w : words) {
      for (int s : w)
        if (s < 0 || s >= symbol_count()) throw InvariantError("MonomialList: unknown symbol");
      if (!seen.insert(w).second) throw InvariantError("MonomialList: duplicate word");
    }
  }
};

namespace detail {

inline void push_unique(MonomialList& list, std::vector<int> w) {
  if (list.find(w) < 0) list.words.push_back(std::move(w));
}

inline std::vector<int> measurement_symbols(const MonomialList& l) {
  std::vector<int> out;
  const int count = l.model == MeasurementModel::quantum ? l.m * l.k : l.basis_size;
  for (int i = 0; i < count; ++i) out.push_back(2 * l.n + i);
  return out;
}

inline MonomialList make_monomials(MonomialList list, int level) {
  if (level != 1 && level != 2) throw InvariantError("default_monomials: level must be 1 or 2");
  const int n = list.n;
  const auto ms = measurement_symbols(list);
  push_unique(list, {});
  for (int s = 0; s < list.symbol_count(); ++s) push_unique(list, {s});
  if (level == 2) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) push_unique(list, {list.phi(a), list.phi(b)});
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) push_unique(list, {list.phi(a), list.psi(b)});
    for (int a = 0; a < n; ++a)
      for (int s : ms) push_unique(list, {list.phi(a), s});
    if (list.model == MeasurementModel::quantum)
      for (int s : ms)
        for (int t : ms) push_unique(list, {s, t});
  }
  list.validate();
  return list;
}

}  // namespace detail

/// Level 1: identity and all symbols. Level 2 adds the word classes
/// phi phi', phi psi, phi M and M M'.
inline MonomialList default_monomials(const Scenario& scn, int level) {
  MonomialList l;
  l.model = MeasurementModel::quantum;
  l.n = scn.n;
  l.m = scn.m;
  l.k = scn.k;
  return detail::make_monomials(std::move(l), level);
}

/// Words for the single-basis model with `basis_size` projectors E_j.
/// Level 2 adds phi phi', phi psi and phi E.
inline MonomialList classical_monomials(const Scenario& scn, int basis_size, int level) {
  MonomialList l;
  l.model = MeasurementModel::classical;
  l.n = scn.n;
  l.m = scn.m;
  l.k = scn.k;
  l.basis_size = basis_size;
  return detail::make_monomials(std::move(l), level);
}

/// Ranks of the projective effects, indexed [y][b].
struct RankProfile {
  std::vector<std::vector<int>> ranks;

  void validate(int dim) const {
    for (const auto& r : ranks) {
      int s = 0;
      for (int v : r) {
        if (v < 0) throw InvariantError("RankProfile: negative rank");
        s += v;
      }
      if (s != dim) throw InvariantError("RankProfile: ranks do not sum to the dimension");
    }
  }
  bool operator<(const RankProfile& o) const { return ranks < o.ranks; }
  bool operator==(const RankProfile& o) const { return ranks == o.ranks; }
};

/// Compositions of `dim` into `k` nonnegative parts, lexicographic.
inline std::vector<std::vector<int>> compositions(int dim, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == k - 1) {
      cur[static_cast<std::size_t>(pos)] = left;
      out.push_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, dim);
  return out;
}

struct BasisOptions {
  int consecutive_dependent = 25;
  double dependence_tol = 1e-9;
  int max_matrices = 20000;
  /// Keep only Re Gamma when all targets are real. The feasible set is
  /// closed under complex conjugation, so the optimum is unchanged.
  bool real_reduction = true;
  /// Fix phi_x = psi_x whenever eps_x = 0.
  bool pin_exact = true;
};

/// Span of sampled moment matrices, stored as an affine parametrisation
/// Gamma(t) = center + sum_i t_i direction_i with orthonormal directions,
/// compressed onto the common range of the samples.
struct MomentBasis {
  MonomialList monomials;
  int dim = 0;
  bool real = false;
  std::vector<char> pinned;  // per x
  RankProfile profile;
  int rank = 0;              // number of linearly independent samples

  std::vector<ComplexMatrix> samples;  // retained Gamma^(i); kept when requested
  RealVector center;                   // vectorised
  RealMatrix directions;               // vectorised, orthonormal columns
  ComplexMatrix range;                 // N x r columns spanning the common range

  int size() const { return monomials.size(); }

  /// Linear index of the real part of entry (i, j) in the vectorised form
  /// and the factor that converts the coordinate back to the entry.
  std::pair<int, double> coord(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int n = size();
    if (i == j) return {i, 1.0};
    // Off-diagonal pairs follow the diagonal, in row-major upper order.
    const int offset = n + i * (2 * n - i - 1) / 2 + (j - i - 1);
    const int stride = real ? 1 : 2;
    return {n + (offset - n) * stride, 1.0 / std::numbers::sqrt2};
  }
};

namespace detail {

inline int vec_length(int n, bool real) { return real ? n * (n + 1) / 2 : n * n; }

inline RealVector vectorize(const ComplexMatrix& g, bool real) {
  const int n = static_cast<int>(g.rows());
  RealVector v(vec_length(n, real));
  for (int i = 0; i < n; ++i) v(i) = g(i, i).real();
  int k = n;
  const double r2 = std::numbers::sqrt2;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      v(k++) = r2 * g(i, j).real();
      if (!real) v(k++) = r2 * g(i, j).imag();
    }
  return v;
}

inline ComplexMatrix devectorize(const RealVector& v, int n, bool real) {
  ComplexMatrix g(n, n);
  for (int i = 0; i < n; ++i) g(i, i) = v(i);
  int k = n;
  const double r2 = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double re = r2 * v(k++);
      const double im = real ? 0.0 : r2 * v(k++);
      g(i, j) = cplx(re, im);
      g(j, i) = cplx(re, -im);
    }
  return g;
}

struct SampleOperators {
  std::vector<ComplexMatrix> symbols;
};

inline ComplexMatrix word_operator(const std::vector<int>& word, const std::vector<ComplexMatrix>& symbols, int dim) {
  ComplexMatrix op = ComplexMatrix::Identity(dim, dim);
  for (int s : word) op = op * symbols[static_cast<std::size_t>(s)];
  return op;
}

}  // namespace detail

/// Draws preparations phi_x (pinned to the target where requested) and
/// measurements with the given rank profile, and returns the moment matrix
/// of the word operators. For the classical list the measurement symbols are
/// the projectors of one Haar-random basis and `profile` is ignored.
inline ComplexMatrix sample_moment_matrix(const Scenario& scn, const MonomialList& mono, const RankProfile& profile,
                                          int dim, Rng& rng, const std::vector<char>& pinned = {}) {
  if (dim < scn.target_dim()) throw DimensionError("sample_moment_matrix: dimension below target dimension");
  std::vector<ComplexMatrix> sym(static_cast<std::size_t>(mono.symbol_count()));
  for (int x = 0; x < scn.n; ++x) {
    const bool pin = !pinned.empty() && pinned[static_cast<std::size_t>(x)];
    const ComplexVector v = pin ? scn.targets[static_cast<std::size_t>(x)].padded(dim) : random_pure_state(dim, rng).amplitudes();
    sym[static_cast<std::size_t>(mono.phi(x))] = v * v.adjoint();
    sym[static_cast<std::size_t>(mono.psi(x))] = scn.targets[static_cast<std::size_t>(x)].projector(dim);
  }
  if (mono.model == MeasurementModel::quantum) {
    profile.validate(dim);
    if (static_cast<int>(profile.ranks.size()) != mono.m) throw DimensionError("sample_moment_matrix: profile size");
    for (int y = 0; y < mono.m; ++y) {
      const auto meas = random_projective_measurement(dim, profile.ranks[static_cast<std::size_t>(y)], rng);
      for (int b = 0; b < mono.k; ++b) sym[static_cast<std::size_t>(mono.meas(b, y))] = meas.effect(b);
    }
  } else {
    if (mono.basis_size != dim) throw DimensionError("sample_moment_matrix: basis size must equal the dimension");
    const ComplexMatrix u = detail::haar_unitary(dim, rng);
    for (int j = 0; j < dim; ++j) sym[static_cast<std::size_t>(mono.basis(j))] = u.col(j) * u.col(j).adjoint();
  }
  const int nw = mono.size();
  ComplexMatrix vecs(dim * dim, nw);
  for (int i = 0; i < nw; ++i) {
    const ComplexMatrix op = detail::word_operator(mono.words[static_cast<std::size_t>(i)], sym, dim);
    vecs.col(i) = op.reshaped();
  }
  // Gamma_ij = Tr(S_i S_j^+) = (V^+ V)_ji.
  ComplexMatrix g = (vecs.adjoint() * vecs).transpose();
  return 0.5 * (g + g.adjoint());
}

/// Samples until `consecutive_dependent` candidates in a row lie in the span
/// of those retained, then builds the affine parametrisation.
inline MomentBasis build_basis(const Scenario& scn, const MonomialList& mono, const RankProfile& profile, int dim,
                               Rng& rng, const BasisOptions& opt = {}, bool keep_samples = false) {
  MomentBasis basis;
  basis.monomials = mono;
  basis.dim = dim;
  basis.profile = profile;
  basis.real = opt.real_reduction && scn.real_targets();
  basis.pinned.assign(static_cast<std::size_t>(scn.n), 0);
  if (opt.pin_exact)
    for (int x = 0; x < scn.n; ++x) basis.pinned[static_cast<std::size_t>(x)] = scn.epsilons[static_cast<std::size_t>(x)] == 0.0;

  const int nw = mono.size();
  const int len = detail::vec_length(nw, basis.real);
  RealMatrix q(len, 64);
  int r = 0;
  int dependent = 0;
  int drawn = 0;
  ComplexMatrix sum = ComplexMatrix::Zero(nw, nw);
  RealVector first;
  while (dependent < opt.consecutive_dependent) {
    if (++drawn > opt.max_matrices)
      throw std::runtime_error("build_basis: more than " + std::to_string(opt.max_matrices) + " samples drawn");
    ComplexMatrix g = sample_moment_matrix(scn, mono, profile, dim, rng, basis.pinned);
    if (basis.real) g = g.real().cast<cplx>();
    RealVector v = detail::vectorize(g, basis.real);
    const double vn = v.norm();
    RealVector res = v;
    for (int pass = 0; pass < 2 && r > 0; ++pass) res -= q.leftCols(r) * (q.leftCols(r).transpose() * res);
    const double rn = res.norm();
    if (rn <= opt.dependence_tol * vn) {
      ++dependent;
      continue;
    }
    dependent = 0;
    if (r == q.cols()) q.conservativeResize(Eigen::NoChange, 2 * q.cols());
    q.col(r++) = res / rn;
    sum += g;
    if (first.size() == 0) first = v;
    if (keep_samples) basis.samples.push_back(g);
  }
  basis.rank = r;
  q.conservativeResize(Eigen::NoChange, r);

  // Every sample has Gamma_11 = dim, so the affine hull is the part of the
  // span on which the identity coordinate equals dim.
  const int id = mono.find({});
  const RealVector a = q.row(id).transpose();
  basis.center = first;
  // Orthonormal basis of {c : a^T c = 0} inside the span.
  const double an = a.norm();
  if (an > 0) {
    RealMatrix h = RealMatrix::Identity(r, r) - (a / an) * (a / an).transpose();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
    basis.directions = q * es.eigenvectors().rightCols(r - 1);
  } else {
    basis.directions = q;
  }

  // Common range of all samples.
  auto range_of = [&](const auto& mat) {
    Eigen::SelfAdjointEigenSolver<std::decay_t<decltype(mat)>> es(mat);
    const double cut = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int keep = 0;
    for (int i = 0; i < nw; ++i) keep += es.eigenvalues()(i) > cut;
    return ComplexMatrix(es.eigenvectors().rightCols(keep).template cast<cplx>());
  };
  basis.range = basis.real ? range_of(RealMatrix(sum.real())) : range_of(sum);
  return basis;
}

// ---------------------------------------------------------------------------
// Relaxation

/// sum of coef * Re Gamma_{row,col}.
struct EntryForm {
  struct Term {
    int row, col;
    double coef;
  };
  std::vector<Term> terms;

  void add(int row, int col, double coef) {
    if (coef != 0) terms.push_back({row, col, coef});
  }
};

struct ExtraConstraint {
  enum class Sense { equal, at_least };
  EntryForm form;
  Sense sense = Sense::equal;
  double rhs = 0.0;
};

struct RelaxationResult {
  sdp::Status status = sdp::Status::numerical_failure;
  double value = 0.0;      // upper bound on the objective
  ComplexMatrix gamma;     // optimising moment matrix (full size)
  int iterations = 0;
};

/// sum_{b,x,y} c_{bxy} Gamma(phi_x, M_{b|y}).
inline EntryForm functional_form(const MonomialList& mono, const Functional& f) {
  if (mono.model != MeasurementModel::quantum) throw InvariantError("functional_form: quantum list required");
  EntryForm e;
  for (int b = 0; b < f.k(); ++b)
    for (int x = 0; x < f.n(); ++x)
      for (int y = 0; y < f.m(); ++y)
        e.add(mono.find({mono.phi(x)}), mono.find({mono.meas(b, y)}), f(b, x, y));
  return e;
}

/// Single probability entry Gamma(phi_x, M_{b|y}).
inline EntryForm probability_form(const MonomialList& mono, int b, int x, int y) {
  EntryForm e;
  e.add(mono.find({mono.phi(x)}), mono.find({mono.meas(b, y)}), 1.0);
  return e;
}

namespace detail {

inline double form_value(const MomentBasis& basis, const EntryForm& form, const RealVector& v) {
  double s = 0;
  for (const auto& t : form.terms) {
    const auto [idx, factor] = basis.coord(t.row, t.col);
    s += t.coef * factor * v(idx);
  }
  return s;
}

inline RealVector form_gradient(const MomentBasis& basis, const EntryForm& form) {
  RealVector g = RealVector::Zero(basis.directions.cols());
  for (const auto& t : form.terms) {
    const auto [idx, factor] = basis.coord(t.row, t.col);
    g += t.coef * factor * basis.directions.row(idx).transpose();
  }
  return g;
}

}  // namespace detail

/// Maximises `objective` over Gamma in the sampled affine span with
/// Gamma >= 0, fidelity entries Gamma(phi_x, psi_x) >= 1 - eps_x and the
/// extra constraints.
inline RelaxationResult solve_relaxation(const MomentBasis& basis, const EntryForm& objective,
                                         const std::vector<double>& eps, const std::vector<ExtraConstraint>& extra = {},
                                         const sdp::SolverOptions& sopt = {}) {
  const auto& mono = basis.monomials;
  if (static_cast<int>(eps.size()) != mono.n) throw DimensionError("solve_relaxation: need n distrust values");
  const int p = static_cast<int>(basis.directions.cols());

  // Linear pieces: value(t) = c0 + c^T t.
  const double c0 = detail::form_value(basis, objective, basis.center);
  const RealVector c = detail::form_gradient(basis, objective);

  struct Ineq {
    RealVector g;
    double g0;
    double floor;
  };
  std::vector<Ineq> ineqs;
  for (int x = 0; x < mono.n; ++x) {
    const double e = eps[static_cast<std::size_t>(x)];
    if (basis.pinned[static_cast<std::size_t>(x)]) {
      if (e != 0.0) throw InvariantError("solve_relaxation: basis pins phi_x but eps_x > 0");
      continue;
    }
    if (e >= 1.0) continue;
    EntryForm fid;
    fid.add(mono.find({mono.phi(x)}), mono.find({mono.psi(x)}), 1.0);
    ineqs.push_back({detail::form_gradient(basis, fid), detail::form_value(basis, fid, basis.center), 1.0 - e});
  }
  std::vector<RealVector> eq_rows;
  std::vector<double> eq_rhs;
  for (const auto& ex : extra) {
    const RealVector g = detail::form_gradient(basis, ex.form);
    const double g0 = detail::form_value(basis, ex.form, basis.center);
    if (ex.sense == ExtraConstraint::Sense::equal) {
      eq_rows.push_back(g);
      eq_rhs.push_back(ex.rhs - g0);
    } else {
      ineqs.push_back({g, g0, ex.rhs});
    }
  }

  // Eliminate equalities: t = t0 + N u.
  RealVector t0 = RealVector::Zero(p);
  RealMatrix nmat = RealMatrix::Identity(p, p);
  if (!eq_rows.empty() && p == 0) {
    for (double r : eq_rhs)
      if (std::abs(r) > 1e-9) {
        RelaxationResult res;
        res.status = sdp::Status::infeasible;
        return res;
      }
  } else if (!eq_rows.empty()) {
    RealMatrix e(static_cast<Eigen::Index>(eq_rows.size()), p);
    RealVector rhs(static_cast<Eigen::Index>(eq_rows.size()));
    for (std::size_t i = 0; i < eq_rows.size(); ++i) {
      e.row(static_cast<Eigen::Index>(i)) = eq_rows[i].transpose();
      rhs(static_cast<Eigen::Index>(i)) = eq_rhs[i];
    }
    Eigen::JacobiSVD<RealMatrix> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > cut;
    svd.setThreshold(cut / std::max(1e-300, sv.size() ? sv(0) : 1.0));
    t0 = svd.solve(rhs);
    if ((e * t0 - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
      RelaxationResult res;
      res.status = sdp::Status::infeasible;
      return res;
    }
    nmat = svd.matrixV().rightCols(p - rank);
  }
  const int q = static_cast<int>(nmat.cols());
  const int nr = static_cast<int>(basis.range.cols());
  const ComplexMatrix& vr = basis.range;
  const int nw = basis.size();

  auto compress = [&](const RealVector& vec) {
    const ComplexMatrix g = detail::devectorize(vec, nw, basis.real);
    ComplexMatrix h = vr.adjoint() * g * vr;
    return ComplexMatrix(0.5 * (h + h.adjoint()));
  };
  const RealVector shifted_center = basis.center + basis.directions * t0;
  auto gamma_at = [&](const RealVector& u) {
    return detail::devectorize(shifted_center + basis.directions * (nmat * u), nw, basis.real);
  };

  RelaxationResult res;
  const double base = c0 + c.dot(t0);
  if (q == 0) {
    // Nothing left to optimise: check feasibility of the single point.
    const ComplexMatrix g0 = compress(shifted_center);
    bool ok = detail::min_eigenvalue(g0) >= -1e-9;
    for (const auto& in : ineqs) ok = ok && in.g0 + in.g.dot(t0) >= in.floor - 1e-9;
    res.status = ok ? sdp::Status::optimal : sdp::Status::infeasible;
    res.value = base;
    res.gamma = gamma_at(RealVector::Zero(0));
    return res;
  }

  // Posed as the dual of the solver's standard form: min b^T u subject to
  // Z = sum_j u_j A_j - C >= 0 with C = -G0, A_j = G_j.
  sdp::SdpProblem prob;
  const sdp::Field field = basis.real ? sdp::Field::real : sdp::Field::complex;
  const int blk = prob.add_block(nr, field);
  prob.set_objective(blk, -compress(shifted_center));
  std::vector<int> lp;
  for (const auto& in : ineqs) {
    lp.push_back(prob.add_block(1, sdp::Field::real));
    prob.set_objective(lp.back(), ComplexMatrix::Constant(1, 1, in.floor - in.g0 - in.g.dot(t0)));
  }
  const RealMatrix dirs = basis.directions * nmat;
  const RealVector cu = nmat.transpose() * c;
  for (int j = 0; j < q; ++j) {
    sdp::Constraint con;
    con.terms.push_back({blk, compress(dirs.col(j))});
    for (std::size_t i = 0; i < ineqs.size(); ++i) {
      const double coef = ineqs[i].g.dot(nmat.col(j));
      if (coef != 0) con.terms.push_back({lp[i], ComplexMatrix::Constant(1, 1, coef)});
    }
    con.rhs = -cu(j);
    prob.add_equality(std::move(con));
  }
  const auto sol = sdp::solve(prob, sopt);
  res.iterations = sol.iterations;
  switch (sol.status) {
    case sdp::Status::optimal:
      res.status = sdp::Status::optimal;
      break;
    case sdp::Status::unbounded:  // primal unbounded: the moment LMI is infeasible
      res.status = sdp::Status::infeasible;
      break;
    case sdp::Status::infeasible:
      res.status = sdp::Status::unbounded;
      break;
    default:
      res.status = sdp::Status::numerical_failure;
  }
  // Weak duality: any primal point bounds the relaxation from above.
  res.value = base - sol.value;
  if (sol.dual.size() == q) res.gamma = gamma_at(sol.dual);
  return res;
}

inline RelaxationResult solve_relaxation(const MomentBasis& basis, const Functional& f, const std::vector<double>& eps,
                                         const std::vector<ExtraConstraint>& extra = {},
                                         const std::optional<EntryForm>& objective_override = std::nullopt,
                                         const sdp::SolverOptions& sopt = {}) {
  const EntryForm obj = objective_override ? *objective_override : functional_form(basis.monomials, f);
  return solve_relaxation(basis, obj, eps, extra, sopt);
}

// ---------------------------------------------------------------------------
// Profile enumeration and the final bound

/// All rank profiles for (m, k) at dimension `dim`, merged only under
/// outcome relabelings (per y) that leave the functional invariant.
inline std::vector<RankProfile> rank_profiles(const Functional& f, int dim) {
  const auto comps = compositions(dim, f.k());
  // Outcome permutations per y that preserve c.
  std::vector<std::vector<std::vector<int>>> perms(static_cast<std::size_t>(f.m()));
  std::vector<int> id(static_cast<std::size_t>(f.k()));
  for (int b = 0; b < f.k(); ++b) id[static_cast<std::size_t>(b)] = b;
  for (int y = 0; y < f.m(); ++y) {
    std::vector<int> pi = id;
    do {
      bool keeps = true;
      for (int x = 0; x < f.n() && keeps; ++x)
        for (int b = 0; b < f.k() && keeps; ++b) keeps = f(pi[static_cast<std::size_t>(b)], x, y) == f(b, x, y);
      if (keeps) perms[static_cast<std::size_t>(y)].push_back(pi);
    } while (std::next_permutation(pi.begin(), pi.end()));
  }
  std::set<RankProfile> seen;
  std::vector<RankProfile> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(f.m()), 0);
  while (true) {
    RankProfile prof;
    for (int y = 0; y < f.m(); ++y) prof.ranks.push_back(comps[idx[static_cast<std::size_t>(y)]]);
    // Canonical form: lexicographically smallest relabeling per y.
    RankProfile canon = prof;
    for (int y = 0; y < f.m(); ++y) {
      auto& best = canon.ranks[static_cast<std::size_t>(y)];
      for (const auto& pi : perms[static_cast<std::size_t>(y)]) {
        std::vector<int> r(static_cast<std::size_t>(f.k()));
        for (int b = 0; b < f.k(); ++b)
          r[static_cast<std::size_t>(pi[static_cast<std::size_t>(b)])] = prof.ranks[static_cast<std::size_t>(y)][static_cast<std::size_t>(b)];
        best = std::min(best, r);
      }
    }
    if (seen.insert(canon).second) out.push_back(canon);
    int y = f.m() - 1;
    while (y >= 0 && ++idx[static_cast<std::size_t>(y)] == comps.size()) idx[static_cast<std::size_t>(y--)] = 0;
    if (y < 0) break;
  }
  return out;
}

struct HierarchyOptions {
  int level = 2;
  std::uint64_t seed = 1;
  BasisOptions basis;
  sdp::SolverOptions solver;
};

struct ProfileBound {
  RankProfile profile;
  int basis_rank = 0;
  sdp::Status status = sdp::Status::numerical_failure;
  double value = 0.0;
  std::string error;
};

struct UpperBoundResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<ProfileBound> profiles;
  int failures = 0;
};

/// Relaxation per rank profile, maximised over profiles. Profile i samples
/// from make_stream(seed, i).
inline UpperBoundResult quantum_upper_bound(const Scenario& scn, const Functional& f, const MonomialList& mono, int dim,
                                            const HierarchyOptions& opt = {}) {
  if (!scn.matches(f)) throw DimensionError("quantum_upper_bound: functional does not match scenario");
  const auto profiles = rank_profiles(f, dim);
  UpperBoundResult out;
  out.profiles.resize(profiles.size());
  parallel_for(static_cast<int>(profiles.size()), [&](int i) {
    auto& pb = out.profiles[static_cast<std::size_t>(i)];
    pb.profile = profiles[static_cast<std::size_t>(i)];
    try {
      Rng rng = make_stream(opt.seed, static_cast<std::uint64_t>(i));
      const auto basis = build_basis(scn, mono, pb.profile, dim, rng, opt.basis);
      pb.basis_rank = basis.rank;
      const auto r = solve_relaxation(basis, f, scn.epsilons, {}, std::nullopt, opt.solver);
      pb.status = r.status;
      pb.value = r.value;
    } catch (const std::exception& e) {
      pb.error = e.what();
    }
  });
  for (const auto& pb : out.profiles) {
    if (!pb.error.empty() || pb.status == sdp::Status::unbounded) {
      ++out.failures;
      continue;
    }
    if (pb.status == sdp::Status::infeasible) continue;
    // A solve that stopped short still reports the value of its best primal
    // iterate, which bounds the profile from above up to its residuals.
    if (pb.status == sdp::Status::numerical_failure) ++out.failures;
    out.value = std::max(out.value, pb.value);
  }
  if (out.failures == static_cast<int>(out.profiles.size()))
    throw std::runtime_error("quantum_upper_bound: every rank profile failed");
  return out;
}

}  // namespace distrust
