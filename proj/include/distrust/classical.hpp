#pragma once

// Bounds for models whose measurements are all diagonal in one basis:
// a rank-one basis measurement followed by deterministic post-processing.

#include "distrust/core.hpp"
#include "distrust/hierarchy.hpp"
#include "distrust/parallel.hpp"
#include "distrust/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace distrust {

/// Post-processing f(y, j) -> b, stored [y][j].
struct DeterministicStrategy {
  std::vector<std::vector<int>> assignment;

  int m() const { return static_cast<int>(assignment.size()); }
  int dim() const { return assignment.empty() ? 0 : static_cast<int>(assignment.front().size()); }
  int operator()(int y, int j) const {
    return assignment[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)];
  }

  /// Per basis index tuples (f(0,j), ..., f(m-1,j)), sorted; equal for
  /// strategies related by relabelling the basis.
  std::vector<std::vector<int>> canonical_key() const {
    std::vector<std::vector<int>> cols(static_cast<std::size_t>(dim()));
    for (int j = 0; j < dim(); ++j)
      for (int y = 0; y < m(); ++y) cols[static_cast<std::size_t>(j)].push_back((*this)(y, j));
    std::sort(cols.begin(), cols.end());
    return cols;
  }
};

/// Number of raw strategies, k^(m D), or infinity if it overflows a double.
inline double raw_strategy_count(int m, int dim, int k_out) {
  return std::pow(static_cast<double>(k_out), static_cast<double>(m) * dim);
}

/// One representative per multiset of per-index tuples (sorted tuples).
inline std::vector<DeterministicStrategy> enumerate_strategies(int m, int dim, int k_out,
                                                              std::size_t guard = 1000000) {
  if (m < 1 || dim < 1 || k_out < 1) throw DimensionError("enumerate_strategies: sizes must be positive");
  const double tuples_d = std::pow(static_cast<double>(k_out), m);
  // Multisets of size dim over `tuples` values: C(tuples + dim - 1, dim).
  double count = 1;
  for (int i = 1; i <= dim; ++i) count = count * (tuples_d + i - 1) / i;
  if (count > static_cast<double>(guard))
    throw std::runtime_error("enumerate_strategies: " + std::to_string(static_cast<long long>(count)) +
                             " canonical strategies exceed the guard");
  const int tuples = static_cast<int>(tuples_d);
  auto decode = [&](int t) {
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int y = m - 1; y >= 0; --y) {
      out[static_cast<std::size_t>(y)] = t % k_out;
      t /= k_out;
    }
    return out;
  };
  std::vector<DeterministicStrategy> out;
  std::vector<int> pick(static_cast<std::size_t>(dim), 0);  // nondecreasing tuple ids
  while (true) {
    DeterministicStrategy s;
    s.assignment.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(dim)));
    for (int j = 0; j < dim; ++j) {
      const auto tup = decode(pick[static_cast<std::size_t>(j)]);
      for (int y = 0; y < m; ++y) s.assignment[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)] = tup[static_cast<std::size_t>(y)];
    }
    out.push_back(std::move(s));
    int pos = dim - 1;
    while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == tuples - 1) --pos;
    if (pos < 0) break;
    const int v = pick[static_cast<std::size_t>(pos)] + 1;
    for (int j = pos; j < dim; ++j) pick[static_cast<std::size_t>(j)] = v;
  }
  return out;
}

/// Every raw strategy, for cross-checks on small instances.
inline std::vector<DeterministicStrategy> enumerate_raw_strategies(int m, int dim, int k_out) {
  const double raw = raw_strategy_count(m, dim, k_out);
  if (raw > 1e6) throw std::runtime_error("enumerate_raw_strategies: too many strategies");
  std::vector<DeterministicStrategy> out;
  const long total = static_cast<long>(raw);
  for (long code = 0; code < total; ++code) {
    DeterministicStrategy s;
    s.assignment.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(dim)));
    long c = code;
    for (int y = 0; y < m; ++y)
      for (int j = 0; j < dim; ++j) {
        s.assignment[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)] = static_cast<int>(c % k_out);
        c /= k_out;
      }
    out.push_back(std::move(s));
  }
  return out;
}

/// ctilde(x, j) = sum_{b,y} c_{bxy} [f(y,j) = b], stored [x][j].
inline std::vector<std::vector<double>> induced_coefficients(const Functional& f, const DeterministicStrategy& s) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(f.n()), std::vector<double>(static_cast<std::size_t>(s.dim()), 0.0));
  for (int x = 0; x < f.n(); ++x)
    for (int j = 0; j < s.dim(); ++j)
      for (int y = 0; y < f.m(); ++y) out[static_cast<std::size_t>(x)][static_cast<std::size_t>(j)] += f(s(y, j), x, y);
  return out;
}

/// Measurements M_{b|y} = sum_j [f(y,j) = b] |e_j><e_j| for the columns of `basis`.
inline std::vector<Measurement> classical_measurements(const ComplexMatrix& basis, const DeterministicStrategy& s,
                                                       int k_out) {
  const int d = static_cast<int>(basis.rows());
  std::vector<Measurement> out;
  for (int y = 0; y < s.m(); ++y) {
    std::vector<ComplexMatrix> eff(static_cast<std::size_t>(k_out), ComplexMatrix::Zero(d, d));
    for (int j = 0; j < s.dim(); ++j) eff[static_cast<std::size_t>(s(y, j))] += basis.col(j) * basis.col(j).adjoint();
    out.emplace_back(std::move(eff), MeasurementKind::projective);
  }
  return out;
}

struct ClassicalOptions {
  int level = 2;
  std::uint64_t seed = 1;
  BasisOptions basis;
  sdp::SolverOptions solver;
};

struct StrategyBound {
  DeterministicStrategy strategy;
  sdp::Status status = sdp::Status::numerical_failure;
  double value = 0.0;
};

struct ClassicalUpperResult {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t strategies = 0;
  int basis_rank = 0;
  int failures = 0;
  DeterministicStrategy best;
};

/// Objective sum_{x,j} ctilde(x,j) Gamma(phi_x, E_j) on a classical list.
inline EntryForm strategy_form(const MonomialList& mono, const Functional& f, const DeterministicStrategy& s) {
  const auto ct = induced_coefficients(f, s);
  EntryForm e;
  for (int x = 0; x < f.n(); ++x)
    for (int j = 0; j < s.dim(); ++j)
      e.add(mono.find({mono.phi(x)}), mono.find({mono.basis(j)}), ct[static_cast<std::size_t>(x)][static_cast<std::size_t>(j)]);
  return e;
}

/// Builds the single-basis moment basis used by every strategy; it depends
/// only on the targets, the dimension and which preparations are pinned.
inline MomentBasis classical_basis(const Scenario& scn, const MonomialList& mono, int dim, Rng& rng,
                                   const BasisOptions& opt = {}) {
  if (mono.model != MeasurementModel::classical || mono.basis_size != dim)
    throw InvariantError("classical_basis: list must be classical with basis size equal to the dimension");
  return build_basis(scn, mono, RankProfile{}, dim, rng, opt);
}

/// Maximum over canonical strategies of the relaxation on a shared basis.
inline ClassicalUpperResult classical_upper_bound(const Scenario& scn, const Functional& f, const MomentBasis& basis,
                                                  const sdp::SolverOptions& sopt = {}) {
  const auto& mono = basis.monomials;
  const auto strategies = enumerate_strategies(scn.m, basis.dim, scn.k);
  std::vector<StrategyBound> bounds(strategies.size());
  parallel_for(static_cast<int>(strategies.size()), [&](int i) {
    auto& sb = bounds[static_cast<std::size_t>(i)];
    sb.strategy = strategies[static_cast<std::size_t>(i)];
    try {
      const auto r = solve_relaxation(basis, strategy_form(mono, f, sb.strategy), scn.epsilons, {}, sopt);
      sb.status = r.status;
      sb.value = r.value;
    } catch (const std::exception&) {
      sb.status = sdp::Status::numerical_failure;
      sb.value = std::numeric_limits<double>::quiet_NaN();
    }
  });
  ClassicalUpperResult out;
  out.strategies = strategies.size();
  out.basis_rank = basis.rank;
  for (const auto& sb : bounds) {
    if (sb.status == sdp::Status::infeasible) continue;
    if (sb.status != sdp::Status::optimal) ++out.failures;
    if (!std::isfinite(sb.value)) continue;
    if (sb.value > out.value) {
      out.value = sb.value;
      out.best = sb.strategy;
    }
  }
  if (out.failures == static_cast<int>(bounds.size()))
    throw std::runtime_error("classical_upper_bound: every strategy failed");
  return out;
}

inline ClassicalUpperResult classical_upper_bound(const Scenario& scn, const Functional& f, const MonomialList& mono,
                                                  int dim, const ClassicalOptions& opt = {}) {
  Rng rng = make_stream(opt.seed, 0);
  const auto basis = classical_basis(scn, mono, dim, rng, opt.basis);
  return classical_upper_bound(scn, f, basis, opt.solver);
}

// ---------------------------------------------------------------------------
// Heuristic lower bound

struct ClassicalLowerResult {
  double value = -std::numeric_limits<double>::infinity();
  ComplexMatrix basis;
  DeterministicStrategy strategy;
  std::vector<ComplexMatrix> states;
};

namespace detail {

struct ClassicalPoint {
  double value;
  DeterministicStrategy strategy;
  std::vector<ComplexMatrix> states;
};

/// Alternates greedy post-processing and optimal states for a fixed basis.
inline ClassicalPoint polish_basis(const Scenario& scn, const Functional& f, const ComplexMatrix& u,
                                   std::vector<ComplexMatrix> states) {
  const int d = static_cast<int>(u.rows());
  ClassicalPoint pt{-std::numeric_limits<double>::infinity(), {}, {}};
  for (int it = 0; it < 200; ++it) {
    DeterministicStrategy s;
    s.assignment.assign(static_cast<std::size_t>(scn.m), std::vector<int>(static_cast<std::size_t>(d), 0));
    for (int y = 0; y < scn.m; ++y)
      for (int j = 0; j < d; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < scn.k; ++b) {
          double v = 0;
          for (int x = 0; x < scn.n; ++x)
            v += f(b, x, y) * (u.col(j).adjoint() * states[static_cast<std::size_t>(x)] * u.col(j))(0, 0).real();
          if (v > best + 1e-15) {
            best = v;
            s.assignment[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)] = b;
          }
        }
      }
    const auto ct = induced_coefficients(f, s);
    double value = 0;
    std::vector<ComplexMatrix> next;
    for (int x = 0; x < scn.n; ++x) {
      ComplexMatrix a = ComplexMatrix::Zero(d, d);
      for (int j = 0; j < d; ++j) a += ct[static_cast<std::size_t>(x)][static_cast<std::size_t>(j)] * u.col(j) * u.col(j).adjoint();
      const auto r = sdp::maximize_inner_product(a, scn.targets[static_cast<std::size_t>(x)].padded(d),
                                                 scn.epsilons[static_cast<std::size_t>(x)]);
      value += r.value;
      next.push_back(r.state);
    }
    const bool improved = value > pt.value + 1e-12;
    if (value >= pt.value) pt = {value, s, next};
    states = std::move(next);
    if (!improved) break;
  }
  return pt;
}

inline ComplexMatrix fourier_basis(int n, int d) {
  ComplexMatrix u = ComplexMatrix::Identity(d, d);
  const auto f = fourier_states(std::min(n, d));
  for (int x = 0; x < static_cast<int>(f.size()); ++x) {
    u.col(x).setZero();
    u.col(x).head(f[static_cast<std::size_t>(x)].dim()) = f[static_cast<std::size_t>(x)].amplitudes();
  }
  return u;
}

inline ComplexMatrix small_rotation(int d, double step, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h(i, j) = cplx(g(rng), g(rng));
  h = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  ComplexVector ph(d);
  for (int i = 0; i < d; ++i) ph(i) = std::polar(1.0, step * es.eigenvalues()(i));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Random-restart search over bases. Restart 0 starts from the Fourier
/// basis; the others from Haar-random bases. Each restart perturbs its basis
/// by small random rotations, keeping improvements, until the step size
/// falls below 1e-4.
inline ClassicalLowerResult classical_lower_bound(const Scenario& scn, const Functional& f, int dim, int restarts,
                                                  std::uint64_t seed) {
  if (!scn.matches(f)) throw DimensionError("classical_lower_bound: functional does not match scenario");
  if (restarts < 1) throw InvariantError("classical_lower_bound: restarts must be at least 1");
  std::vector<ClassicalLowerResult> found(static_cast<std::size_t>(restarts));
  parallel_for(restarts, [&](int r) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
    ComplexMatrix u = r == 0 ? detail::fourier_basis(scn.n, dim) : detail::haar_unitary(dim, rng);
    std::vector<ComplexMatrix> start;
    for (const auto& t : scn.targets) start.push_back(t.projector(dim));
    // Start 0 also seeds the states with the basis vectors themselves.
    if (r == 0)
      for (int x = 0; x < scn.n && x < dim; ++x) start[static_cast<std::size_t>(x)] = u.col(x) * u.col(x).adjoint();
    auto best = detail::polish_basis(scn, f, u, start);
    double step = 0.3;
    int misses = 0;
    while (step > 1e-4) {
      const ComplexMatrix trial = detail::small_rotation(dim, step, rng) * u;
      auto pt = detail::polish_basis(scn, f, trial, best.states);
      if (pt.value > best.value + 1e-12) {
        best = std::move(pt);
        u = trial;
        misses = 0;
      } else if (++misses >= 8) {
        step *= 0.5;
        misses = 0;
      }
    }
    found[static_cast<std::size_t>(r)] = {best.value, u, best.strategy, best.states};
  });
  ClassicalLowerResult out;
  for (auto& c : found)
    if (c.value > out.value) out = std::move(c);
  return out;
}

}  // namespace distrust
