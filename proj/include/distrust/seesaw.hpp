#pragma once

// Alternating optimisation over states and measurements. Every iterate is
// an explicit realization, so the values found are achievable lower bounds.

#include "distrust/core.hpp"
#include "distrust/parallel.hpp"
#include "distrust/sdp.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace distrust {

struct SeesawOptions {
  int restarts = 20;
  double tolerance = 1e-7;
  int max_alternations = 500;
};

struct SeesawResult {
  double value = -std::numeric_limits<double>::infinity();
  std::optional<Realization> realization;
  std::vector<double> trace;  // values along the winning restart
  int best_restart = -1;
  bool warning = false;       // some restart hit a solver failure
  std::string message;
};

/// Uniformly random composition of `dim` into `k` nonnegative parts.
inline std::vector<int> random_rank_profile(int dim, int k, Rng& rng) {
  // Stars and bars: choose k - 1 bar positions among dim + k - 1 slots.
  std::vector<int> slots(static_cast<std::size_t>(dim + k - 1));
  for (int i = 0; i < dim + k - 1; ++i) slots[static_cast<std::size_t>(i)] = i;
  std::vector<int> bars;
  for (int i = 0; i < k - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, dim + k - 2);
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(pick(rng))]);
    bars.push_back(slots[static_cast<std::size_t>(i)]);
  }
  std::sort(bars.begin(), bars.end());
  std::vector<int> ranks;
  int prev = -1;
  for (int b : bars) {
    ranks.push_back(b - prev - 1);
    prev = b;
  }
  ranks.push_back(dim + k - 2 - prev);
  return ranks;
}

/// A_x = sum_{b,y} c_{bxy} M_{b|y}.
inline ComplexMatrix state_operator(const Functional& f, const std::vector<Measurement>& meas, int x) {
  const int d = meas.front().dim();
  ComplexMatrix a = ComplexMatrix::Zero(d, d);
  for (int y = 0; y < f.m(); ++y)
    for (int b = 0; b < f.k(); ++b)
      if (f(b, x, y) != 0) a += f(b, x, y) * meas[static_cast<std::size_t>(y)].effect(b);
  return a;
}

/// Optimal states for fixed measurements, one closed-form problem per x.
inline Realization optimize_states(const Scenario& scn, const Functional& f, const std::vector<Measurement>& meas,
                                   int dim) {
  if (!scn.matches(f)) throw DimensionError("optimize_states: functional does not match scenario");
  if (static_cast<int>(meas.size()) != scn.m) throw DimensionError("optimize_states: need m measurements");
  for (const auto& mm : meas)
    if (mm.dim() != dim || mm.outcomes() != scn.k) throw DimensionError("optimize_states: measurement shape");
  std::vector<ComplexMatrix> states;
  for (int x = 0; x < scn.n; ++x) {
    try {
      const auto r = sdp::maximize_inner_product(state_operator(f, meas, x),
                                                 scn.targets[static_cast<std::size_t>(x)].padded(dim),
                                                 scn.epsilons[static_cast<std::size_t>(x)]);
      states.push_back(r.state);
    } catch (const std::exception& e) {
      throw std::runtime_error("optimize_states: x = " + std::to_string(x) + ": " + e.what());
    }
  }
  return Realization(std::move(states), meas);
}

/// Optimal measurement for the operators B_b, i.e. max sum_b Tr(B_b M_b)
/// over POVMs. Two outcomes are solved in closed form.
inline Measurement optimal_measurement(const std::vector<ComplexMatrix>& b_ops) {
  const int k = static_cast<int>(b_ops.size());
  const int d = static_cast<int>(b_ops.front().rows());
  if (k == 1) return Measurement({ComplexMatrix::Identity(d, d)}, MeasurementKind::projective);
  if (k == 2) return positive_part_measurement(b_ops[0] - b_ops[1]);

  sdp::SdpProblem p;
  std::vector<int> blk;
  for (int b = 0; b < k; ++b) {
    blk.push_back(p.add_block(d));
    p.set_objective(blk.back(), 0.5 * (b_ops[static_cast<std::size_t>(b)] + b_ops[static_cast<std::size_t>(b)].adjoint()));
  }
  for (const auto& e : sdp::hermitian_basis(d)) {
    sdp::Constraint c;
    for (int b = 0; b < k; ++b) c.terms.push_back({blk[static_cast<std::size_t>(b)], e});
    c.rhs = e.trace().real();
    p.add_equality(std::move(c));
  }
  const auto sol = sdp::solve(p);
  if (sol.status != sdp::Status::optimal)
    throw std::runtime_error(std::string("optimal_measurement: solver status ") + sdp::to_string(sol.status));

  // Clip tiny negative eigenvalues, then restore completeness exactly.
  std::vector<ComplexMatrix> effects;
  ComplexMatrix total = ComplexMatrix::Zero(d, d);
  for (const auto& x : sol.blocks) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (x + x.adjoint()));
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    effects.push_back(es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint());
    total += effects.back();
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (total + total.adjoint()));
  const ComplexMatrix inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
      es.eigenvectors().adjoint();
  for (auto& e : effects) {
    e = inv_sqrt * e * inv_sqrt;
    e = 0.5 * (e + e.adjoint());
  }
  return Measurement(std::move(effects), MeasurementKind::povm);
}

/// Optimal measurements for fixed states, one problem per y.
inline Realization optimize_measurements(const Scenario& scn, const Functional& f,
                                         const std::vector<ComplexMatrix>& states, int dim) {
  if (!scn.matches(f)) throw DimensionError("optimize_measurements: functional does not match scenario");
  if (static_cast<int>(states.size()) != scn.n) throw DimensionError("optimize_measurements: need n states");
  for (const auto& s : states)
    if (s.rows() != dim) throw DimensionError("optimize_measurements: state dimension");
  std::vector<Measurement> meas;
  for (int y = 0; y < scn.m; ++y) {
    std::vector<ComplexMatrix> b_ops(static_cast<std::size_t>(scn.k), ComplexMatrix::Zero(dim, dim));
    for (int b = 0; b < scn.k; ++b)
      for (int x = 0; x < scn.n; ++x)
        if (f(b, x, y) != 0) b_ops[static_cast<std::size_t>(b)] += f(b, x, y) * states[static_cast<std::size_t>(x)];
    try {
      meas.push_back(optimal_measurement(b_ops));
    } catch (const std::exception& e) {
      throw std::runtime_error("optimize_measurements: y = " + std::to_string(y) + ": " + e.what());
    }
  }
  return Realization(states, std::move(meas));
}

inline double realization_value(const Functional& f, const Realization& r) {
  return functional_value(f, born_table(r));
}

namespace detail {

struct RestartOutcome {
  double value = -std::numeric_limits<double>::infinity();
  std::optional<Realization> realization;
  std::vector<double> trace;
  bool failed = false;
  std::string message;
};

inline RestartOutcome seesaw_restart(const Scenario& scn, const Functional& f, int dim, const SeesawOptions& opt,
                                     Rng rng) {
  RestartOutcome out;
  try {
    std::vector<Measurement> meas;
    for (int y = 0; y < scn.m; ++y)
      meas.push_back(random_projective_measurement(dim, random_rank_profile(dim, scn.k, rng), rng));
    Realization current = optimize_states(scn, f, meas, dim);
    double value = realization_value(f, current);
    out.trace.push_back(value);
    for (int it = 0; it < opt.max_alternations; ++it) {
      const double start = value;
      // Each half-step is accepted only if it does not lose value.
      Realization by_meas = optimize_measurements(scn, f, current.states(), dim);
      const double vm = realization_value(f, by_meas);
      if (vm >= value) {
        current = std::move(by_meas);
        value = vm;
      }
      Realization by_states = optimize_states(scn, f, current.measurements(), dim);
      const double vs = realization_value(f, by_states);
      if (vs >= value) {
        current = std::move(by_states);
        value = vs;
      }
      out.trace.push_back(value);
      if (value - start < opt.tolerance) break;
    }
    out.value = value;
    out.realization = std::move(current);
  } catch (const std::exception& e) {
    out.failed = true;
    out.message = e.what();
  }
  return out;
}

}  // namespace detail

/// Best value over independent restarts; restart r draws from
/// make_stream(seed, r), so results do not depend on the thread count.
inline SeesawResult seesaw(const Scenario& scn, const Functional& f, int dim, std::uint64_t seed,
                           const SeesawOptions& opt = {}) {
  if (opt.restarts < 1) throw InvariantError("seesaw: restarts must be at least 1");
  if (!scn.matches(f)) throw DimensionError("seesaw: functional does not match scenario");
  if (dim < scn.target_dim()) throw DimensionError("seesaw: working dimension below target dimension");
  std::vector<detail::RestartOutcome> outcomes(static_cast<std::size_t>(opt.restarts));
  parallel_for(opt.restarts, [&](int r) {
    outcomes[static_cast<std::size_t>(r)] =
        detail::seesaw_restart(scn, f, dim, opt, make_stream(seed, static_cast<std::uint64_t>(r)));
  });
  SeesawResult res;
  for (int r = 0; r < opt.restarts; ++r) {
    auto& o = outcomes[static_cast<std::size_t>(r)];
    if (o.failed) {
      res.warning = true;
      if (res.message.empty()) res.message = "restart " + std::to_string(r) + ": " + o.message;
      continue;
    }
    if (o.value > res.value) {
      res.value = o.value;
      res.realization = std::move(o.realization);
      res.trace = std::move(o.trace);
      res.best_restart = r;
    }
  }
  if (!res.realization) throw std::runtime_error("seesaw: every restart failed: " + res.message);
  return res;
}

inline SeesawResult seesaw(const Scenario& scn, const Functional& f, int dim, int restarts, Rng& rng) {
  SeesawOptions opt;
  opt.restarts = restarts;
  return seesaw(scn, f, dim, rng(), opt);
}

}  // namespace distrust
