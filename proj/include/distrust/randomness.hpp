#pragma once

// Certified min-entropy of one outcome p(b|x*,y*) from an observed witness
// value, via relaxations of the guessing probability and their concave hull.

#include "distrust/core.hpp"
#include "distrust/hierarchy.hpp"
#include "distrust/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace distrust {

inline double hmin(double g) {
  if (!(g > 0.0)) throw InvariantError("hmin: guessing probability must be positive");
  return std::max(0.0, -std::log2(std::min(g, 1.0)));
}

/// Upper concave envelope of a point set, evaluated by linear interpolation
/// between hull vertices.
class ConcaveEnvelope {
 public:
  explicit ConcaveEnvelope(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw InvariantError("concave_envelope: need at least two points");
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].first == points[i - 1].first) throw InvariantError("concave_envelope: duplicate w values");
    for (const auto& p : points) {
      while (hull_.size() >= 2) {
        const auto& a = hull_[hull_.size() - 2];
        const auto& b = hull_.back();
        // Drop b when it lies on or below the chord from a to p.
        const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
        if (cross >= 0) hull_.pop_back();
        else break;
      }
      hull_.push_back(p);
    }
  }

  double lo() const { return hull_.front().first; }
  double hi() const { return hull_.back().first; }
  const std::vector<std::pair<double, double>>& vertices() const { return hull_; }

  double operator()(double w) const {
    if (w < lo() || w > hi()) throw InvariantError("ConcaveEnvelope: query outside the hull range");
    auto it = std::lower_bound(hull_.begin(), hull_.end(), std::make_pair(w, -std::numeric_limits<double>::infinity()));
    if (it == hull_.begin()) return it->second;
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double t = (w - a.first) / (b.first - a.first);
    return a.second + t * (b.second - a.second);
  }

 private:
  std::vector<std::pair<double, double>> hull_;
};

inline ConcaveEnvelope concave_envelope(std::vector<std::pair<double, double>> points) {
  return ConcaveEnvelope(std::move(points));
}

struct RandomnessQuery {
  Scenario scenario;
  Functional functional;
  int xstar = 0;
  int ystar = 0;
  double w = 0.0;

  void validate() const {
    if (!scenario.matches(functional)) throw DimensionError("RandomnessQuery: functional does not match scenario");
    if (xstar < 0 || xstar >= scenario.n || ystar < 0 || ystar >= scenario.m)
      throw DimensionError("RandomnessQuery: extraction pair out of range");
    if (w < functional.algebraic_min() - 1e-12 || w > functional.algebraic_max() + 1e-12)
      throw InvariantError("RandomnessQuery: w outside the algebraic range");
  }
};

struct RandomnessOptions {
  int grid_points = 41;
  std::uint64_t seed = 1;
  BasisOptions basis;
  sdp::SolverOptions solver;
};

/// Moment bases for every rank profile, sampled once and reused for all
/// queries that share the pinned preparations.
class GuessingRelaxation {
 public:
  GuessingRelaxation(const Scenario& scn, const Functional& f, const MonomialList& mono, int dim,
                     const RandomnessOptions& opt = {})
      : scn_(scn), f_(f), mono_(mono), opt_(opt) {
    if (!scn.matches(f)) throw DimensionError("GuessingRelaxation: functional does not match scenario");
    const auto profiles = rank_profiles(f, dim);
    bases_.resize(profiles.size());
    parallel_for(static_cast<int>(profiles.size()), [&](int i) {
      Rng rng = make_stream(opt.seed, static_cast<std::uint64_t>(i));
      bases_[static_cast<std::size_t>(i)] = build_basis(scn, mono, profiles[static_cast<std::size_t>(i)], dim, rng, opt.basis);
    });
  }

  const Scenario& scenario() const { return scn_; }
  const std::vector<MomentBasis>& bases() const { return bases_; }

  /// True when the bases were sampled with the pins implied by `eps`.
  bool compatible(const std::vector<double>& eps) const {
    for (int x = 0; x < scn_.n; ++x)
      if (bases_.front().pinned[static_cast<std::size_t>(x)] != (opt_.basis.pin_exact && eps[static_cast<std::size_t>(x)] == 0.0))
        return false;
    return true;
  }

  /// Maximum of `objective` over profiles, or nullopt when every profile is
  /// infeasible.
  std::optional<double> maximize(const EntryForm& objective, const std::vector<double>& eps,
                                 const std::vector<ExtraConstraint>& extra = {},
                                 const std::vector<char>& skip = {}) const {
    if (!compatible(eps)) throw InvariantError("GuessingRelaxation: bases were sampled for different pins");
    std::vector<RelaxationResult> res(bases_.size());
    parallel_for(static_cast<int>(bases_.size()), [&](int i) {
      if (!skip.empty() && skip[static_cast<std::size_t>(i)]) {
        res[static_cast<std::size_t>(i)].status = sdp::Status::infeasible;
        return;
      }
      res[static_cast<std::size_t>(i)] = solve_relaxation(bases_[static_cast<std::size_t>(i)], objective, eps, extra, opt_.solver);
    });
    std::optional<double> best;
    for (const auto& r : res) {
      if (r.status == sdp::Status::infeasible || !std::isfinite(r.value)) continue;
      if (!best || r.value > *best) best = r.value;
    }
    return best;
  }

  /// Largest witness value. Per-profile maxima are remembered so that later
  /// queries can skip profiles that cannot reach the requested w.
  std::optional<double> witness_max(const std::vector<double>& eps) const {
    if (!compatible(eps)) throw InvariantError("GuessingRelaxation: bases were sampled for different pins");
    const auto form = functional_form(mono_, f_);
    std::vector<double> tops(bases_.size(), -std::numeric_limits<double>::infinity());
    parallel_for(static_cast<int>(bases_.size()), [&](int i) {
      const auto r = solve_relaxation(bases_[static_cast<std::size_t>(i)], form, eps, {}, opt_.solver);
      if (r.status != sdp::Status::infeasible && std::isfinite(r.value)) tops[static_cast<std::size_t>(i)] = r.value;
    });
    profile_max_ = tops;
    profile_max_eps_ = eps;
    const double best = *std::max_element(tops.begin(), tops.end());
    if (!std::isfinite(best)) return std::nullopt;
    return best;
  }

  /// Smallest witness value.
  std::optional<double> witness_min(const std::vector<double>& eps) const {
    const auto v = maximize(functional_form(mono_, f_.scaled(-1.0)), eps);
    if (!v) return std::nullopt;
    return -*v;
  }

  /// Largest witness value compatible with p(b|x*,y*) = 1 for some b.
  std::optional<double> deterministic_edge(int xstar, int ystar, const std::vector<double>& eps) const {
    std::optional<double> best;
    for (int b = 0; b < scn_.k; ++b) {
      ExtraConstraint ex;
      ex.form = probability_form(mono_, b, xstar, ystar);
      ex.rhs = 1.0;
      const auto v = maximize(functional_form(mono_, f_), eps, {ex});
      if (v && (!best || *v > *best)) best = v;
    }
    return best;
  }

  /// G'(w) = max_b max p(b|x*,y*) subject to W = w; nullopt if infeasible.
  std::optional<double> guessing(int xstar, int ystar, double w, const std::vector<double>& eps) const {
    ExtraConstraint ex;
    ex.form = functional_form(mono_, f_);
    ex.rhs = w;
    std::vector<char> skip;
    if (profile_max_eps_ == eps) {
      skip.resize(bases_.size());
      for (std::size_t i = 0; i < bases_.size(); ++i) skip[i] = w > profile_max_[i] + 1e-7;
    }
    std::optional<double> best;
    for (int b = 0; b < scn_.k; ++b) {
      const auto v = maximize(probability_form(mono_, b, xstar, ystar), eps, {ex}, skip);
      if (v && (!best || *v > *best)) best = v;
    }
    if (best) best = std::clamp(*best, 1.0 / scn_.k, 1.0);
    return best;
  }

 private:
  Scenario scn_;
  Functional f_;
  MonomialList mono_;
  RandomnessOptions opt_;
  std::vector<MomentBasis> bases_;
  mutable std::vector<double> profile_max_;
  mutable std::vector<double> profile_max_eps_;
};

struct GuessingPoint {
  double w = 0.0;
  bool feasible = false;
  double g_raw = 1.0;
};

/// Raw G'(w) on the given grid.
inline std::vector<GuessingPoint> guessing_curve(const GuessingRelaxation& rel, int xstar, int ystar,
                                                 const std::vector<double>& grid, const std::vector<double>& eps) {
  std::vector<GuessingPoint> out;
  for (double w : grid) {
    GuessingPoint p;
    p.w = w;
    const auto g = rel.guessing(xstar, ystar, w, eps);
    p.feasible = g.has_value();
    if (g) p.g_raw = *g;
    out.push_back(p);
  }
  return out;
}

struct GuessingEnvelope {
  double w_edge = 0.0;  // up to here p(b|x*,y*) = 1 is compatible
  double w_max = 0.0;   // largest witness value of the relaxation
  bool certain_edge = true;
  std::vector<GuessingPoint> curve;
};

/// Raw G' on `grid_points` values spanning [w_edge, w_max].
inline GuessingEnvelope guessing_envelope(const GuessingRelaxation& rel, int xstar, int ystar,
                                          const std::vector<double>& eps, int grid_points = 41) {
  if (grid_points < 2) throw InvariantError("guessing_envelope: need at least two grid points");
  GuessingEnvelope env;
  const auto top = rel.witness_max(eps);
  if (!top) throw std::runtime_error("guessing_envelope: witness relaxation infeasible");
  env.w_max = *top;
  const auto edge = rel.deterministic_edge(xstar, ystar, eps);
  if (edge) {
    env.w_edge = std::min(*edge, env.w_max);
  } else {
    // No outcome can be certain: the grid spans the whole witness range.
    const auto bottom = rel.witness_min(eps);
    if (!bottom) throw std::runtime_error("guessing_envelope: witness relaxation infeasible");
    env.w_edge = *bottom;
    env.certain_edge = false;
  }
  std::vector<double> grid;
  for (int i = 0; i < grid_points; ++i) grid.push_back(env.w_edge + (env.w_max - env.w_edge) * i / (grid_points - 1));
  env.curve = guessing_curve(rel, xstar, ystar, grid, eps);
  return env;
}

struct RandomnessResult {
  double w = 0.0;
  double g_raw = 1.0;
  double g_hull = 1.0;
  double hmin_bits = 0.0;
  bool feasible = true;
};

/// G at w from the concave hull of the envelope's points and the queried
/// point itself; G = 1 at or below the deterministic edge.
inline RandomnessResult certify_randomness(const GuessingRelaxation& rel, const GuessingEnvelope& env, int xstar,
                                           int ystar, double w, const std::vector<double>& eps) {
  RandomnessResult res;
  res.w = w;
  const auto here = rel.guessing(xstar, ystar, w, eps);
  if (!here || w > env.w_max + 1e-7) {
    res.feasible = false;
    return res;
  }
  res.g_raw = *here;
  if (env.certain_edge && w <= env.w_edge) return res;
  std::vector<std::pair<double, double>> pts;
  if (env.certain_edge) pts.emplace_back(env.w_edge, 1.0);
  for (const auto& p : env.curve)
    if (p.feasible && (p.w > env.w_edge || !env.certain_edge) && std::abs(p.w - w) > 1e-12)
      pts.emplace_back(p.w, p.g_raw);
  pts.emplace_back(w, res.g_raw);
  if (pts.size() < 2) {
    res.g_hull = res.g_raw;
    res.hmin_bits = hmin(res.g_hull);
    return res;
  }
  const ConcaveEnvelope hull(pts);
  res.g_hull = std::clamp(hull(w), res.g_raw, 1.0);
  res.hmin_bits = hmin(res.g_hull);
  return res;
}

inline RandomnessResult certify_randomness(const RandomnessQuery& q, const MonomialList& mono, int dim,
                                           const RandomnessOptions& opt = {}) {
  q.validate();
  const GuessingRelaxation rel(q.scenario, q.functional, mono, dim, opt);
  const auto env = guessing_envelope(rel, q.xstar, q.ystar, q.scenario.epsilons, opt.grid_points);
  return certify_randomness(rel, env, q.xstar, q.ystar, q.w, q.scenario.epsilons);
}

struct SweepRow {
  double epsilon = 0.0;
  double w = 0.0;
  double g_raw = 1.0;
  double g_hull = 1.0;
  double hmin_bits = 0.0;
  bool feasible = true;
};

/// Witness values to certify at a given eps; `w_max` is the relaxation's
/// largest witness value there.
using WRule = std::function<std::vector<double>(double eps, double w_max)>;

/// w = factor * w_ideal for each factor.
inline WRule fixed_fractions(std::vector<double> factors, double w_ideal) {
  return [factors = std::move(factors), w_ideal](double, double) {
    std::vector<double> out;
    for (double k : factors) out.push_back(k * w_ideal);
    return out;
  };
}

/// For every eps (applied to all inputs) certifies the witness values given
/// by `rule`. The grid and hull are computed once per eps; bases are shared
/// by all eps > 0.
inline std::vector<SweepRow> randomness_sweep(const Scenario& scn, const Functional& f, int xstar, int ystar,
                                              const std::vector<double>& eps_grid, const WRule& rule,
                                              const MonomialList& mono, int dim, const RandomnessOptions& opt = {}) {
  std::optional<GuessingRelaxation> pinned, free;
  std::vector<SweepRow> rows;
  for (double e : eps_grid) {
    const Scenario s = scn.with_epsilon(e);
    auto& slot = (opt.basis.pin_exact && e == 0.0) ? pinned : free;
    if (!slot) slot.emplace(s, f, mono, dim, opt);
    const auto env = guessing_envelope(*slot, xstar, ystar, s.epsilons, opt.grid_points);
    for (double w : rule(e, env.w_max)) {
      SweepRow row;
      row.epsilon = e;
      row.w = w;
      const auto r = certify_randomness(*slot, env, xstar, ystar, w, s.epsilons);
      row.feasible = r.feasible;
      row.g_raw = r.g_raw;
      row.g_hull = r.g_hull;
      row.hmin_bits = r.hmin_bits;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace distrust
