#pragma once

// Command implementations shared by the command-line tool and the
// acceptance harness. Each returns plain data; formatting lives in tools/.

#include "distrust/analytic.hpp"
#include "distrust/classical.hpp"
#include "distrust/hierarchy.hpp"
#include "distrust/io.hpp"
#include "distrust/randomness.hpp"
#include "distrust/seesaw.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace distrust::cmd {

/// Preset name ("sd", "322", "rac") or a scenario file; `eps` overrides
/// every distrust value when set.
struct Source {
  std::string preset;
  std::string file;
  double theta = std::numbers::pi / 5;
  std::optional<double> eps;
};

inline Preset load(const Source& src) {
  if (src.preset.empty() == src.file.empty()) throw ConfigError("give exactly one of a preset or a scenario file");
  Preset p;
  if (!src.file.empty()) {
    auto [scn, f] = scenario_from_json(read_json_file(src.file));
    p = {std::move(scn), std::move(f)};
  } else if (src.preset == "sd") {
    if (!(src.theta >= 0 && src.theta <= std::numbers::pi)) throw ConfigError("theta outside [0, pi]");
    p = build_sd(src.theta);
  } else if (src.preset == "322") {
    p = build_322();
  } else if (src.preset == "rac") {
    p = build_rac();
  } else {
    throw ConfigError("unknown preset '" + src.preset + "' (expected sd, 322 or rac)");
  }
  if (src.eps) {
    if (!(*src.eps >= 0 && *src.eps <= 1)) throw ConfigError("eps outside [0, 1]");
    p.scenario = p.scenario.with_epsilon(*src.eps);
  }
  return p;
}

/// "n", "2n" or a positive integer.
inline int parse_dim(const std::string& text, int n) {
  if (text.empty() || text == "n") return n;
  if (text == "2n") return 2 * n;
  try {
    std::size_t used = 0;
    const int d = std::stoi(text, &used);
    if (used == text.size() && d > 0) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("dimension must be n, 2n or a positive integer");
}

/// Comma list ("0,0.01,0.05") or range "start:stop:count" (inclusive).
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::stringstream ss(text);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const double lo = std::stod(a), hi = std::stod(b);
      const int count = std::stoi(c);
      if (count < 1) throw ConfigError("grid count must be positive");
      for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse grid '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty grid");
  for (double v : out)
    if (!(v >= 0 && v <= 1)) throw ConfigError("grid values must lie in [0, 1]");
  return out;
}

// ---------------------------------------------------------------------------

struct BoundRequest {
  int dim = 0;
  int level = 2;
  std::uint64_t seed = 1;
  int restarts = 20;
};

struct BoundReport {
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  int profiles = 0;
  int failures = 0;
  bool warning = false;
  Realization realization;
};

inline BoundReport bound(const Preset& p, const BoundRequest& req) {
  SeesawOptions so;
  so.restarts = req.restarts;
  const auto lo = seesaw(p.scenario, p.functional, req.dim, req.seed, so);
  HierarchyOptions ho;
  ho.level = req.level;
  ho.seed = req.seed;
  const auto up = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, req.level), req.dim, ho);
  BoundReport r{lo.value, up.value, up.value - lo.value, static_cast<int>(up.profiles.size()), up.failures, lo.warning,
                *lo.realization};
  return r;
}

// ---------------------------------------------------------------------------

struct ClassicalRequest {
  std::vector<double> eps_grid;
  int dim = 0;
  int level = 2;
  std::uint64_t seed = 1;
  bool lower = false;
  bool quantum = false;
  int quantum_dim = 0;  // 0: the scenario's n
  int restarts = 8;
};

struct ClassicalRow {
  double epsilon = 0.0;
  double upper = 0.0;
  std::optional<double> lower;
  std::optional<double> quantum;
  int failures = 0;
};

/// Classical upper bound (and optionally the heuristic lower bound and the
/// quantum upper bound) at every eps. One classical basis is sampled per
/// pinned pattern and shared by all strategies and all eps.
inline std::vector<ClassicalRow> classical(const Preset& p, const ClassicalRequest& req) {
  const auto mono = classical_monomials(p.scenario, req.dim, req.level);
  std::optional<MomentBasis> pinned, free;
  std::vector<ClassicalRow> rows;
  for (double e : req.eps_grid) {
    const Scenario s = p.scenario.with_epsilon(e);
    auto& slot = e == 0.0 ? pinned : free;
    if (!slot) {
      Rng rng = make_stream(req.seed, 0);
      slot = classical_basis(s, mono, req.dim, rng);
    }
    ClassicalRow row;
    row.epsilon = e;
    const auto up = classical_upper_bound(s, p.functional, *slot);
    row.upper = up.value;
    row.failures = up.failures;
    if (req.lower) row.lower = classical_lower_bound(s, p.functional, req.dim, req.restarts, req.seed).value;
    if (req.quantum) {
      HierarchyOptions ho;
      ho.level = req.level;
      ho.seed = req.seed;
      const int qd = req.quantum_dim > 0 ? req.quantum_dim : s.n;
      row.quantum = quantum_upper_bound(s, p.functional, default_monomials(s, req.level), qd, ho).value;
    }
    rows.push_back(row);
  }
  return rows;
}

/// First eps at which `value(eps)` reaches `target`, by bisection on
/// [lo, hi]; assumes value is non-decreasing.
template <typename Fn>
double crossing(Fn&& value, double target, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) >= target) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

struct RandomnessRequest {
  int xstar = 0;
  int ystar = 0;
  std::vector<double> eps_grid;
  std::vector<double> factors{1.0, 0.99, 0.97};
  std::optional<double> w_ideal;  // defaults to the relaxation maximum at eps = 0
  bool optimal = false;           // certify the largest value at each eps instead
  int dim = 0;
  int level = 2;
  std::uint64_t seed = 1;
  int grid_points = 41;
};

inline std::vector<SweepRow> randomness(const Preset& p, const RandomnessRequest& req, bool sd_preset = false,
                                        double theta = 0.0) {
  if (req.xstar < 0 || req.xstar >= p.scenario.n || req.ystar < 0 || req.ystar >= p.scenario.m)
    throw ConfigError("extraction pair out of range");
  const auto mono = default_monomials(p.scenario, req.level);
  RandomnessOptions opt;
  opt.grid_points = req.grid_points;
  opt.seed = req.seed;
  WRule rule;
  if (req.optimal) {
    rule = [sd_preset, theta](double e, double w_max) {
      return std::vector<double>{sd_preset ? std::min(sd_optimal(theta, e), w_max) : w_max};
    };
  } else {
    double w_ideal = 0.0;
    if (req.w_ideal) {
      w_ideal = *req.w_ideal;
    } else {
      const Scenario s0 = p.scenario.with_epsilon(0.0);
      const GuessingRelaxation rel(s0, p.functional, mono, req.dim, opt);
      const auto top = rel.witness_max(s0.epsilons);
      if (!top) throw std::runtime_error("randomness: relaxation infeasible at eps = 0");
      w_ideal = *top;
    }
    rule = fixed_fractions(req.factors, w_ideal);
  }
  return randomness_sweep(p.scenario, p.functional, req.xstar, req.ystar, req.eps_grid, rule, mono, req.dim, opt);
}

// ---------------------------------------------------------------------------

struct StudyScenario {
  int n, m, k;
};

struct StudyRow {
  StudyScenario shape;
  int cases = 0;
  double max_discrepancy = 0.0;  // max |value(2n) - value(n)|
  double max_gain = 0.0;         // max value(2n) - value(n)
  int resampled = 0;
};

/// Random case: targets in C^n, eps_x uniform in [0,1], coefficients
/// uniform in [0,1].
inline Preset random_case(const StudyScenario& s, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<PureState> targets;
  std::vector<double> eps;
  for (int x = 0; x < s.n; ++x) {
    targets.push_back(random_pure_state(s.n, rng));
    eps.push_back(unif(rng));
  }
  Functional f(s.k, s.n, s.m);
  for (int b = 0; b < s.k; ++b)
    for (int x = 0; x < s.n; ++x)
      for (int y = 0; y < s.m; ++y) f(b, x, y) = unif(rng);
  return {Scenario(s.n, s.m, s.k, std::move(targets), std::move(eps)), std::move(f)};
}

/// Seesaw at D = n and D = 2n on `cases` random instances per shape. Case c
/// of shape i draws from make_stream(seed, i * 1000003 + c), so tables are
/// reproducible.
inline std::vector<StudyRow> dimension_study(const std::vector<StudyScenario>& shapes, int cases, std::uint64_t seed,
                                             int restarts = 20) {
  std::vector<StudyRow> out;
  SeesawOptions so;
  so.restarts = restarts;
  so.tolerance = 1e-7;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    StudyRow row;
    row.shape = shapes[i];
    row.cases = cases;
    for (int c = 0; c < cases; ++c) {
      const std::uint64_t stream = i * 1000003ULL + static_cast<std::uint64_t>(c);
      for (int attempt = 0; attempt < 2; ++attempt) {
        Rng rng = make_stream(seed + static_cast<std::uint64_t>(attempt) * 0x9e3779b9ULL, stream);
        const auto p = random_case(shapes[i], rng);
        try {
          const std::uint64_t s = rng();
          const double small = seesaw(p.scenario, p.functional, shapes[i].n, s, so).value;
          const double large = seesaw(p.scenario, p.functional, 2 * shapes[i].n, s, so).value;
          row.max_discrepancy = std::max(row.max_discrepancy, std::abs(large - small));
          row.max_gain = std::max(row.max_gain, large - small);
          break;
        } catch (const std::exception&) {
          if (attempt == 1) throw;
          ++row.resampled;
        }
      }
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace distrust::cmd
