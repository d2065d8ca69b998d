#pragma once

// Closed-form results for two-state discrimination, detection-efficiency
// certification and the named benchmark scenarios.

#include "distrust/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace distrust {

struct Preset {
  Scenario scenario;
  Functional functional;
};

/// Optimal success probability for discriminating |0> and
/// cos(theta/2)|0> + sin(theta/2)|1> with equal distrust eps.
inline double sd_optimal(double theta, double eps) {
  if (!(theta >= 0 && theta <= std::numbers::pi)) throw InvariantError("sd_optimal: theta outside [0, pi]");
  if (!(eps >= 0 && eps <= 1)) throw InvariantError("sd_optimal: eps outside [0, 1]");
  const double s = std::sin(theta / 2), c = std::cos(theta / 2);
  if (eps > 0.5 * (1 - s)) return 1.0;
  return 0.5 * (1 + s) + std::sqrt(eps * (1 - eps)) * c - eps * s;
}

/// Discrimination scenario: n = 2, m = 1, k = 2 and W = (p(0|0) + p(1|1)) / 2.
inline Preset build_sd(double theta, double eps = 0.0) {
  ComplexVector t1(2), t2(2);
  t1 << 1.0, 0.0;
  t2 << std::cos(theta / 2), std::sin(theta / 2);
  Scenario scn(2, 1, 2, {PureState(t1), PureState::normalized(t2)}, {eps, eps});
  Functional f(2, 2, 1);
  f(0, 0, 0) = 0.5;
  f(1, 1, 0) = 0.5;
  return {std::move(scn), std::move(f)};
}

/// Qubit realization attaining sd_optimal: states at Bloch angles
/// -arccos(1-2eps) and theta + arccos(1-2eps) in the xz-plane, measured by
/// the positive-part projector of rho_1 - rho_2.
inline Realization sd_optimal_realization(double theta, double eps) {
  if (!(theta >= 0 && theta <= std::numbers::pi)) throw InvariantError("sd_optimal_realization: theta outside [0, pi]");
  if (!(eps >= 0 && eps <= 0.5 * (1 - std::sin(theta / 2)) + 1e-15))
    throw InvariantError("sd_optimal_realization: eps beyond the nontrivial branch");
  const double a = std::acos(1 - 2 * eps);
  auto rho = [](double nu) {
    return bloch_to_state({std::sin(nu), 0.0, std::cos(nu)}).projector();
  };
  const ComplexMatrix r1 = rho(-a), r2 = rho(theta + a);
  return Realization({r1, r2}, {positive_part_measurement(r1 - r2)});
}

/// Certified lower bound on the detection efficiency from an observed
/// success probability.
inline double eta_certified(double w_obs, double theta, double eps) {
  if (!(w_obs >= 0.5 && w_obs <= 1.0)) throw InvariantError("eta_certified: w_obs outside [1/2, 1]");
  const double wq = sd_optimal(theta, eps);
  if (wq - 0.5 <= 1e-15) throw InvariantError("eta_certified: uninformative witness");
  return std::clamp((2 * w_obs - 1) / (2 * wq - 1), 0.0, 1.0);
}

/// Efficiency bound under white noise of visibility v and a measurement
/// misalignment delta (radians).
inline double eta_model_bound(double theta, double v, double delta, double eta_true) {
  if (!(v >= 0 && v <= 1)) throw InvariantError("eta_model_bound: v outside [0, 1]");
  if (!(eta_true >= 0 && eta_true <= 1)) throw InvariantError("eta_model_bound: eta_true outside [0, 1]");
  const double s = std::sin(theta / 2);
  if (v >= s) {
    if (std::abs(s) < 1e-300) throw InvariantError("eta_model_bound: theta = 0 in the cotangent branch");
    const double cot = std::cos(theta / 2) / s;
    return v * eta_true * std::cos(delta) / (v + std::sqrt(1 - v * v) * cot);
  }
  return v * eta_true * std::cos(delta) * s;
}

inline double white_noise_to_eps(double v) {
  if (!(v >= 0 && v <= 1)) throw InvariantError("white_noise_to_eps: v outside [0, 1]");
  return (1 - v) / 2;
}

inline double witness_to_visibility(double w_obs, double w_ideal) {
  if (w_ideal == 0) throw InvariantError("witness_to_visibility: w_ideal is zero");
  return w_obs / w_ideal;
}

/// Three qubit targets with Bloch vectors (0,0,1), (1,0,0), (-1,0,-1)/sqrt2
/// and W = E11 + E12 + E21 - E22 - E31 with E = p(0|x,y) - p(1|x,y).
inline Preset build_322(double eps = 0.0) {
  const double r = 1 / std::numbers::sqrt2;
  Scenario scn(3, 2, 2,
               {bloch_to_state({0, 0, 1}), bloch_to_state({1, 0, 0}), bloch_to_state({-r, 0, -r})},
               {eps, eps, eps});
  Functional f(2, 3, 2);
  const double sign[3][2] = {{1, 1}, {1, -1}, {-1, 0}};
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 2; ++y) {
      f(0, x, y) = sign[x][y];
      f(1, x, y) = -sign[x][y];
    }
  return {std::move(scn), std::move(f)};
}

/// 2 -> 1 random access code: x = 2 x0 + x1 encoded in |0>, |+>, |->, |1>;
/// W averages p(b = x_y | x, y).
inline Preset build_rac(double eps = 0.0) {
  Scenario scn(4, 2, 2,
               {bloch_to_state({0, 0, 1}), bloch_to_state({1, 0, 0}), bloch_to_state({-1, 0, 0}),
                bloch_to_state({0, 0, -1})},
               {eps, eps, eps, eps});
  Functional f(2, 4, 2);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 2; ++y) {
      const int bit = y == 0 ? (x >> 1) & 1 : x & 1;
      f(bit, x, y) = 1.0 / 8;
    }
  return {std::move(scn), std::move(f)};
}

}  // namespace distrust
