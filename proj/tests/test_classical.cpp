#include "distrust/analytic.hpp"
#include "distrust/classical.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace distrust;

namespace {

Functional random_functional(int k, int n, int m, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Functional f(k, n, m);
  for (int b = 0; b < k; ++b)
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < m; ++y) f(b, x, y) = unif(rng);
  return f;
}

Scenario identical_targets(int n, int m, int k, double eps) {
  ComplexVector z = ComplexVector::Zero(n);
  z(0) = 1.0;
  return Scenario(n, m, k, std::vector<PureState>(static_cast<std::size_t>(n), PureState(z)),
                  std::vector<double>(static_cast<std::size_t>(n), eps));
}

double best_over(const std::vector<DeterministicStrategy>& list, const MomentBasis& basis, const Functional& f,
                 const std::vector<double>& eps) {
  double best = -1e300;
  for (const auto& s : list) {
    const auto r = solve_relaxation(basis, strategy_form(basis.monomials, f, s), eps);
    if (r.status == sdp::Status::optimal) best = std::max(best, r.value);
  }
  return best;
}

}  // namespace

TEST(Strategies, CanonicalCounts) {
  EXPECT_EQ(enumerate_strategies(1, 2, 2).size(), 3u);
  EXPECT_EQ(enumerate_strategies(2, 6, 2).size(), 84u);
  EXPECT_EQ(enumerate_strategies(2, 3, 2).size(), 20u);
  EXPECT_EQ(enumerate_raw_strategies(2, 3, 2).size(), 64u);
  EXPECT_DOUBLE_EQ(raw_strategy_count(2, 6, 2), 4096.0);
}

TEST(Strategies, CanonicalRepresentativesCoverEveryClass) {
  std::set<std::vector<std::vector<int>>> raw_keys, canon_keys;
  for (const auto& s : enumerate_raw_strategies(2, 3, 2)) raw_keys.insert(s.canonical_key());
  for (const auto& s : enumerate_strategies(2, 3, 2)) {
    EXPECT_EQ(s.m(), 2);
    EXPECT_EQ(s.dim(), 3);
    canon_keys.insert(s.canonical_key());
  }
  EXPECT_EQ(raw_keys, canon_keys);
}

TEST(Strategies, GuardRejectsHugeEnumeration) {
  EXPECT_THROW(enumerate_strategies(4, 12, 3, 1000), std::runtime_error);
}

TEST(Strategies, InducedFunctionalMatchesPostProcessedTable) {
  Rng rng = make_stream(12, 0);
  const int n = 3, m = 2, k = 3, d = 3;
  const Functional f = random_functional(k, n, m, rng);
  for (const auto& s : enumerate_strategies(m, d, k)) {
    const ComplexMatrix u = detail::haar_unitary(d, rng);
    std::vector<ComplexMatrix> states;
    for (int x = 0; x < n; ++x) states.push_back(random_pure_state(d, rng).projector());
    const Realization r(states, classical_measurements(u, s, k));
    const auto ct = induced_coefficients(f, s);
    double induced = 0;
    for (int x = 0; x < n; ++x)
      for (int j = 0; j < d; ++j)
        induced += ct[static_cast<std::size_t>(x)][static_cast<std::size_t>(j)] *
                   (u.col(j).adjoint() * states[static_cast<std::size_t>(x)] * u.col(j))(0, 0).real();
    EXPECT_NEAR(functional_value(f, born_table(r)), induced, 1e-12);
  }
}

TEST(Strategies, CanonicalMaximumEqualsRawMaximum) {
  for (int d : {2, 3}) {
    auto p = build_sd(1.2, 0.05);
    const auto mono = classical_monomials(p.scenario, d, 2);
    Rng rng = make_stream(5, 0);
    const auto basis = classical_basis(p.scenario, mono, d, rng);
    const double canon = best_over(enumerate_strategies(1, d, 2), basis, p.functional, p.scenario.epsilons);
    const double raw = best_over(enumerate_raw_strategies(1, d, 2), basis, p.functional, p.scenario.epsilons);
    EXPECT_NEAR(canon, raw, 1e-7) << "dimension " << d;
  }
}

TEST(ClassicalUpper, W322BelowQuantumAtZeroDistrust) {
  auto p = build_322(0.0);
  const auto r = classical_upper_bound(p.scenario, p.functional, classical_monomials(p.scenario, 3, 2), 3);
  EXPECT_EQ(r.strategies, 20u);
  EXPECT_LT(r.value, 1 + 2 * std::numbers::sqrt2 - 0.1);
}

TEST(ClassicalUpper, DiscriminationNeedsOnlyOneBasis) {
  for (double e : {0.0, 0.05}) {
    auto p = build_sd(1.0, e);
    const auto r = classical_upper_bound(p.scenario, p.functional, classical_monomials(p.scenario, 2, 2), 2);
    EXPECT_NEAR(r.value, sd_optimal(1.0, e), 1e-5);
  }
}

TEST(ClassicalUpper, RejectsQuantumList) {
  auto p = build_322(0.1);
  Rng rng = make_stream(1, 0);
  EXPECT_THROW(classical_basis(p.scenario, default_monomials(p.scenario, 2), 3, rng), InvariantError);
}

TEST(ClassicalLower, DiscriminationAtZeroDistrust) {
  for (double th : {0.6, 1.5, 2.5}) {
    auto p = build_sd(th, 0.0);
    const auto r = classical_lower_bound(p.scenario, p.functional, 2, 3, 7);
    EXPECT_NEAR(r.value, sd_optimal(th, 0.0), 1e-8);
  }
}

TEST(ClassicalLower, FourierConstructionReachesAlgebraicMaximum) {
  Rng rng = make_stream(31, 0);
  for (int n : {2, 3, 4}) {
    const auto four = fourier_states(n);
    ComplexVector z = ComplexVector::Zero(n);
    z(0) = 1.0;
    for (const auto& s : four) EXPECT_NEAR(std::norm(s.amplitudes().dot(z)), 1.0 / n, 1e-15);
    const auto scn = identical_targets(n, 2, 2, (n - 1.0) / n);
    const Functional f = random_functional(2, n, 2, rng);
    const auto r = classical_lower_bound(scn, f, n, 2, 3);
    EXPECT_NEAR(r.value, f.algebraic_max(), 1e-7) << "n " << n;
  }
}

TEST(ClassicalLower, ResultIsAchievable) {
  auto p = build_322(0.1);
  const auto r = classical_lower_bound(p.scenario, p.functional, 3, 2, 5);
  std::vector<ComplexMatrix> states = r.states;
  const Realization real(states, classical_measurements(r.basis, r.strategy, 2));
  EXPECT_NO_THROW(real.check_against(p.scenario));
  EXPECT_NEAR(functional_value(p.functional, born_table(real)), r.value, 1e-9);
}

TEST(ClassicalBounds, SandwichOnRandomScenarios) {
  Rng rng = make_stream(44, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario scn(2, 2, 2, {random_pure_state(2, rng), random_pure_state(2, rng)}, {0.2 * unif(rng), 0.2 * unif(rng)});
    const Functional f = random_functional(2, 2, 2, rng);
    const double ub = classical_upper_bound(scn, f, classical_monomials(scn, 2, 2), 2).value;
    const double lb = classical_lower_bound(scn, f, 2, 3, 11).value;
    EXPECT_LE(lb, ub + 1e-5);
  }
}
