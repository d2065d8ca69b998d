#include "distrust/analytic.hpp"
#include "distrust/hierarchy.hpp"
#include "distrust/seesaw.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace distrust;

namespace {

constexpr double pi = std::numbers::pi;

RankProfile single(std::vector<int> r) { return RankProfile{{std::move(r)}}; }

}  // namespace

TEST(Monomials, LevelOneSize) {
  auto p = build_sd(1.0);
  EXPECT_EQ(default_monomials(p.scenario, 1).size(), 7);
}

TEST(Monomials, RacSizes) {
  auto p = build_rac();
  EXPECT_EQ(default_monomials(p.scenario, 2).size(), 77);
  EXPECT_EQ(classical_monomials(p.scenario, 4, 2).size(), 61);
}

TEST(Monomials, IdentityAndSymbolsPresentWithoutDuplicates) {
  auto p = build_322();
  const auto l = default_monomials(p.scenario, 2);
  EXPECT_EQ(l.find({}), 0);
  for (int s = 0; s < l.symbol_count(); ++s) EXPECT_GE(l.find({s}), 0);
  for (std::size_t i = 0; i < l.words.size(); ++i)
    for (std::size_t j = i + 1; j < l.words.size(); ++j) EXPECT_NE(l.words[i], l.words[j]);
  EXPECT_THROW(default_monomials(p.scenario, 3), InvariantError);
}

TEST(Sampling, MomentMatricesArePsdHermitianWithFixedIdentity) {
  auto p = build_322(0.1);
  const auto l = default_monomials(p.scenario, 2);
  Rng rng = make_stream(4, 0);
  const RankProfile prof{{{1, 2}, {2, 1}}};
  for (int i = 0; i < 100; ++i) {
    const ComplexMatrix g = sample_moment_matrix(p.scenario, l, prof, 3, rng);
    EXPECT_LT(detail::hermiticity_defect(g), 1e-10);
    EXPECT_GT(detail::min_eigenvalue(g), -1e-8);
    EXPECT_NEAR(g(0, 0).real(), 3.0, 1e-12);
    for (int x = 0; x < 3; ++x) {
      const double fid = g(l.find({l.phi(x)}), l.find({l.psi(x)})).real();
      EXPECT_GE(fid, -1e-12);
      EXPECT_LE(fid, 1 + 1e-12);
      for (int y = 0; y < 2; ++y)
        for (int b = 0; b < 2; ++b) {
          const double pr = g(l.find({l.phi(x)}), l.find({l.meas(b, y)})).real();
          EXPECT_GE(pr, -1e-12);
          EXPECT_LE(pr, 1 + 1e-12);
        }
    }
  }
}

TEST(Sampling, TrivialScenarioRank) {
  ComplexVector z(1);
  z << 1.0;
  Scenario scn(1, 1, 1, {PureState(z)}, {0.3});
  const auto l = default_monomials(scn, 1);
  Rng rng = make_stream(2, 0);
  const auto basis = build_basis(scn, l, single({1}), 1, rng, {}, true);
  // In dimension 1 every operator is the scalar 1.
  EXPECT_EQ(basis.rank, 1);
  for (const auto& s : basis.samples) EXPECT_NEAR(s(0, 0).real(), 1.0, 1e-12);
}

TEST(Basis, DeterministicForFixedSeed) {
  auto p = build_322(0.1);
  const auto l = default_monomials(p.scenario, 2);
  const RankProfile prof{{{1, 2}, {1, 2}}};
  Rng a = make_stream(9, 0), b = make_stream(9, 0);
  EXPECT_EQ(build_basis(p.scenario, l, prof, 3, a).rank, build_basis(p.scenario, l, prof, 3, b).rank);
}

TEST(Basis, RacRankStableAcrossSeeds) {
  auto p = build_rac(0.03);
  const auto l = default_monomials(p.scenario, 2);
  const RankProfile prof{{{2, 2}, {2, 2}}};
  int first = -1;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    Rng rng = make_stream(s, 0);
    const int r = build_basis(p.scenario, l, prof, 4, rng).rank;
    if (first < 0) first = r;
    EXPECT_EQ(r, first);
  }
}

TEST(Basis, RetainedSamplesAreIndependentAndValid) {
  auto p = build_sd(1.0, 0.1);
  const auto l = default_monomials(p.scenario, 2);
  Rng rng = make_stream(6, 0);
  const auto basis = build_basis(p.scenario, l, single({1, 1}), 2, rng, {}, true);
  ASSERT_EQ(static_cast<int>(basis.samples.size()), basis.rank);
  RealMatrix stack(detail::vec_length(l.size(), basis.real), basis.rank);
  for (int i = 0; i < basis.rank; ++i) {
    const auto& g = basis.samples[static_cast<std::size_t>(i)];
    EXPECT_LT(detail::hermiticity_defect(g), 1e-10);
    EXPECT_GT(detail::min_eigenvalue(g), -1e-8);
    EXPECT_DOUBLE_EQ(g(0, 0).real(), 2.0);
    stack.col(i) = detail::vectorize(g, basis.real);
  }
  Eigen::JacobiSVD<RealMatrix> svd(stack);
  const auto& sv = svd.singularValues();
  EXPECT_GT(sv(sv.size() - 1), 1e-9 * sv(0));
}

TEST(Basis, GrowthGuard) {
  auto p = build_322(0.1);
  const auto l = default_monomials(p.scenario, 2);
  BasisOptions opt;
  opt.max_matrices = 10;
  Rng rng = make_stream(1, 0);
  EXPECT_THROW(build_basis(p.scenario, l, RankProfile{{{1, 2}, {1, 2}}}, 3, rng, opt), std::runtime_error);
}

TEST(Profiles, EnumerationCounts) {
  auto sd = build_sd(1.0);
  EXPECT_EQ(rank_profiles(sd.functional, 2).size(), 3u);
  EXPECT_EQ(rank_profiles(build_322().functional, 3).size(), 16u);
  EXPECT_EQ(rank_profiles(build_rac().functional, 4).size(), 25u);
}

TEST(Profiles, SymmetricFunctionalMergesRelabelings) {
  // c identical for both outcomes: swapping b leaves f invariant.
  ComplexVector z(1);
  z << 1.0;
  Functional f(2, 1, 1);
  f(0, 0, 0) = 1;
  f(1, 0, 0) = 1;
  EXPECT_EQ(rank_profiles(f, 2).size(), 2u);
}

TEST(Relaxation, ZeroFunctional) {
  auto p = build_322(0.1);
  const auto l = default_monomials(p.scenario, 1);
  Rng rng = make_stream(1, 0);
  const auto basis = build_basis(p.scenario, l, RankProfile{{{1, 2}, {2, 1}}}, 3, rng);
  const auto r = solve_relaxation(basis, Functional(2, 3, 2), p.scenario.epsilons);
  EXPECT_EQ(r.status, sdp::Status::optimal);
  EXPECT_NEAR(r.value, 0.0, 1e-7);
}

TEST(Relaxation, DiscriminationMatchesClosedForm) {
  for (double th : {0.5, pi / 2, 2.4})
    for (double e : {0.0, 0.02, 0.08}) {
      auto p = build_sd(th, e);
      const auto l = default_monomials(p.scenario, 2);
      const auto r = quantum_upper_bound(p.scenario, p.functional, l, 2);
      EXPECT_NEAR(r.value, sd_optimal(th, e), 1e-5) << "theta " << th << " eps " << e;
    }
}

TEST(Relaxation, W322AtZeroDistrust) {
  auto p = build_322(0.0);
  const auto r = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 3);
  EXPECT_NEAR(r.value, 1 + 2 * std::numbers::sqrt2, 1e-5);
  EXPECT_EQ(r.failures, 0);
}

TEST(Relaxation, OptimisingMomentMatrixRespectsFloors) {
  auto p = build_322(0.1);
  const auto l = default_monomials(p.scenario, 2);
  Rng rng = make_stream(3, 0);
  const auto basis = build_basis(p.scenario, l, RankProfile{{{1, 2}, {1, 2}}}, 3, rng);
  const auto r = solve_relaxation(basis, p.functional, p.scenario.epsilons);
  ASSERT_EQ(r.status, sdp::Status::optimal);
  for (int x = 0; x < 3; ++x) {
    EXPECT_GE(r.gamma(l.find({l.phi(x)}), l.find({l.psi(x)})).real(), 0.9 - 1e-7);
    for (int y = 0; y < 2; ++y)
      for (int b = 0; b < 2; ++b) {
        const double pr = r.gamma(l.find({l.phi(x)}), l.find({l.meas(b, y)})).real();
        EXPECT_GE(pr, -1e-6);
        EXPECT_LE(pr, 1 + 1e-6);
      }
  }
}

TEST(Relaxation, PinnedBasisRejectsPositiveDistrust) {
  auto p = build_322(0.0);
  const auto l = default_monomials(p.scenario, 1);
  Rng rng = make_stream(1, 0);
  const auto basis = build_basis(p.scenario, l, RankProfile{{{1, 2}, {1, 2}}}, 3, rng);
  EXPECT_THROW(solve_relaxation(basis, p.functional, {0.1, 0.1, 0.1}), InvariantError);
}

TEST(Relaxation, ExtraEqualityOutsideRangeIsInfeasible) {
  auto p = build_sd(1.0, 0.05);
  const auto l = default_monomials(p.scenario, 2);
  Rng rng = make_stream(2, 0);
  const auto basis = build_basis(p.scenario, l, single({1, 1}), 2, rng);
  ExtraConstraint ex;
  ex.form = functional_form(l, p.functional);
  ex.rhs = 1.2;
  const auto r = solve_relaxation(basis, p.functional, p.scenario.epsilons, {ex});
  EXPECT_EQ(r.status, sdp::Status::infeasible);
}

TEST(Relaxation, FullyDeterminedSpanWithEquality) {
  // Pinned states and a trivial measurement leave a single moment matrix,
  // on which W = 1/2 exactly.
  auto p = build_sd(1.0, 0.0);
  const auto l = default_monomials(p.scenario, 2);
  Rng rng = make_stream(3, 0);
  const auto basis = build_basis(p.scenario, l, single({2, 0}), 2, rng);
  ASSERT_EQ(basis.directions.cols(), 0);
  ExtraConstraint ex;
  ex.form = functional_form(l, p.functional);
  ex.rhs = 0.5;
  const auto ok = solve_relaxation(basis, p.functional, p.scenario.epsilons, {ex});
  EXPECT_EQ(ok.status, sdp::Status::optimal);
  EXPECT_NEAR(ok.value, 0.5, 1e-12);
  ex.rhs = 0.6;
  EXPECT_EQ(solve_relaxation(basis, p.functional, p.scenario.epsilons, {ex}).status, sdp::Status::infeasible);
}

TEST(UpperBound, TighterWithMoreWords) {
  auto p = build_322(0.05);
  const double l1 = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 1), 3).value;
  const double l2 = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 3).value;
  EXPECT_LE(l2, l1 + 1e-6);
}

TEST(UpperBound, SandwichesSeesaw) {
  for (double e : {0.0, 0.1, 0.2}) {
    auto p = build_322(e);
    const double ub = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 3).value;
    const double lb = seesaw(p.scenario, p.functional, 3, 5).value;
    EXPECT_GE(ub, lb - 1e-6);
    EXPECT_NEAR(ub, lb, 1e-4) << "eps " << e;
  }
}

TEST(UpperBound, RandomScenarioSandwich) {
  Rng rng = make_stream(77, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario scn(2, 2, 2, {random_pure_state(2, rng), random_pure_state(2, rng)}, {0.1 * unif(rng), 0.1 * unif(rng)});
    Functional f(2, 2, 2);
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) f(b, x, y) = unif(rng);
    const double ub = quantum_upper_bound(scn, f, default_monomials(scn, 2), 2).value;
    const double lb = seesaw(scn, f, 2, 9).value;
    EXPECT_GE(ub, lb - 1e-6);
  }
}
