// End-to-end acceptance run: one PASS/FAIL line per criterion, followed by
// indented detail lines. Exit status is the number of failing criteria.

#include "distrust/distrust.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>

using namespace distrust;

namespace {

const double w322_ideal = 1 + 2 * std::numbers::sqrt2;
const double rac_ideal = 0.5 * (1 + 1 / std::numbers::sqrt2);

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + buf);
    pass = pass && ok;
  }
  void info(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    notes.push_back(std::string("     ") + buf);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Classical upper bound at any eps > 0 with one basis shared across calls.
class ClassicalCurve {
 public:
  ClassicalCurve(Preset p, int dim) : p_(std::move(p)), dim_(dim), mono_(classical_monomials(p_.scenario, dim, 2)) {}

  double operator()(double eps) {
    const Scenario s = p_.scenario.with_epsilon(eps);
    auto& slot = eps == 0.0 ? pinned_ : free_;
    if (!slot) {
      Rng rng = make_stream(1, 0);
      slot = classical_basis(s, mono_, dim_, rng);
    }
    last_ = classical_upper_bound(s, p_.functional, *slot);
    return last_.value;
  }

  const ClassicalUpperResult& last() const { return last_; }
  std::size_t monomials() const { return mono_.size(); }

 private:
  Preset p_;
  int dim_;
  MonomialList mono_;
  std::optional<MomentBasis> pinned_, free_;
  ClassicalUpperResult last_;
};

double quantum_322(double eps) {
  auto p = build_322(eps);
  return quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 3).value;
}

// ---------------------------------------------------------------------------

Outcome discrimination_grid() {
  Outcome o;
  SeesawOptions so;
  so.restarts = 6;
  double worst_lo = 0, worst_up = 0;
  for (int i = 0; i < 10; ++i) {
    const double theta = std::numbers::pi * (i + 1) / 11;
    const double eps_max = 0.5 * (1 - std::sin(theta / 2));
    for (int j = 0; j < 10; ++j) {
      const double eps = eps_max * j / 9;
      const auto p = build_sd(theta, eps);
      const double exact = sd_optimal(theta, eps);
      const double lo = seesaw(p.scenario, p.functional, 2, 7, so).value;
      const double up = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 2).value;
      worst_lo = std::max(worst_lo, std::abs(lo - exact));
      worst_up = std::max(worst_up, std::abs(up - exact));
    }
  }
  o.check(worst_lo <= 1e-5, "seesaw: max |lower - closed form| = %.2e over 100 points", worst_lo);
  o.check(worst_up <= 1e-5, "relaxation: max |upper - closed form| = %.2e over 100 points", worst_up);
  return o;
}

Outcome w322_ideal_value() {
  Outcome o;
  cmd::Source src;
  src.preset = "322";
  src.eps = 0.0;
  const auto r = cmd::bound(cmd::load(src), {3, 2, 1, 20});
  o.check(std::abs(r.lower - w322_ideal) <= 1e-4, "lower %.9f vs 1+2*sqrt2 = %.9f", r.lower, w322_ideal);
  o.check(std::abs(r.upper - w322_ideal) <= 1e-4, "upper %.9f", r.upper);
  o.check(r.lower <= r.upper + 1e-7, "lower <= upper (gap %.1e)", r.gap);
  return o;
}

Outcome w322_thresholds() {
  Outcome o;
  // Curve on the 15-point grid at basis size n.
  ClassicalCurve c3(build_322(), 3);
  o.info("eps      classical(D=3)  quantum");
  for (int i = 0; i < 15; ++i) {
    const double e = 0.35 * i / 14;
    const double cl = c3(e);
    const double q = quantum_322(e);
    o.info("%.4f   %.6f        %.6f", e, cl, q);
  }
  const double x3 = cmd::crossing(c3, w322_ideal, 0.0, 0.06, 5e-4);
  o.check(std::abs(x3 - 0.031) <= 0.005, "D=3: classical bound crosses 1+2*sqrt2 at eps = %.4f (%zu strategies)", x3,
          c3.last().strategies);

  ClassicalCurve c6(build_322(), 6);
  const double x6 = cmd::crossing(c6, w322_ideal, 0.02, 0.04, 1e-3);
  o.check(std::abs(x6 - 0.031) <= 0.005, "D=6: classical bound crosses 1+2*sqrt2 at eps = %.4f (%zu strategies)", x6,
          c6.last().strategies);

  double worst = 0;
  for (double e : {0.32, 0.33, 0.34}) {
    const double q = quantum_322(e), cl = c6(e);
    worst = std::max(worst, std::abs(q - cl));
    o.info("eps %.2f: quantum %.6f, classical(D=6) %.6f", e, q, cl);
  }
  o.check(worst <= 1e-3, "quantum and classical within 1e-3 on [0.32, 0.34] (max diff %.1e)", worst);

  const double q33 = quantum_322(0.33);
  const double top = cmd::crossing(quantum_322, 5 - 1e-6, 0.33, 0.40, 1e-3);
  o.check(q33 < 5 - 1e-5 && top > 0.33 && top <= 0.36,
          "quantum bound %.6f at 0.33, reaches 5 at eps = %.3f", q33, top);
  return o;
}

Outcome rac() {
  Outcome o;
  auto p = build_rac();
  const auto qmono = default_monomials(p.scenario, 2);
  const auto cmono = classical_monomials(p.scenario, 4, 2);
  o.check(qmono.size() == 77, "quantum monomial list size %zu", qmono.size());
  o.check(cmono.size() == 61, "classical monomial list size %zu", cmono.size());

  const auto r = cmd::bound(p, {2, 2, 1, 20});
  o.check(std::abs(r.lower - rac_ideal) <= 1e-5 && std::abs(r.upper - rac_ideal) <= 1e-5,
          "ideal value: lower %.8f, upper %.8f vs %.8f", r.lower, r.upper, rac_ideal);

  ClassicalCurve c4(p, 4);
  const double x = cmd::crossing(c4, rac_ideal, 0.035, 0.055, 1e-3);
  o.check(std::abs(x - 0.045) <= 0.005, "D=4: classical bound crosses the quantum value at eps = %.4f", x);
  return o;
}

Outcome detection_efficiency() {
  Outcome o;
  const double a = eta_model_bound(5 * std::numbers::pi / 6, 0.99, std::numbers::pi / 180, 1.0);
  const double b = eta_model_bound(5 * std::numbers::pi / 6, 0.9, 10 * std::numbers::pi / 180, 1.0);
  o.check(std::abs(a - 0.963) <= 0.001, "v = 0.99, delta = 1 deg: eta >= %.5f eta_true (expected 0.963)", a);
  o.check(std::abs(b - 0.855) <= 0.001, "v = 0.9, delta = 10 deg: eta >= %.5f eta_true (expected 0.855)", b);
  return o;
}

Outcome randomness_anchor() {
  Outcome o;
  const double w_obs = 3.7815;
  const double eps = white_noise_to_eps(witness_to_visibility(w_obs, w322_ideal));
  const auto p = build_322(eps);
  const GuessingRelaxation rel(p.scenario, p.functional, default_monomials(p.scenario, 2), 3, RandomnessOptions{});
  const auto env = guessing_envelope(rel, 0, 0, p.scenario.epsilons, 41);
  const auto r = certify_randomness(rel, env, 0, 0, w_obs, p.scenario.epsilons);
  o.check(r.feasible && std::abs(r.hmin_bits - 0.052) <= 0.005, "eps = %.5f, w = %.4f: H_min = %.5f bits", eps, w_obs,
          r.hmin_bits);

  cmd::Source src;
  src.preset = "322";
  cmd::RandomnessRequest req;
  req.eps_grid = cmd::parse_grid("0:0.045:10");
  req.w_ideal = w322_ideal;
  req.dim = 3;
  const auto rows = cmd::randomness(cmd::load(src), req);
  bool ordered = true, feasible = true;
  o.info("eps      H(k=1)    H(0.99)   H(0.97)");
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    const auto &a = rows[i], &b = rows[i + 1], &c = rows[i + 2];
    feasible = feasible && a.feasible && b.feasible && c.feasible;
    ordered = ordered && a.hmin_bits >= b.hmin_bits - 1e-6 && b.hmin_bits >= c.hmin_bits - 1e-6;
    o.info("%.4f   %.5f   %.5f   %.5f", a.epsilon, a.hmin_bits, b.hmin_bits, c.hmin_bits);
  }
  o.check(feasible && ordered, "curve ordering k = 1 >= 0.99 >= 0.97 at every grid eps");
  return o;
}

Outcome critical_distrust() {
  Outcome o;
  Rng rng = make_stream(71, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int n : {2, 3, 4}) {
    ComplexVector z = ComplexVector::Zero(n);
    z(0) = 1.0;
    double fid_err = 0;
    for (const auto& s : fourier_states(n)) fid_err = std::max(fid_err, std::abs(std::norm(s.amplitudes().dot(z)) - 1.0 / n));
    const Scenario scn(n, 2, 2, std::vector<PureState>(static_cast<std::size_t>(n), PureState(z)),
                       std::vector<double>(static_cast<std::size_t>(n), (n - 1.0) / n));
    Functional f(2, n, 2);
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < 2; ++y) f(b, x, y) = unif(rng);
    const auto r = classical_lower_bound(scn, f, n, 2, 3);
    o.check(fid_err <= 1e-12 && std::abs(r.value - f.algebraic_max()) <= 1e-7,
            "n = %d: fidelity error %.1e, classical value %.9f vs algebraic max %.9f", n, fid_err, r.value,
            f.algebraic_max());
  }
  return o;
}

Outcome dimension_study(bool long_run) {
  Outcome o;
  const auto report = [&](const std::vector<cmd::StudyRow>& rows) {
    for (const auto& r : rows)
      o.check(r.max_discrepancy <= 5e-5, "(%d,%d,%d), %d cases: max |value(2n) - value(n)| = %.2e, resampled %d",
              r.shape.n, r.shape.m, r.shape.k, r.cases, r.max_discrepancy, r.resampled);
  };
  report(cmd::dimension_study({{2, 1, 2}, {2, 1, 3}, {3, 2, 2}}, 100, 1));
  if (long_run) report(cmd::dimension_study({{4, 2, 2}, {5, 4, 2}}, 20, 1));
  else o.info("(4,2,2) and (5,4,2) skipped; pass --long to run them");
  return o;
}

// Random SDP with a planted primal-dual optimal pair.
sdp::SdpProblem planted_sdp(int d, int m, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  const ComplexMatrix u = detail::haar_unitary(d, rng);
  Eigen::VectorXd xe = Eigen::VectorXd::Zero(d), ze = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) (i < d / 2 ? xe(i) : ze(i)) = unif(rng);
  const ComplexMatrix xs = u * xe.cast<cplx>().asDiagonal() * u.adjoint();
  ComplexMatrix c = -u * ze.cast<cplx>().asDiagonal() * u.adjoint();
  sdp::SdpProblem prob;
  const int blk = prob.add_block(d, sdp::Field::complex);
  for (int i = 0; i < m; ++i) {
    ComplexMatrix a(d, d);
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) a(r, s) = cplx(g(rng), g(rng));
    a = 0.5 * (a + a.adjoint()).eval();
    c += g(rng) * a;
    prob.add_equality({{{blk, a}}, (a * xs).trace().real()});
  }
  prob.set_objective(blk, 0.5 * (c + c.adjoint()));
  return prob;
}

Outcome properties() {
  Outcome o;
  {
    Rng rng = make_stream(91, 0);
    double worst = 0;
    bool solved = true;
    for (int t = 0; t < 50; ++t) {
      const auto sol = sdp::solve(planted_sdp(2 + t % 5, 1 + t % 7, rng));
      solved = solved && sol.status == sdp::Status::optimal;
      worst = std::max(worst, std::max(0.0, sol.value - sol.dual_value) / (1 + std::abs(sol.value)));
      worst = std::max(worst, std::abs(sol.gap) / (1 + std::abs(sol.value)));
    }
    o.check(solved && worst <= 1e-7, "SDP weak duality on 50 random feasible instances (max relative gap %.1e)", worst);
  }
  {
    auto p = build_322(0.1);
    bool mono = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = seesaw(p.scenario, p.functional, 3, seed);
      for (std::size_t i = 1; i < r.trace.size(); ++i) mono = mono && r.trace[i] >= r.trace[i - 1] - 1e-9;
    }
    o.check(mono, "seesaw values non-decreasing along iterations (5 seeds)");
  }
  {
    auto p = build_322(0.1);
    const auto l = default_monomials(p.scenario, 2);
    Rng rng = make_stream(92, 0);
    const RankProfile prof{{{1, 2}, {2, 1}}};
    double herm = 0, eig = 0, id = 0;
    for (int i = 0; i < 100; ++i) {
      const ComplexMatrix g = sample_moment_matrix(p.scenario, l, prof, 3, rng);
      herm = std::max(herm, detail::hermiticity_defect(g));
      eig = std::min(eig, detail::min_eigenvalue(g));
      id = std::max(id, std::abs(g(0, 0) - cplx(3.0)));
    }
    o.check(herm <= 1e-10 && eig >= -1e-8 && id == 0.0,
            "100 moment matrices: Hermiticity defect %.1e, min eigenvalue %.1e, identity entry error %.1e", herm, eig,
            id);
  }
  {
    bool same = true;
    double diff = 0;
    for (int d : {2, 3}) {
      std::set<std::vector<std::vector<int>>> raw, canon;
      for (const auto& s : enumerate_raw_strategies(1, d, 2)) raw.insert(s.canonical_key());
      for (const auto& s : enumerate_strategies(1, d, 2)) canon.insert(s.canonical_key());
      same = same && raw == canon;
      auto p = build_sd(1.2, 0.05);
      Rng rng = make_stream(93, 0);
      const auto basis = classical_basis(p.scenario, classical_monomials(p.scenario, d, 2), d, rng);
      const auto best = [&](const std::vector<DeterministicStrategy>& list) {
        double v = -1e300;
        for (const auto& s : list) {
          const auto r = solve_relaxation(basis, strategy_form(basis.monomials, p.functional, s), p.scenario.epsilons);
          if (r.status == sdp::Status::optimal) v = std::max(v, r.value);
        }
        return v;
      };
      diff = std::max(diff, std::abs(best(enumerate_strategies(1, d, 2)) - best(enumerate_raw_strategies(1, d, 2))));
    }
    o.check(same && diff <= 1e-7, "deduplicated strategies cover the raw enumeration at m = 1, D <= 3 (value diff %.1e)",
            diff);
  }
  {
    Rng rng = make_stream(94, 0);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const auto a = random_pure_state(2, rng), b = random_pure_state(2, rng);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.projector() - b.projector());
      const double overlap = std::norm(a.amplitudes().dot(b.amplitudes()));
      worst = std::max(worst, std::abs(es.eigenvalues()(1) - std::sqrt(1 - overlap)));
    }
    o.check(worst <= 1e-10, "lambda_max(phi1 - phi2) = sqrt(1 - |<phi1|phi2>|^2) on 100 pairs (max error %.1e)", worst);
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool long_run = false;
  std::vector<int> only;
  app.add_flag("--long", long_run, "Include the (4,2,2) and (5,4,2) dimension studies");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"discrimination closed form vs numerics", discrimination_grid},
      {"W_322 ideal quantum value", w322_ideal_value},
      {"W_322 classical and quantum thresholds", w322_thresholds},
      {"random access code", rac},
      {"detection efficiency", detection_efficiency},
      {"randomness anchor and curve ordering", randomness_anchor},
      {"critical distrust (n-1)/n", critical_distrust},
      {"dimension n versus 2n", [long_run] { return dimension_study(long_run); }},
      {"property suites", properties},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, "exception: %s", e.what());
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, seconds_since(t0));
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return failed;
}
