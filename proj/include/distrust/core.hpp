#pragma once

// Scenario data model and finite-dimensional operator algebra for
// prepare-and-measure experiments with bounded preparation distrust.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace distrust {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// The single source of randomness. Never shared between workers.
using Rng = std::mt19937_64;

/// Derives an independent generator for sub-task `index` of a run seeded
/// with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return Rng(seq);
}

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvariantError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace tol {
inline constexpr double state_norm = 1e-12;
inline constexpr double hermitian = 1e-10;
inline constexpr double psd = 1e-9;
inline constexpr double completeness = 1e-9;
inline constexpr double projector = 1e-9;
inline constexpr double trace = 1e-10;
inline constexpr double fidelity_floor = 1e-8;
inline constexpr double imag_prob = 1e-10;
}  // namespace tol

namespace detail {

inline double hermiticity_defect(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const ComplexMatrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Rotates v so that its first entry with modulus above the noise floor is
// real and positive.
inline void fix_phase(ComplexVector& v) {
  const double floor = 1e-14 * std::max(1.0, v.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > floor) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = cplx(v(i).real(), 0.0);
      return;
    }
  }
}

inline ComplexMatrix haar_unitary(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) g(r, c) = cplx(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& rr = qr.matrixQR();
  for (int c = 0; c < dim; ++c) {
    const cplx d = rr(c, c);
    const double a = std::abs(d);
    if (a > 0) q.col(c) *= d / a;
  }
  return q;
}

}  // namespace detail

/// Normalised vector in C^dim under the global-phase convention (first
/// nonzero amplitude real and positive).
class PureState {
 public:
  explicit PureState(ComplexVector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 1) throw DimensionError("PureState: dimension must be positive");
    if (std::abs(amps_.norm() - 1.0) > tol::state_norm)
      throw InvariantError("PureState: amplitudes are not normalised");
    detail::fix_phase(amps_);
  }

  /// Normalises the given amplitudes first.
  static PureState normalized(ComplexVector amplitudes) {
    const double nrm = amplitudes.norm();
    if (!(nrm > 0)) throw InvariantError("PureState: zero vector");
    return PureState(amplitudes / nrm);
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const ComplexVector& amplitudes() const { return amps_; }

  /// Zero-padded copy in dimension `d` >= dim().
  ComplexVector padded(int d) const {
    if (d < dim()) throw DimensionError("PureState: cannot embed into a smaller space");
    ComplexVector v = ComplexVector::Zero(d);
    v.head(dim()) = amps_;
    return v;
  }

  ComplexMatrix projector(int d) const {
    const ComplexVector v = padded(d);
    return v * v.adjoint();
  }

  ComplexMatrix projector() const { return projector(dim()); }

  /// True when some global phase makes every amplitude real.
  bool is_real(double eps = 1e-12) const { return amps_.imag().cwiseAbs().maxCoeff() <= eps; }

 private:
  ComplexVector amps_;
};

enum class MeasurementKind { povm, projective };

/// A k-outcome measurement given by its effect operators.
class Measurement {
 public:
  Measurement(std::vector<ComplexMatrix> effects, MeasurementKind kind)
      : effects_(std::move(effects)), kind_(kind) {
    validate();
  }

  int outcomes() const { return static_cast<int>(effects_.size()); }
  int dim() const { return effects_.empty() ? 0 : static_cast<int>(effects_.front().rows()); }
  MeasurementKind kind() const { return kind_; }
  const ComplexMatrix& effect(int b) const { return effects_.at(static_cast<std::size_t>(b)); }
  const std::vector<ComplexMatrix>& effects() const { return effects_; }

 private:
  void validate() const {
    if (effects_.empty()) throw InvariantError("Measurement: no effects");
    const auto d = effects_.front().rows();
    ComplexMatrix total = ComplexMatrix::Zero(d, d);
    for (const auto& e : effects_) {
      if (e.rows() != d || e.cols() != d) throw DimensionError("Measurement: effect dimensions differ");
      if (detail::hermiticity_defect(e) > tol::hermitian)
        throw InvariantError("Measurement: effect is not Hermitian");
      if (detail::min_eigenvalue(e) < -tol::psd)
        throw InvariantError("Measurement: effect is not positive semidefinite");
      total += e;
    }
    if ((total - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol::completeness)
      throw InvariantError("Measurement: effects do not sum to the identity");
    if (kind_ == MeasurementKind::projective) {
      for (std::size_t i = 0; i < effects_.size(); ++i) {
        const auto& e = effects_[i];
        if ((e * e - e).norm() > tol::projector) throw InvariantError("Measurement: effect is not a projector");
        for (std::size_t j = i + 1; j < effects_.size(); ++j)
          if ((e * effects_[j]).norm() > tol::projector)
            throw InvariantError("Measurement: projective effects are not orthogonal");
      }
    }
  }

  std::vector<ComplexMatrix> effects_;
  MeasurementKind kind_;
};

/// Dense real array indexed (b, x, y) with b fastest-varying last; used both
/// for correlation tables p(b|x,y) and functional coefficients.
class Table3 {
 public:
  Table3() = default;
  Table3(int k, int n, int m, double fill = 0.0)
      : k_(k), n_(n), m_(m), data_(static_cast<std::size_t>(k) * n * m, fill) {
    if (k < 1 || n < 1 || m < 1) throw DimensionError("Table3: all extents must be positive");
  }

  int k() const { return k_; }
  int n() const { return n_; }
  int m() const { return m_; }

  double& operator()(int b, int x, int y) { return data_[index(b, x, y)]; }
  double operator()(int b, int x, int y) const { return data_[index(b, x, y)]; }

  bool same_shape(const Table3& o) const { return k_ == o.k_ && n_ == o.n_ && m_ == o.m_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t index(int b, int x, int y) const {
    return (static_cast<std::size_t>(b) * n_ + x) * m_ + y;
  }
  int k_ = 0, n_ = 0, m_ = 0;
  std::vector<double> data_;
};

using CorrelationTable = Table3;

/// Linear witness W = sum c_{bxy} p(b|x,y).
class Functional {
 public:
  Functional() = default;
  explicit Functional(Table3 coefficients) : c_(std::move(coefficients)) {}
  Functional(int k, int n, int m) : c_(k, n, m) {}

  int k() const { return c_.k(); }
  int n() const { return c_.n(); }
  int m() const { return c_.m(); }
  double operator()(int b, int x, int y) const { return c_(b, x, y); }
  double& operator()(int b, int x, int y) { return c_(b, x, y); }
  const Table3& coefficients() const { return c_; }

  /// Largest value over all correlation tables: sum over (x,y) of max_b c.
  double algebraic_max() const {
    double s = 0;
    for (int x = 0; x < n(); ++x)
      for (int y = 0; y < m(); ++y) {
        double best = c_(0, x, y);
        for (int b = 1; b < k(); ++b) best = std::max(best, c_(b, x, y));
        s += best;
      }
    return s;
  }

  double algebraic_min() const {
    double s = 0;
    for (int x = 0; x < n(); ++x)
      for (int y = 0; y < m(); ++y) {
        double worst = c_(0, x, y);
        for (int b = 1; b < k(); ++b) worst = std::min(worst, c_(b, x, y));
        s += worst;
      }
    return s;
  }

  Functional scaled(double s) const {
    Functional f(*this);
    for (int b = 0; b < k(); ++b)
      for (int x = 0; x < n(); ++x)
        for (int y = 0; y < m(); ++y) f(b, x, y) *= s;
    return f;
  }

 private:
  Table3 c_;
};

/// Inputs/outputs counts, target states and distrust parameters.
struct Scenario {
  int n = 0;
  int m = 0;
  int k = 0;
  std::vector<PureState> targets;
  std::vector<double> epsilons;

  Scenario() = default;
  Scenario(int n_, int m_, int k_, std::vector<PureState> targets_, std::vector<double> epsilons_)
      : n(n_), m(m_), k(k_), targets(std::move(targets_)), epsilons(std::move(epsilons_)) {
    validate();
  }

  void validate() const {
    if (n < 1 || m < 1 || k < 1) throw DimensionError("Scenario: n, m, k must be positive");
    if (static_cast<int>(targets.size()) != n) throw DimensionError("Scenario: need n target states");
    if (static_cast<int>(epsilons.size()) != n) throw DimensionError("Scenario: need n distrust values");
    const int d = targets.front().dim();
    for (const auto& t : targets)
      if (t.dim() != d) throw DimensionError("Scenario: targets must share one dimension");
    if (d > n) throw DimensionError("Scenario: target dimension exceeds n");
    for (double e : epsilons)
      if (!(e >= 0.0 && e <= 1.0)) throw InvariantError("Scenario: distrust outside [0,1]");
  }

  int target_dim() const { return targets.front().dim(); }

  bool real_targets() const {
    for (const auto& t : targets)
      if (!t.is_real()) return false;
    return true;
  }

  Scenario with_epsilon(double eps) const {
    Scenario s = *this;
    s.epsilons.assign(static_cast<std::size_t>(n), eps);
    s.validate();
    return s;
  }

  Scenario with_epsilons(std::vector<double> eps) const {
    Scenario s = *this;
    s.epsilons = std::move(eps);
    s.validate();
    return s;
  }

  bool matches(const Functional& f) const { return f.k() == k && f.n() == n && f.m() == m; }
};

/// States rho_x and measurements {M_{b|y}} acting on a common space of
/// dimension D.
class Realization {
 public:
  Realization(std::vector<ComplexMatrix> states, std::vector<Measurement> measurements)
      : states_(std::move(states)), measurements_(std::move(measurements)) {
    validate();
  }

  int dim() const { return static_cast<int>(states_.front().rows()); }
  int n() const { return static_cast<int>(states_.size()); }
  int m() const { return static_cast<int>(measurements_.size()); }
  const std::vector<ComplexMatrix>& states() const { return states_; }
  const std::vector<Measurement>& measurements() const { return measurements_; }
  const ComplexMatrix& state(int x) const { return states_.at(static_cast<std::size_t>(x)); }
  const Measurement& measurement(int y) const { return measurements_.at(static_cast<std::size_t>(y)); }

  /// Checks the fidelity floors of `scn` (targets zero-padded to dim()).
  void check_against(const Scenario& scn) const;

 private:
  void validate() const {
    if (states_.empty() || measurements_.empty()) throw DimensionError("Realization: empty");
    const auto d = states_.front().rows();
    for (const auto& s : states_) {
      if (s.rows() != d || s.cols() != d) throw DimensionError("Realization: state dimensions differ");
      if (detail::hermiticity_defect(s) > tol::hermitian) throw InvariantError("Realization: state not Hermitian");
      if (std::abs(s.trace().real() - 1.0) > tol::trace) throw InvariantError("Realization: state trace is not 1");
      if (detail::min_eigenvalue(s) < -tol::psd) throw InvariantError("Realization: state not PSD");
    }
    for (const auto& mm : measurements_)
      if (mm.dim() != d) throw DimensionError("Realization: measurement dimension differs from states");
  }

  std::vector<ComplexMatrix> states_;
  std::vector<Measurement> measurements_;
};

/// <psi|rho|psi> with the target zero-padded to the state dimension.
inline double fidelity(const ComplexMatrix& state, const PureState& target) {
  if (state.rows() != state.cols()) throw DimensionError("fidelity: state is not square");
  const ComplexVector v = target.padded(static_cast<int>(state.rows()));
  return (v.adjoint() * state * v)(0, 0).real();
}

inline void Realization::check_against(const Scenario& scn) const {
  if (n() != scn.n || m() != scn.m) throw DimensionError("Realization: shape differs from scenario");
  for (const auto& mm : measurements_)
    if (mm.outcomes() != scn.k) throw DimensionError("Realization: outcome count differs from scenario");
  for (int x = 0; x < n(); ++x)
    if (fidelity(state(x), scn.targets[static_cast<std::size_t>(x)]) <
        1.0 - scn.epsilons[static_cast<std::size_t>(x)] - tol::fidelity_floor)
      throw InvariantError("Realization: fidelity floor violated for x=" + std::to_string(x));
}

/// p(b|x,y) = Tr(rho_x M_{b|y}).
inline CorrelationTable born_table(const Realization& real) {
  const int k = real.measurement(0).outcomes();
  for (const auto& mm : real.measurements())
    if (mm.outcomes() != k) throw DimensionError("born_table: measurements differ in outcome count");
  CorrelationTable p(k, real.n(), real.m());
  for (int x = 0; x < real.n(); ++x)
    for (int y = 0; y < real.m(); ++y)
      for (int b = 0; b < k; ++b) {
        const cplx t = (real.state(x) * real.measurement(y).effect(b)).trace();
        if (std::abs(t.imag()) > tol::imag_prob)
          throw InvariantError("born_table: probability has an imaginary part");
        p(b, x, y) = t.real();
      }
  return p;
}

/// W = sum_{bxy} c_{bxy} p(b|x,y).
inline double functional_value(const Functional& f, const CorrelationTable& p) {
  if (!f.coefficients().same_shape(p)) throw DimensionError("functional_value: shape mismatch");
  double w = 0;
  for (int b = 0; b < p.k(); ++b)
    for (int x = 0; x < p.n(); ++x)
      for (int y = 0; y < p.m(); ++y) w += f(b, x, y) * p(b, x, y);
  return w;
}

/// Haar-random unit vector (normalised complex Gaussian).
inline PureState random_pure_state(int dim, Rng& rng) {
  if (dim < 1) throw DimensionError("random_pure_state: dim must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  return PureState::normalized(v);
}

/// Projectors onto consecutive column blocks of a Haar unitary; block sizes
/// are `ranks` (zero ranks give zero effects).
inline Measurement random_projective_measurement(int dim, const std::vector<int>& ranks, Rng& rng) {
  int total = 0;
  for (int r : ranks) {
    if (r < 0) throw InvariantError("random_projective_measurement: negative rank");
    total += r;
  }
  if (total != dim || ranks.empty())
    throw InvariantError("random_projective_measurement: ranks must sum to dim");
  const ComplexMatrix u = detail::haar_unitary(dim, rng);
  std::vector<ComplexMatrix> effects;
  effects.reserve(ranks.size());
  int col = 0;
  for (int r : ranks) {
    if (r == 0) {
      effects.push_back(ComplexMatrix::Zero(dim, dim));
      continue;
    }
    const auto block = u.middleCols(col, r);
    effects.push_back(block * block.adjoint());
    col += r;
  }
  return Measurement(std::move(effects), MeasurementKind::projective);
}

/// Fourier basis of C^n: amplitudes exp(2 pi i j x / n)/sqrt(n).
inline std::vector<PureState> fourier_states(int n) {
  if (n < 1) throw DimensionError("fourier_states: n must be positive");
  std::vector<PureState> out;
  out.reserve(static_cast<std::size_t>(n));
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int x = 0; x < n; ++x) {
    ComplexVector v(n);
    for (int j = 0; j < n; ++j)
      v(j) = std::polar(norm, 2.0 * std::numbers::pi * j * x / n);
    out.emplace_back(v);
  }
  return out;
}

/// Pure qubit whose Bloch vector is `vec`.
inline PureState bloch_to_state(const Eigen::Vector3d& vec) {
  if (std::abs(vec.norm() - 1.0) > 1e-9) throw InvariantError("bloch_to_state: not a unit vector");
  const double theta = std::acos(std::clamp(vec.z(), -1.0, 1.0));
  const double phi = std::atan2(vec.y(), vec.x());
  ComplexVector v(2);
  v(0) = std::cos(theta / 2);
  v(1) = std::polar(std::sin(theta / 2), phi);
  return PureState::normalized(v);
}

/// Rank-1 projective measurement onto the columns of a unitary `basis`.
inline Measurement basis_measurement(const ComplexMatrix& basis) {
  std::vector<ComplexMatrix> effects;
  for (Eigen::Index c = 0; c < basis.cols(); ++c) effects.push_back(basis.col(c) * basis.col(c).adjoint());
  return Measurement(std::move(effects), MeasurementKind::projective);
}

/// Two-outcome measurement {P, I - P} with P the projector onto the strictly
/// positive eigenspace of the Hermitian matrix `a`.
inline Measurement positive_part_measurement(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("positive_part_measurement: matrix is not square");
  const int d = static_cast<int>(a.rows());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (a + a.adjoint()));
  const double cut = 1e-13 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  ComplexMatrix p = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    if (es.eigenvalues()(i) > cut) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return Measurement({p, ComplexMatrix::Identity(d, d) - p}, MeasurementKind::projective);
}

}  // namespace distrust
