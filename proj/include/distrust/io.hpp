#pragma once

// JSON for scenarios, functionals and realizations. Complex numbers are
// [re, im] pairs; coefficients are dense [b][x][y] arrays.

#include "distrust/core.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace distrust {

using Json = nlohmann::json;

/// Malformed or inconsistent input documents.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io {

inline Json complex_to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json vector_to_json(const ComplexVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline ComplexVector vector_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a nonempty array of [re, im] pairs");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline ComplexMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("expected a matrix of [re, im] pairs");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace io

inline Json to_json(const Scenario& scn, const Functional& f) {
  Json j;
  j["n"] = scn.n;
  j["m"] = scn.m;
  j["k"] = scn.k;
  j["targets"] = Json::array();
  for (const auto& t : scn.targets) j["targets"].push_back(io::vector_to_json(t.amplitudes()));
  j["epsilons"] = scn.epsilons;
  Json c = Json::array();
  for (int b = 0; b < f.k(); ++b) {
    Json bx = Json::array();
    for (int x = 0; x < f.n(); ++x) {
      Json xy = Json::array();
      for (int y = 0; y < f.m(); ++y) xy.push_back(f(b, x, y));
      bx.push_back(std::move(xy));
    }
    c.push_back(std::move(bx));
  }
  j["coefficients"] = std::move(c);
  return j;
}

/// Parses a scenario document; the functional is required.
inline std::pair<Scenario, Functional> scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario document must be an object");
  const int n = io::field<int>(j, "n"), m = io::field<int>(j, "m"), k = io::field<int>(j, "k");
  if (!j.contains("targets") || !j["targets"].is_array()) throw ConfigError("missing field 'targets'");
  // Rounded decimal input is renormalised; anything further off is an error.
  std::vector<PureState> targets;
  for (const auto& t : j["targets"]) {
    const ComplexVector v = io::vector_from_json(t);
    if (std::abs(v.norm() - 1.0) > 1e-6) throw ConfigError("targets: amplitudes are not normalised");
    targets.push_back(std::abs(v.norm() - 1.0) > tol::state_norm ? PureState::normalized(v) : PureState(v));
  }
  const auto eps = io::field<std::vector<double>>(j, "epsilons");
  const auto coef = io::field<std::vector<std::vector<std::vector<double>>>>(j, "coefficients");
  Scenario scn;
  try {
    scn = Scenario(n, m, k, std::move(targets), eps);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (static_cast<int>(coef.size()) != k) throw ConfigError("coefficients: first extent must be k");
  Functional f(k, n, m);
  for (int b = 0; b < k; ++b) {
    if (static_cast<int>(coef[static_cast<std::size_t>(b)].size()) != n) throw ConfigError("coefficients: second extent must be n");
    for (int x = 0; x < n; ++x) {
      const auto& row = coef[static_cast<std::size_t>(b)][static_cast<std::size_t>(x)];
      if (static_cast<int>(row.size()) != m) throw ConfigError("coefficients: third extent must be m");
      for (int y = 0; y < m; ++y) f(b, x, y) = row[static_cast<std::size_t>(y)];
    }
  }
  return {std::move(scn), std::move(f)};
}

inline Json to_json(const Realization& r) {
  Json j;
  j["dimension"] = r.dim();
  j["states"] = Json::array();
  for (const auto& s : r.states()) j["states"].push_back(io::matrix_to_json(s));
  j["measurements"] = Json::array();
  for (const auto& m : r.measurements()) {
    Json mj;
    mj["kind"] = m.kind() == MeasurementKind::projective ? "projective" : "povm";
    mj["effects"] = Json::array();
    for (const auto& e : m.effects()) mj["effects"].push_back(io::matrix_to_json(e));
    j["measurements"].push_back(std::move(mj));
  }
  return j;
}

inline Realization realization_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("states") || !j.contains("measurements"))
    throw ConfigError("realization document needs 'states' and 'measurements'");
  std::vector<ComplexMatrix> states;
  for (const auto& s : j["states"]) states.push_back(io::matrix_from_json(s));
  std::vector<Measurement> meas;
  try {
    for (const auto& mj : j["measurements"]) {
      std::vector<ComplexMatrix> eff;
      for (const auto& e : mj.at("effects")) eff.push_back(io::matrix_from_json(e));
      const auto kind = mj.value("kind", std::string("povm")) == "projective" ? MeasurementKind::projective
                                                                               : MeasurementKind::povm;
      meas.emplace_back(std::move(eff), kind);
    }
    return Realization(std::move(states), std::move(meas));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("realization: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace distrust
