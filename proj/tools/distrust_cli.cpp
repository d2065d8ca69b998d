#include "distrust/commands.hpp"
#include "distrust/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

using namespace distrust;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

void add_source(CLI::App* sub, cmd::Source& src, bool with_eps) {
  sub->add_option("--preset", src.preset, "Named scenario: sd, 322 or rac");
  sub->add_option("--scenario", src.file, "Scenario JSON file");
  sub->add_option("--theta", src.theta, "Angle between the sd targets (radians)");
  if (with_eps) sub->add_option("--eps", src.eps, "Distrust applied to every input");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::vector<double> parse_triple(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + text + "'");
  }
  if (v.size() != 3) throw ConfigError("--model expects v,delta_degrees,eta_true");
  return v;
}

std::vector<cmd::StudyScenario> parse_shapes(const std::string& text) {
  std::vector<cmd::StudyScenario> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    int n = 0, m = 0, k = 0;
    char c1 = 0, c2 = 0;
    std::stringstream is(item);
    if (!(is >> n >> c1 >> m >> c2 >> k) || c1 != ',' || c2 != ',' || n < 1 || m < 1 || k < 1)
      throw ConfigError("scenario shapes look like 2,1,2;3,2,2");
    out.push_back({n, m, k});
  }
  if (out.empty()) throw ConfigError("no scenario shapes given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounds on prepare-and-measure correlations under bounded distrust"};
  app.require_subcommand(1);
  int threads = 0;
  std::uint64_t seed = 1;
  app.add_option("--threads", threads, "Worker threads (default: DISTRUST_THREADS or all cores)");
  app.add_option("--seed", seed, "Random seed");

  // bound
  cmd::Source bsrc;
  std::string bdim = "n", bout;
  int blevel = 2, brestarts = 20;
  auto* bnd = app.add_subcommand("bound", "Seesaw lower bound and relaxation upper bound");
  add_source(bnd, bsrc, true);
  bnd->add_option("--dim", bdim, "Working dimension: n, 2n or an integer");
  bnd->add_option("--level", blevel, "Monomial level (1 or 2)");
  bnd->add_option("--restarts", brestarts, "Seesaw restarts");
  bnd->add_option("--realization", bout, "Write the best realization as JSON");

  // classical
  cmd::Source csrc;
  std::string cgrid = "0:0.35:15", cdim = "n", cout_path;
  int clevel = 2;
  bool clower = false, cquantum = false;
  auto* cls = app.add_subcommand("classical", "Classical-measurement bounds versus distrust (CSV)");
  add_source(cls, csrc, false);
  cls->add_option("--eps-grid", cgrid, "Comma list or start:stop:count");
  cls->add_option("--dim", cdim, "Basis size: n, 2n or an integer");
  cls->add_option("--level", clevel, "Monomial level (1 or 2)");
  cls->add_flag("--lower", clower, "Also report the heuristic lower bound");
  cls->add_flag("--quantum", cquantum, "Also report the quantum upper bound at dimension n");
  cls->add_option("--out", cout_path, "CSV file (default stdout)");

  // randomness
  cmd::Source rsrc;
  std::string rgrid = "0:0.05:10", rrule = "1,0.99,0.97", rdim = "n", rout;
  int xstar = 0, ystar = 0, rlevel = 2, rpoints = 41;
  std::optional<double> w_ideal;
  auto* rnd = app.add_subcommand("randomness", "Certified min-entropy versus distrust (CSV)");
  add_source(rnd, rsrc, false);
  rnd->add_option("--xstar", xstar, "Preparation used for extraction (0-based)");
  rnd->add_option("--ystar", ystar, "Measurement used for extraction (0-based)");
  rnd->add_option("--eps-grid", rgrid, "Comma list or start:stop:count");
  rnd->add_option("--w-rule", rrule, "Fractions of the ideal value, or 'optimal'");
  rnd->add_option("--w-ideal", w_ideal, "Ideal witness value (default: relaxation maximum at eps = 0)");
  rnd->add_option("--dim", rdim, "Working dimension: n, 2n or an integer");
  rnd->add_option("--level", rlevel, "Monomial level (1 or 2)");
  rnd->add_option("--grid-points", rpoints, "Points in the hull grid");
  rnd->add_option("--out", rout, "CSV file (default stdout)");

  // dimension-study
  std::string shapes = "2,1,2;2,1,3;3,2,2";
  int cases = 100, srestarts = 20;
  auto* dst = app.add_subcommand("dimension-study", "Seesaw at dimension n versus 2n on random cases");
  dst->add_option("--scenarios", shapes, "Shapes n,m,k separated by ';'");
  dst->add_option("--cases", cases, "Random cases per shape");
  dst->add_option("--restarts", srestarts, "Seesaw restarts per case");

  // certify-eta
  double etheta = 5 * std::numbers::pi / 6, eeps = 0.0;
  std::optional<double> w_obs;
  std::string model;
  auto* eta = app.add_subcommand("certify-eta", "Detection-efficiency bounds");
  eta->add_option("--theta", etheta, "Angle between the targets (radians)");
  eta->add_option("--eps", eeps, "Distrust");
  eta->add_option("--w-obs", w_obs, "Observed success probability");
  eta->add_option("--model", model, "Noise model v,delta_degrees,eta_true");

  // discriminate
  double dtheta = std::numbers::pi / 2, deps = 0.0;
  int drestarts = 10;
  auto* dis = app.add_subcommand("discriminate", "Two-state discrimination: closed form against numerics");
  dis->add_option("--theta", dtheta, "Angle between the targets (radians)");
  dis->add_option("--eps", deps, "Distrust");
  dis->add_option("--restarts", drestarts, "Seesaw restarts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    set_thread_count(threads);
    if (bnd->parsed()) {
      const auto p = cmd::load(bsrc);
      cmd::BoundRequest req{cmd::parse_dim(bdim, p.scenario.n), blevel, seed, brestarts};
      const auto r = cmd::bound(p, req);
      std::cout << "lower " << fmt(r.lower) << "\nupper " << fmt(r.upper) << "\ngap " << fmt(r.gap) << "\nprofiles "
                << r.profiles << "\nfailed_profiles " << r.failures << '\n';
      if (r.warning) std::cerr << "warning: some seesaw restarts failed\n";
      if (!bout.empty()) write_json_file(bout, to_json(r.realization));
    } else if (cls->parsed()) {
      const auto p = cmd::load(csrc);
      cmd::ClassicalRequest req;
      req.eps_grid = cmd::parse_grid(cgrid);
      req.dim = cmd::parse_dim(cdim, p.scenario.n);
      req.level = clevel;
      req.seed = seed;
      req.lower = clower;
      req.quantum = cquantum;
      std::ostringstream csv;
      csv << "epsilon,classical_upper" << (clower ? ",classical_lower" : "") << (cquantum ? ",quantum_upper" : "")
          << '\n';
      for (const auto& row : cmd::classical(p, req)) {
        csv << fmt(row.epsilon) << ',' << fmt(row.upper);
        if (row.lower) csv << ',' << fmt(*row.lower);
        if (row.quantum) csv << ',' << fmt(*row.quantum);
        csv << '\n';
      }
      emit(cout_path, csv.str());
    } else if (rnd->parsed()) {
      const auto p = cmd::load(rsrc);
      cmd::RandomnessRequest req;
      req.xstar = xstar;
      req.ystar = ystar;
      req.eps_grid = cmd::parse_grid(rgrid);
      req.dim = cmd::parse_dim(rdim, p.scenario.n);
      req.level = rlevel;
      req.seed = seed;
      req.grid_points = rpoints;
      req.w_ideal = w_ideal;
      if (rrule == "optimal") {
        req.optimal = true;
      } else {
        req.factors.clear();
        std::stringstream ss(rrule);
        std::string item;
        try {
          while (std::getline(ss, item, ',')) req.factors.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw ConfigError("cannot parse --w-rule '" + rrule + "'");
        }
      }
      std::ostringstream csv;
      csv << "epsilon,w,g_raw,g_hull,hmin_bits\n";
      for (const auto& row : cmd::randomness(p, req, rsrc.preset == "sd", rsrc.theta)) {
        if (!row.feasible) {
          csv << fmt(row.epsilon) << ',' << fmt(row.w) << ",nan,nan,nan\n";
          continue;
        }
        csv << fmt(row.epsilon) << ',' << fmt(row.w) << ',' << fmt(row.g_raw) << ',' << fmt(row.g_hull) << ','
            << fmt(row.hmin_bits) << '\n';
      }
      emit(rout, csv.str());
    } else if (dst->parsed()) {
      if (cases < 1) throw ConfigError("--cases must be positive");
      std::cout << "scenario,cases,max_discrepancy,max_gain_2n,resampled\n";
      for (const auto& row : cmd::dimension_study(parse_shapes(shapes), cases, seed, srestarts))
        std::cout << '(' << row.shape.n << ' ' << row.shape.m << ' ' << row.shape.k << ")," << row.cases << ','
                  << fmt(row.max_discrepancy) << ',' << fmt(row.max_gain) << ',' << row.resampled << '\n';
    } else if (eta->parsed()) {
      if (w_obs.has_value() == !model.empty()) throw ConfigError("give exactly one of --w-obs or --model");
      if (w_obs) {
        std::cout << "eta >= " << fmt(eta_certified(*w_obs, etheta, eeps)) << '\n';
      } else {
        const auto v = parse_triple(model);
        const double b = eta_model_bound(etheta, v[0], v[1] * std::numbers::pi / 180, 1.0);
        std::cout << "eta >= " << fmt(b * v[2]) << " (" << fmt(b) << " eta_true)\n";
      }
    } else if (dis->parsed()) {
      const auto p = build_sd(dtheta, deps);
      SeesawOptions so;
      so.restarts = drestarts;
      const double closed = sd_optimal(dtheta, deps);
      const double lo = seesaw(p.scenario, p.functional, 2, seed, so).value;
      const double up = quantum_upper_bound(p.scenario, p.functional, default_monomials(p.scenario, 2), 2).value;
      std::cout << "closed_form " << fmt(closed) << "\nlower " << fmt(lo) << "\nupper " << fmt(up) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numeric;
  }
  return 0;
}
