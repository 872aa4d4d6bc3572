#pragma once

// Command implementations behind the `newton_universal` executable. Each
// command reads one JSON run configuration and returns a process exit code:
//   0 success, 1 configuration error, 2 certification failure,
//   3 solver non-convergence, 4 bound violation or hypotheses not met.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "newton_universal/bounds.hpp"
#include "newton_universal/certify.hpp"
#include "newton_universal/io.hpp"
#include "newton_universal/problem.hpp"
#include "newton_universal/solvers.hpp"

namespace nu::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kCertifyError = 2, kNotConverged = 3, kBoundViolation = 4 };

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SolverChoice { Newton, Contraction, DsmOde, DsmHomotopy, All };

struct InitialGuessSpec {
  enum class Kind { Explicit, AtSolution, Offset, RandomInBall } kind = Kind::AtSolution;
  Vec point;          // Explicit
  double scale = 0.5; // Offset / RandomInBall, in units of R
};

struct RhsSpec {
  std::optional<Vec> offset;  // h = f + offset
  double rho_fraction = 0.0;  // else ||h - f|| = rho_fraction * rho, random direction
};

struct SweepSpec {
  std::vector<double> alpha;
  std::vector<double> q;
  std::size_t starts = 20;
};

struct RunConfig {
  std::string problem_id;
  ParamMap params;
  double q = 0.25;
  double r_max = 1.0;
  RhsSpec rhs;
  InitialGuessSpec initial_guess;
  SolverChoice solver = SolverChoice::All;
  SolveConfig solve;
  std::string output_dir = ".";
  std::optional<std::uint64_t> rng_seed;
  EmpiricalModulusConfig modulus_sampling;
  std::size_t check_pairs = 200;
  std::optional<SweepSpec> sweep;
};

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

namespace detail {

inline SolverChoice parse_solver(const std::string& s) {
  if (s == "newton") return SolverChoice::Newton;
  if (s == "contraction") return SolverChoice::Contraction;
  if (s == "dsm-ode") return SolverChoice::DsmOde;
  if (s == "dsm-homotopy") return SolverChoice::DsmHomotopy;
  if (s == "all") return SolverChoice::All;
  throw ConfigError("unknown solver '" + s + "' (expected newton, contraction, dsm-ode, dsm-homotopy, all)");
}

inline Vec parse_vec(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array of numbers");
  std::vector<double> xs;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(std::string(what) + " must contain only numbers");
    xs.push_back(x.get<double>());
  }
  return Vec(std::move(xs));
}

inline std::size_t parse_count(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 1) throw ConfigError(std::string(what) + " must be a positive integer");
  return j.get<std::size_t>();
}

inline double parse_positive(const nlohmann::json& j, const char* what) {
  if (!j.is_number() || !(j.get<double>() > 0.0)) throw ConfigError(std::string(what) + " must be a positive number");
  return j.get<double>();
}

inline std::vector<double> parse_grid(const nlohmann::json& s, const char* key) {
  if (!s.contains(key) || !s.at(key).is_array()) throw ConfigError(std::string("sweep.") + key + " must be an array");
  std::vector<double> g;
  for (const auto& x : s.at(key)) {
    if (!x.is_number()) throw ConfigError(std::string("sweep.") + key + " must contain only numbers");
    g.push_back(x.get<double>());
  }
  if (g.empty()) throw ConfigError(std::string("sweep.") + key + " grid is empty");
  return g;
}

inline InitialGuessSpec parse_initial_guess(const nlohmann::json& j) {
  InitialGuessSpec g;
  if (j.is_array()) {
    g.kind = InitialGuessSpec::Kind::Explicit;
    g.point = parse_vec(j, "initial_guess");
    return g;
  }
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object()) {
    name = j.value("strategy", std::string("at-solution"));
    if (j.contains("scale")) g.scale = parse_positive(j.at("scale"), "initial_guess.scale");
  } else {
    throw ConfigError("initial_guess must be an array, a strategy name, or {strategy, scale}");
  }
  if (name == "at-solution")
    g.kind = InitialGuessSpec::Kind::AtSolution;
  else if (name == "offset")
    g.kind = InitialGuessSpec::Kind::Offset;
  else if (name == "random-in-ball")
    g.kind = InitialGuessSpec::Kind::RandomInBall;
  else
    throw ConfigError("unknown initial_guess strategy '" + name + "'");
  return g;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  if (!j.contains("problem") || !j.at("problem").is_object()) throw ConfigError("missing 'problem' object");
  const auto& pj = j.at("problem");
  if (!pj.contains("id") || !pj.at("id").is_string()) throw ConfigError("problem.id must be a string");
  c.problem_id = pj.at("id").get<std::string>();
  if (!is_catalog_id(c.problem_id)) throw ConfigError("problem id '" + c.problem_id + "' is not in the catalog");
  if (pj.contains("params")) {
    if (!pj.at("params").is_object()) throw ConfigError("problem.params must be an object");
    for (const auto& [k, v] : pj.at("params").items()) {
      if (!v.is_number()) throw ConfigError("problem.params." + k + " must be a number");
      c.params[k] = v.get<double>();
    }
  }

  if (!j.contains("q") || !j.at("q").is_number()) throw ConfigError("missing numeric 'q'");
  c.q = j.at("q").get<double>();
  if (!(c.q > 0.0 && c.q < 1.0)) throw ConfigError("q = " + format_double(c.q) + " is out of range; q must lie in (0, 1)");
  if (j.contains("r_max")) c.r_max = detail::parse_positive(j.at("r_max"), "r_max");

  if (j.contains("rhs_offset")) {
    const auto& r = j.at("rhs_offset");
    if (r.is_number()) {
      c.rhs.rho_fraction = r.get<double>();
      if (c.rhs.rho_fraction < 0.0) throw ConfigError("rhs_offset fraction must be nonnegative");
    } else {
      c.rhs.offset = detail::parse_vec(r, "rhs_offset");
    }
  }
  if (j.contains("initial_guess")) c.initial_guess = detail::parse_initial_guess(j.at("initial_guess"));
  if (j.contains("solver")) {
    if (!j.at("solver").is_string()) throw ConfigError("solver must be a string");
    c.solver = detail::parse_solver(j.at("solver").get<std::string>());
  }
  if (j.contains("solve")) {
    const auto& s = j.at("solve");
    if (!s.is_object()) throw ConfigError("solve must be an object");
    if (s.contains("residual_tol")) c.solve.residual_tol = detail::parse_positive(s.at("residual_tol"), "solve.residual_tol");
    if (s.contains("max_iter")) c.solve.max_iter = detail::parse_count(s.at("max_iter"), "solve.max_iter");
    if (s.contains("dsm_t_end")) c.solve.dsm_t_end = detail::parse_positive(s.at("dsm_t_end"), "solve.dsm_t_end");
    if (s.contains("dsm_step")) c.solve.dsm_step = detail::parse_positive(s.at("dsm_step"), "solve.dsm_step");
    if (s.contains("homotopy_nodes"))
      c.solve.homotopy_nodes = detail::parse_count(s.at("homotopy_nodes"), "solve.homotopy_nodes");
    if (s.contains("divergence_factor")) {
      c.solve.divergence_factor = detail::parse_positive(s.at("divergence_factor"), "solve.divergence_factor");
      if (!(c.solve.divergence_factor > 1.0)) throw ConfigError("solve.divergence_factor must exceed 1");
    }
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("rng_seed")) {
    if (!j.at("rng_seed").is_number_integer()) throw ConfigError("rng_seed must be an integer");
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  }
  if (j.contains("modulus_sampling")) {
    const auto& m = j.at("modulus_sampling");
    if (m.contains("radii_count")) c.modulus_sampling.radii_count = detail::parse_count(m.at("radii_count"), "radii_count");
    if (m.contains("pairs_per_radius"))
      c.modulus_sampling.pairs_per_radius = detail::parse_count(m.at("pairs_per_radius"), "pairs_per_radius");
  }
  if (j.contains("check_pairs")) c.check_pairs = detail::parse_count(j.at("check_pairs"), "check_pairs");
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_object()) throw ConfigError("sweep must be an object");
    SweepSpec sw;
    sw.alpha = detail::parse_grid(s, "alpha");
    sw.q = detail::parse_grid(s, "q");
    if (s.contains("starts")) sw.starts = detail::parse_count(s.at("starts"), "sweep.starts");
    for (double a : sw.alpha)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("sweep.alpha values must lie in (0, 1)");
    for (double q : sw.q)
      if (!(q > 0.0 && q < 1.0)) throw ConfigError("sweep.q values must lie in (0, 1)");
    c.sweep = sw;
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return parse_run_config(j);
}

// Seed precedence: --seed, config rng_seed, NEWTON_UNIVERSAL_SEED, 0.
inline std::uint64_t resolve_seed(const RunConfig& c, const Overrides& o) {
  if (o.seed) return *o.seed;
  if (c.rng_seed) return *c.rng_seed;
  if (const char* env = std::getenv("NEWTON_UNIVERSAL_SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("NEWTON_UNIVERSAL_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

// Substream indices used by the commands.
inline constexpr std::uint64_t kRhsStream = 10, kGuessStream = 11, kModulusStream = 12, kCheckStream = 13,
                               kSweepStream = 100;

inline NonlinearProblem make_problem(const RunConfig& c) {
  try {
    return make_catalog_problem(c.problem_id, c.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem parameters: ") + e.what());
  }
}

inline Certificate certify_problem(const NonlinearProblem& p, const RunConfig& c, std::uint64_t seed) {
  EmpiricalModulusConfig mc = c.modulus_sampling;
  mc.rng_seed = derive_seed(seed, kModulusStream);
  return build_certificate(p, c.q, c.r_max, mc);
}

inline ProblemInstance make_instance(const NonlinearProblem& p, const Certificate& cert, const RunConfig& c,
                                     std::uint64_t seed) {
  const Vec& y = p.solution();
  Vec h = p.rhs();
  if (c.rhs.offset) {
    if (c.rhs.offset->size() != p.dim) throw ConfigError("rhs_offset has the wrong dimension");
    h += *c.rhs.offset;
  } else if (c.rhs.rho_fraction > 0.0) {
    Rng rng = make_rng(seed, kRhsStream);
    h += (c.rhs.rho_fraction * cert.rho) * random_direction(p.dim, rng);
  }
  Vec z = y;
  Rng rng = make_rng(seed, kGuessStream);
  switch (c.initial_guess.kind) {
    case InitialGuessSpec::Kind::Explicit:
      if (c.initial_guess.point.size() != p.dim) throw ConfigError("initial_guess has the wrong dimension");
      z = c.initial_guess.point;
      break;
    case InitialGuessSpec::Kind::AtSolution:
      break;
    case InitialGuessSpec::Kind::Offset:
      z = y + (c.initial_guess.scale * cert.R) * random_direction(p.dim, rng);
      break;
    case InitialGuessSpec::Kind::RandomInBall:
      z = random_in_ball(y, c.initial_guess.scale * cert.R, rng);
      break;
  }
  return ProblemInstance(p, std::move(h), std::move(z));
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline std::filesystem::path prepare_output_dir(const RunConfig& c, const Overrides& o) {
  std::filesystem::path dir = o.output_dir ? *o.output_dir : c.output_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

struct Loaded {
  RunConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

template <class Body>
int run_guarded(const std::string& config_path, const Overrides& o, std::ostream& err, Body&& body) {
  Loaded l;
  NonlinearProblem p;
  try {
    l.config = load_run_config(config_path);
    l.seed = resolve_seed(l.config, o);
    p = make_problem(l.config);
    l.out = prepare_output_dir(l.config, o);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    return body(l, p);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NoRadiusError& e) {
    err << "certification failed (NoRadius): " << e.what() << '\n';
    return kCertifyError;
  } catch (const SingularError& e) {
    err << "certification failed (SingularError): F'(y) is not boundedly invertible: " << e.what() << '\n';
    return kCertifyError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace detail

inline int cmd_certify(const std::string& config_path, const Overrides& o = {}, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  return detail::run_guarded(config_path, o, err, [&](const detail::Loaded& l, const NonlinearProblem& p) {
    const Certificate cert = certify_problem(p, l.config, l.seed);
    const ProblemInstance inst = make_instance(p, cert, l.config, l.seed);
    const DsmCertificate dc = build_dsm_certificate(cert, p, inst);
    detail::write_text(l.out / "certificate.json", certificate_to_json(dc).dump(2) + "\n");
    if (cert.heuristic) err << "warning: heuristic certificate (omega sampled, no analytic modulus)\n";
    if (!o.quiet)
      out << "certified " << p.name << ": m=" << format_double(cert.m) << " R=" << format_double(cert.R)
          << " rho=" << format_double(cert.rho) << " q1=" << format_double(cert.q1)
          << (cert.newton_mode ? " (newton mode)" : "") << '\n';
    return static_cast<int>(kOk);
  });
}

inline bool wants(SolverChoice chosen, SolverChoice s) { return chosen == SolverChoice::All || chosen == s; }

inline int cmd_solve(const std::string& config_path, const Overrides& o = {}, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::run_guarded(config_path, o, err, [&](const detail::Loaded& l, const NonlinearProblem& p) -> int {
    const RunConfig& cfg = l.config;
    const Certificate cert = certify_problem(p, cfg, l.seed);
    if (cert.heuristic) err << "warning: heuristic certificate (omega sampled, no analytic modulus)\n";
    if (wants(cfg.solver, SolverChoice::Newton) && !cert.newton_mode) {
      err << "certification failed: Newton mode needs q < 1/2 so that q1 = q/(1-q) < 1 (q = " << format_double(cfg.q)
          << ")\n";
      return kCertifyError;
    }
    const ProblemInstance inst = make_instance(p, cert, cfg, l.seed);
    if (!check_rhs_admissible(cert, p, inst.rhs_h)) {
      err << "certification failed: ||h - f|| = " << format_double(distance(inst.rhs_h, p.rhs()))
          << " exceeds rho = " << format_double(cert.rho) << '\n';
      return kCertifyError;
    }

    BoundReport report;
    bool all_converged = true;
    bool hypotheses_ok = true;

    if (wants(cfg.solver, SolverChoice::Newton)) {
      const IterationTrace tr = newton_solve(inst, cfg.solve);
      detail::write_text(l.out / "newton_trace.csv", to_csv_string(tr, write_iteration_csv));
      all_converged = all_converged && tr.converged;
      // The rate bounds measure ||u_n - y||, which tends to zero only when h = f.
      if (inst.rhs_h == p.rhs()) {
        if (cert.q1 * distance(inst.initial_guess, p.solution()) > cert.R) {
          hypotheses_ok = false;
          err << "flagged: Newton start violates q1*||z - y|| <= R\n";
        }
        report = merge_reports(report, check_newton_trace(tr, cert));
      } else if (!o.quiet) {
        err << "note: Newton rate bounds apply to h = f only; skipped for this instance\n";
      }
      if (!tr.converged) err << "newton: stopped with " << to_string(tr.stop_reason) << '\n';
    }
    if (wants(cfg.solver, SolverChoice::Contraction)) {
      const IterationTrace tr = contraction_solve(inst, cfg.solve);
      detail::write_text(l.out / "contraction_trace.csv", to_csv_string(tr, write_iteration_csv));
      all_converged = all_converged && tr.converged;
      report = merge_reports(report, check_contraction(cert, p, inst.rhs_h, cfg.check_pairs,
                                                       derive_seed(l.seed, kCheckStream)));
      if (!tr.converged) err << "contraction: stopped with " << to_string(tr.stop_reason) << '\n';
    }
    const bool ode = wants(cfg.solver, SolverChoice::DsmOde);
    const bool hom = wants(cfg.solver, SolverChoice::DsmHomotopy);
    if (ode || hom) {
      const DsmCertificate dc = build_dsm_certificate(cert, p, inst);
      if (!dc.admissible) {
        hypotheses_ok = false;
        err << "flagged: DSM hypotheses fail, delta + r = " << format_double(dc.delta + dc.r)
            << " > rho = " << format_double(cert.rho) << '\n';
      }
      auto run = [&](const TrajectoryTrace& tr, const char* file, const char* label) {
        detail::write_text(l.out / file, to_csv_string(tr, write_trajectory_csv));
        if (tr.truncated) {
          all_converged = false;
          err << label << ": " << tr.failure << '\n';
        }
        report = merge_reports(report, evaluate_dsm_bounds(tr, cert));
      };
      if (ode) run(dsm_ode_solve(inst, cfg.solve), "dsm_ode_trace.csv", "dsm-ode");
      if (hom) run(dsm_homotopy_solve(inst, cert, cfg.solve), "dsm_homotopy_trace.csv", "dsm-homotopy");
    }
    detail::write_text(l.out / "report.json", report_to_json(report).dump(2) + "\n");

    if (!o.quiet)
      out << "solve " << p.name << ": " << (all_converged ? "converged" : "NOT converged") << ", bounds "
          << (report.overall_pass ? "pass" : "VIOLATED") << '\n';
    if (!all_converged) return kNotConverged;
    if (!report.overall_pass || !hypotheses_ok) return kBoundViolation;
    return kOk;
  });
}

struct SweepRow {
  double alpha = 0.0;
  double q = 0.0;
  double q1 = 0.0;
  double observed_rate = 0.0;
  bool passed = false;
  bool converged = true;
};

// One grid cell: Newton from `starts` random points in B(y, R), h = f. Starts with
// only q1*||z - y|| <= R can break the first-step rate (see the solver tests).
inline SweepRow sweep_cell(const RunConfig& cfg, double alpha, double q, std::size_t starts, std::uint64_t seed) {
  RunConfig cell = cfg;
  cell.params["alpha"] = alpha;
  cell.q = q;
  const NonlinearProblem p = make_problem(cell);
  const Certificate cert = certify_problem(p, cell, seed);
  SweepRow row{alpha, q, cert.q1, 0.0, true, true};
  Rng rng = make_rng(seed, 0);
  for (std::size_t s = 0; s < starts; ++s) {
    const Vec z = random_in_ball(p.solution(), cert.R, rng);
    const ProblemInstance inst(p, p.rhs(), z);
    const IterationTrace tr = newton_solve(inst, cfg.solve);
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
      const double an = *tr.steps[k].a;
      if (an > 0.0) row.observed_rate = std::max(row.observed_rate, *tr.steps[k + 1].a / an);
    }
    row.converged = row.converged && tr.converged;
    row.passed = row.passed && tr.converged && check_newton_trace(tr, cert).overall_pass;
  }
  return row;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "alpha,q,q1,observed_rate,passed\n";
  for (const auto& r : rows)
    os << format_double(r.alpha) << ',' << format_double(r.q) << ',' << format_double(r.q1) << ','
       << format_double(r.observed_rate) << ',' << (r.passed ? "true" : "false") << '\n';
  return os.str();
}

inline int cmd_sweep(const std::string& config_path, const Overrides& o = {}, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::run_guarded(config_path, o, err, [&](const detail::Loaded& l, const NonlinearProblem&) -> int {
    const RunConfig& cfg = l.config;
    if (!cfg.sweep) throw ConfigError("sweep command needs a 'sweep' object with alpha and q grids");
    if (cfg.problem_id != "scalar-hoelder" && cfg.problem_id != "diag-hoelder")
      throw ConfigError("sweep varies alpha; problem must be scalar-hoelder or diag-hoelder");
    const SweepSpec& sw = *cfg.sweep;
    for (double q : sw.q)
      if (!(q < 0.5)) {
        err << "certification failed: Newton mode needs q < 1/2 so that q1 = q/(1-q) < 1 (q = " << format_double(q)
            << ")\n";
        return kCertifyError;
      }

    // Cells run concurrently; rows are collected in grid order (alpha major).
    std::vector<std::future<SweepRow>> cells;
    std::uint64_t index = 0;
    for (double a : sw.alpha)
      for (double q : sw.q)
        cells.push_back(std::async(std::launch::async, sweep_cell, std::cref(cfg), a, q, sw.starts,
                                   derive_seed(l.seed, kSweepStream + index++)));
    std::vector<SweepRow> rows;
    for (auto& f : cells) rows.push_back(f.get());

    detail::write_text(l.out / "sweep.csv", sweep_csv(rows));
    bool converged = true, passed = true;
    for (const auto& r : rows) {
      converged = converged && r.converged;
      passed = passed && r.passed;
    }
    if (!o.quiet) out << "sweep: " << rows.size() << " cells, " << (passed ? "all passed" : "FAILURES") << '\n';
    if (!converged) return kNotConverged;
    return passed ? kOk : kBoundViolation;
  });
}

}  // namespace nu::cli
