#pragma once

// JSON documents for certificates and bound reports; CSV for traces.

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "newton_universal/bounds.hpp"
#include "newton_universal/certify.hpp"
#include "newton_universal/modulus.hpp"
#include "newton_universal/solvers.hpp"

namespace nu {

using json = nlohmann::json;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json modulus_to_json(const ModulusModel& m) {
  if (const auto* p = std::get_if<PowerLaw>(&m))
    return {{"type", "power-law"}, {"params", {{"L", p->L}, {"alpha", p->alpha}}}};
  const auto& e = std::get<Empirical>(m);
  return {{"type", "empirical"}, {"knots", {{"radii", e.radii()}, {"values", e.values()}}}};
}

inline ModulusModel modulus_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "power-law") {
    const json& p = j.at("params");
    return make_power_law(p.at("L").get<double>(), p.at("alpha").get<double>());
  }
  if (type == "empirical") {
    const json& k = j.at("knots");
    return Empirical(k.at("radii").get<std::vector<double>>(), k.at("values").get<std::vector<double>>());
  }
  throw std::invalid_argument("unknown modulus type '" + type + "'");
}

inline json certificate_to_json(const Certificate& c) {
  json j = {{"m", c.m},   {"q", c.q},   {"R", c.R}, {"rho", c.rho}, {"q1", c.q1}, {"newton_mode", c.newton_mode},
            {"modulus", modulus_to_json(c.modulus)}};
  if (c.heuristic) j["heuristic"] = "heuristic certificate: omega sampled, not an analytic upper bound";
  return j;
}

inline json certificate_to_json(const DsmCertificate& d) {
  json j = certificate_to_json(d.base);
  j["delta"] = d.delta;
  j["r"] = d.r;
  j["admissible"] = d.admissible;
  return j;
}

inline Certificate certificate_from_json(const json& j) {
  Certificate c;
  c.m = j.at("m").get<double>();
  c.q = j.at("q").get<double>();
  c.R = j.at("R").get<double>();
  c.rho = j.at("rho").get<double>();
  c.q1 = j.at("q1").get<double>();
  c.newton_mode = j.at("newton_mode").get<bool>();
  c.modulus = modulus_from_json(j.at("modulus"));
  c.heuristic = j.contains("heuristic");
  return c;
}

inline json report_to_json(const BoundReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back(
        {{"bound_id", to_string(e.id)}, {"checked", e.checked}, {"violations", e.violations}, {"worst_margin", e.worst_margin}});
  return {{"entries", entries}, {"overall_pass", r.overall_pass}};
}

inline BoundReport report_from_json(const json& j) {
  BoundReport r;
  for (const auto& e : j.at("entries")) {
    const auto id = bound_id_from_string(e.at("bound_id").get<std::string>());
    if (!id) throw std::invalid_argument("unknown bound_id " + e.at("bound_id").dump());
    r.entries.push_back({*id, e.at("checked").get<std::size_t>(), e.at("violations").get<std::size_t>(),
                         e.at("worst_margin").get<double>()});
  }
  r.overall_pass = j.at("overall_pass").get<bool>();
  return r;
}

// Columns n,residual,a_n; a_n left empty when the solution is unknown.
inline void write_iteration_csv(std::ostream& os, const IterationTrace& tr) {
  os << "n,residual,a_n\n";
  for (const auto& s : tr.steps) {
    os << s.n << ',' << format_double(s.residual) << ',';
    if (s.a) os << format_double(*s.a);
    os << '\n';
  }
}

// Columns t,residual,udot_norm,dist_to_y; the last column is omitted when no
// node knows its distance to the solution.
inline void write_trajectory_csv(std::ostream& os, const TrajectoryTrace& tr) {
  bool with_y = false;
  for (const auto& n : tr.nodes) with_y = with_y || n.dist_to_y.has_value();
  os << (with_y ? "t,residual,udot_norm,dist_to_y\n" : "t,residual,udot_norm\n");
  for (const auto& n : tr.nodes) {
    os << format_double(n.t) << ',' << format_double(n.residual) << ',' << format_double(n.udot_norm);
    if (with_y) {
      os << ',';
      if (n.dist_to_y) os << format_double(*n.dist_to_y);
    }
    os << '\n';
  }
}

template <class Trace, class Writer>
std::string to_csv_string(const Trace& tr, Writer&& w) {
  std::ostringstream os;
  w(os, tr);
  return os.str();
}

}  // namespace nu
