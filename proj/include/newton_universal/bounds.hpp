#pragma once

// Evaluates the quantitative bounds of the local theory on traces and
// certificates. A failed inequality is recorded as a violation, never thrown.
//
// Margins: ratio-type bounds (Contr24, Rate44) report bound - observed ratio;
// all other bounds report bound - observed value in absolute units.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "newton_universal/certify.hpp"
#include "newton_universal/solvers.hpp"

namespace nu {

enum class BoundId { Inv21, Contr24, Ball23, Vel34, Disp35, Tail36, Rate44, Geo45, Containment, Limit37 };

inline constexpr std::array<BoundId, 10> kAllBoundIds = {BoundId::Inv21,  BoundId::Contr24, BoundId::Ball23,
                                                         BoundId::Vel34,  BoundId::Disp35,  BoundId::Tail36,
                                                         BoundId::Rate44, BoundId::Geo45,   BoundId::Containment,
                                                         BoundId::Limit37};

inline const char* to_string(BoundId id) {
  switch (id) {
    case BoundId::Inv21: return "Inv21";
    case BoundId::Contr24: return "Contr24";
    case BoundId::Ball23: return "Ball23";
    case BoundId::Vel34: return "Vel34";
    case BoundId::Disp35: return "Disp35";
    case BoundId::Tail36: return "Tail36";
    case BoundId::Rate44: return "Rate44";
    case BoundId::Geo45: return "Geo45";
    case BoundId::Containment: return "Containment";
    case BoundId::Limit37: return "Limit37";
  }
  return "unknown";
}

inline std::optional<BoundId> bound_id_from_string(const std::string& s) {
  for (BoundId id : kAllBoundIds)
    if (s == to_string(id)) return id;
  return std::nullopt;
}

struct BoundEntry {
  BoundId id;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
};

struct BoundReport {
  std::vector<BoundEntry> entries;
  bool overall_pass = true;

  const BoundEntry* find(BoundId id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
  std::size_t violations(BoundId id) const {
    const auto* e = find(id);
    return e ? e->violations : 0;
  }
};

struct BoundTolerances {
  double algebraic = 1e-9;       // identities and exact inequalities
  double velocity = 1e-6;        // Vel34 / Tail36 on discretized paths
  double limit = 1e-4;           // Limit37 relative slack
  double residual_floor = 1e-12; // Limit37 absolute floor
};

class MissingDistanceError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class NotAdmissibleError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

class EntryBuilder {
public:
  explicit EntryBuilder(BoundId id) : id_(id) {}

  // observed <= bound * (1 + slack); margin recorded as given.
  void check(double observed, double bound, double slack, double margin) {
    ++checked_;
    if (!(observed <= bound * (1.0 + slack))) ++violations_;
    worst_ = std::min(worst_, margin);
  }
  void check(double observed, double bound, double slack) { check(observed, bound, slack, bound - observed); }

  BoundEntry finish() const {
    return {id_, checked_, violations_, checked_ == 0 ? 0.0 : (std::isfinite(worst_) ? worst_ : -1e300)};
  }

private:
  BoundId id_;
  std::size_t checked_ = 0;
  std::size_t violations_ = 0;
  double worst_ = std::numeric_limits<double>::infinity();
};

inline BoundReport make_report(std::vector<BoundEntry> entries) {
  BoundReport r;
  r.entries = std::move(entries);
  r.overall_pass = std::all_of(r.entries.begin(), r.entries.end(), [](const BoundEntry& e) { return e.violations == 0; });
  return r;
}

}  // namespace detail

// Union of two reports; entries with the same id are combined.
inline BoundReport merge_reports(const BoundReport& a, const BoundReport& b) {
  std::vector<BoundEntry> out = a.entries;
  for (const BoundEntry& e : b.entries) {
    auto it = std::find_if(out.begin(), out.end(), [&](const BoundEntry& x) { return x.id == e.id; });
    if (it == out.end()) {
      out.push_back(e);
      continue;
    }
    if (it->checked == 0)
      it->worst_margin = e.worst_margin;
    else if (e.checked > 0)
      it->worst_margin = std::min(it->worst_margin, e.worst_margin);
    it->checked += e.checked;
    it->violations += e.violations;
  }
  return detail::make_report(std::move(out));
}

// Rate44: a_{n+1} <= q1 a_n; Geo45: a_n <= q1^{n-1} R; Containment: a_n <= R (n >= 1).
inline BoundReport check_newton_trace(const IterationTrace& trace, const Certificate& c,
                                      const BoundTolerances& tol = {}) {
  for (const auto& s : trace.steps)
    if (!s.a) throw MissingDistanceError("check_newton_trace: trace has no distances to the solution");
  detail::EntryBuilder rate(BoundId::Rate44), geo(BoundId::Geo45), ball(BoundId::Containment);
  for (std::size_t k = 0; k + 1 < trace.steps.size(); ++k) {
    const double an = *trace.steps[k].a, an1 = *trace.steps[k + 1].a;
    const double margin = an > 0.0 ? c.q1 - an1 / an : -an1;
    rate.check(an1, c.q1 * an, tol.algebraic, margin);
  }
  for (std::size_t k = 1; k < trace.steps.size(); ++k) {
    const double an = *trace.steps[k].a;
    geo.check(an, std::pow(c.q1, static_cast<double>(k) - 1.0) * c.R, tol.algebraic);
    ball.check(an, c.R, tol.algebraic);
  }
  return detail::make_report({rate.finish(), geo.finish(), ball.finish()});
}

// Vel34, Disp35, Tail36, Containment (if y known) and Limit37 on a trajectory.
inline BoundReport evaluate_dsm_bounds(const TrajectoryTrace& traj, const Certificate& c,
                                       const BoundTolerances& tol = {}) {
  const double scale = c.m * traj.r0 / (1.0 - c.q);
  detail::EntryBuilder vel(BoundId::Vel34), disp(BoundId::Disp35), tail(BoundId::Tail36), cont(BoundId::Containment),
      lim(BoundId::Limit37);
  bool has_y = false;
  const Vec& last = traj.nodes.empty() ? traj.u0 : traj.nodes.back().u;
  for (const auto& node : traj.nodes) {
    const double decay = scale * std::exp(-node.t);
    vel.check(node.udot_norm, decay, tol.velocity);
    disp.check(distance(node.u, traj.u0), scale, tol.algebraic);
    tail.check(distance(last, node.u), decay, tol.velocity);
    if (node.dist_to_y) {
      has_y = true;
      cont.check(*node.dist_to_y, c.R, tol.algebraic);
    }
  }
  if (!traj.truncated && !traj.nodes.empty()) {
    // u(inf) lies within tail_bound of u_final; consistency with the last node.
    const LimitEstimate le = limit_extrapolate(traj, c);
    tail.check(distance(le.u_inf_estimate, traj.nodes.back().u), le.tail_bound, tol.velocity);
  }
  const double final_res = traj.nodes.empty() ? traj.r0 : traj.nodes.back().residual;
  lim.check(final_res, std::max(traj.r0 * std::exp(-traj.t_end) * (1.0 + tol.limit), tol.residual_floor), 0.0);

  std::vector<BoundEntry> entries{vel.finish(), disp.finish(), tail.finish()};
  if (has_y) entries.push_back(cont.finish());
  entries.push_back(lim.finish());
  return detail::make_report(std::move(entries));
}

inline BoundReport check_dsm_trace(const TrajectoryTrace& traj, const Certificate& c, const DsmCertificate& dc,
                                   const BoundTolerances& tol = {}) {
  if (!dc.admissible)
    throw NotAdmissibleError("check_dsm_trace: delta + r = " + std::to_string(dc.delta + dc.r) +
                             " exceeds rho = " + std::to_string(c.rho));
  return evaluate_dsm_bounds(traj, c, tol);
}

// Contr24 and Ball23 over `pairs` random pairs in B(y, R); Inv21 over `pairs`
// random points.
inline BoundReport check_contraction(const Certificate& c, const NonlinearProblem& p, const Vec& h, std::size_t pairs,
                                     std::uint64_t rng_seed, const BoundTolerances& tol = {}) {
  const Vec& y = p.solution();
  detail::EntryBuilder contr(BoundId::Contr24), ball(BoundId::Ball23);
  const LuFactors q = lu_factor(p.J(y));
  Rng rng = make_rng(rng_seed, 0);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vec u = random_in_ball(y, c.R, rng);
    const Vec v = random_in_ball(y, c.R, rng);
    const Vec tu = contraction_map(p, q, h, u);
    const Vec tv = contraction_map(p, q, h, v);
    const double duv = distance(u, v);
    if (duv > 0.0) {
      const double ratio = distance(tu, tv) / duv;
      contr.check(ratio, c.q, tol.algebraic, c.q - ratio);
    }
    ball.check(distance(tu, y), c.R, tol.algebraic);
    ball.check(distance(tv, y), c.R, tol.algebraic);
  }
  const BoundCheckSummary s = check_inverse_bound(c, p, pairs, derive_seed(rng_seed, 1));
  BoundEntry inv_entry{BoundId::Inv21, s.checked, s.violations, s.checked == 0 ? 0.0 : s.worst_margin};
  if (!std::isfinite(inv_entry.worst_margin)) inv_entry.worst_margin = -1e300;
  return detail::make_report({contr.finish(), ball.finish(), inv_entry});
}

}  // namespace nu
