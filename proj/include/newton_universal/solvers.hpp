#pragma once

// Solution procedures for F(u) = h:
//   * Newton iteration          u_{n+1} = u_n - F'(u_n)^{-1}(F(u_n) - h)
//   * frozen-Jacobian contraction  u_{k+1} = u_k - Q(F(u_k) - h), Q = F'(y)^{-1}
//   * continuous Newton flow    u' = -F'(u)^{-1}(F(u) - h), integrated by RK4
//   * homotopy realization of the same flow: F(u(t)) = h + e^{-t}(F(u0) - h)
// Every procedure returns a trace; failures are encoded in the trace.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "newton_universal/certify.hpp"
#include "newton_universal/linalg.hpp"
#include "newton_universal/problem.hpp"

namespace nu {

struct SolveConfig {
  double residual_tol = 1e-12;
  std::size_t max_iter = 200;
  double dsm_t_end = 30.0;
  double dsm_step = 0.05;
  std::size_t homotopy_nodes = 64;
  double divergence_factor = 1e6;
  std::size_t homotopy_inner_iter = 50;

  void validate() const {
    if (!(residual_tol > 0.0) || max_iter < 1 || !(dsm_t_end > 0.0) || !(dsm_step > 0.0) ||
        homotopy_nodes < 1 || !(divergence_factor > 1.0) || homotopy_inner_iter < 1)
      throw std::invalid_argument("SolveConfig: all settings must be positive (divergence_factor > 1)");
  }
};

enum class StopReason { ResidualTol, MaxIter, Diverged, SingularJacobian };

inline const char* to_string(StopReason s) {
  switch (s) {
    case StopReason::ResidualTol: return "residual-tol";
    case StopReason::MaxIter: return "max-iter";
    case StopReason::Diverged: return "diverged";
    case StopReason::SingularJacobian: return "singular-jacobian";
  }
  return "unknown";
}

struct IterationStep {
  std::size_t n = 0;
  Vec u;
  std::optional<double> a;  // ||u_n - y||
  double residual = 0.0;    // ||F(u_n) - h||
};

struct IterationTrace {
  std::vector<IterationStep> steps;
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIter;

  const Vec& final_point() const { return steps.back().u; }
};

struct TrajectoryNode {
  double t = 0.0;
  Vec u;
  double udot_norm = 0.0;
  double residual = 0.0;  // ||F(u(t)) - h||
  std::optional<double> dist_to_y;
};

struct TrajectoryTrace {
  std::vector<TrajectoryNode> nodes;
  Vec u_final;
  Vec u0;
  double r0 = 0.0;
  double t_end = 0.0;        // requested end time
  bool truncated = false;
  std::string failure;       // set when truncated
};

namespace detail {

inline std::optional<double> dist_to_solution(const NonlinearProblem& p, const Vec& u) {
  if (!p.known_solution) return std::nullopt;
  return distance(u, *p.known_solution);
}

// Shared loop for Newton-type iterations; `step` maps u to the correction
// subtracted from u and may throw SingularError.
template <class Step>
IterationTrace iterate(const ProblemInstance& inst, const SolveConfig& cfg, Step&& step) {
  const NonlinearProblem& p = inst.problem;
  IterationTrace tr;
  Vec u = inst.initial_guess;
  double res = norm(p.F(u) - inst.rhs_h);
  const double res0 = res;
  tr.steps.push_back({0, u, dist_to_solution(p, u), res});
  if (res <= cfg.residual_tol) {
    tr.converged = true;
    tr.stop_reason = StopReason::ResidualTol;
    return tr;
  }
  for (std::size_t n = 1; n <= cfg.max_iter; ++n) {
    Vec next;
    try {
      next = u - step(u);
    } catch (const SingularError&) {
      tr.stop_reason = StopReason::SingularJacobian;
      return tr;
    }
    const double r = next.all_finite() ? norm(p.F(next) - inst.rhs_h) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(r)) {
      tr.stop_reason = StopReason::Diverged;
      return tr;
    }
    u = std::move(next);
    res = r;
    tr.steps.push_back({n, u, dist_to_solution(p, u), res});
    if (res <= cfg.residual_tol) {
      tr.converged = true;
      tr.stop_reason = StopReason::ResidualTol;
      return tr;
    }
    if (res > cfg.divergence_factor * res0) {
      tr.stop_reason = StopReason::Diverged;
      return tr;
    }
  }
  tr.stop_reason = StopReason::MaxIter;
  return tr;
}

}  // namespace detail

inline IterationTrace newton_solve(const ProblemInstance& inst, const SolveConfig& cfg = {}) {
  cfg.validate();
  const NonlinearProblem& p = inst.problem;
  return detail::iterate(inst, cfg, [&](const Vec& u) { return lu_solve(lu_factor(p.J(u)), p.F(u) - inst.rhs_h); });
}

inline IterationTrace contraction_solve(const ProblemInstance& inst, const SolveConfig& cfg = {}) {
  cfg.validate();
  const NonlinearProblem& p = inst.problem;
  std::optional<LuFactors> q;
  try {
    q = lu_factor(p.J(p.solution()));
  } catch (const SingularError&) {
    IterationTrace tr;
    tr.steps.push_back({0, inst.initial_guess, detail::dist_to_solution(p, inst.initial_guess),
                        norm(p.F(inst.initial_guess) - inst.rhs_h)});
    tr.stop_reason = StopReason::SingularJacobian;
    return tr;
  }
  return detail::iterate(inst, cfg, [&](const Vec& u) { return q->solve(p.F(u) - inst.rhs_h); });
}

// T(u) = u - F'(y)^{-1}(F(u) - h)
inline Vec contraction_map(const NonlinearProblem& p, const LuFactors& q, const Vec& h, const Vec& u) {
  return u - q.solve(p.F(u) - h);
}

// Newton vector field -F'(u)^{-1}(F(u) - h).
inline Vec newton_flow(const NonlinearProblem& p, const Vec& h, const Vec& u) {
  return -lu_solve(lu_factor(p.J(u)), p.F(u) - h);
}

inline std::size_t dsm_step_count(const SolveConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.dsm_t_end / cfg.dsm_step));
}

inline TrajectoryTrace dsm_ode_solve(const ProblemInstance& inst, const SolveConfig& cfg = {}) {
  cfg.validate();
  const NonlinearProblem& p = inst.problem;
  const Vec& h = inst.rhs_h;
  const std::size_t steps = std::max<std::size_t>(1, dsm_step_count(cfg));
  const double dt = cfg.dsm_t_end / static_cast<double>(steps);

  TrajectoryTrace tr;
  tr.u0 = inst.initial_guess;
  tr.t_end = cfg.dsm_t_end;
  tr.r0 = norm(p.F(tr.u0) - h);

  Vec u = tr.u0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    Vec k1;
    try {
      k1 = newton_flow(p, h, u);
    } catch (const SingularError& e) {
      tr.truncated = true;
      tr.failure = std::string("singular Jacobian at t = ") + std::to_string(t) + ": " + e.what();
      break;
    }
    tr.nodes.push_back({t, u, norm(k1), k == 0 ? tr.r0 : norm(p.F(u) - h), detail::dist_to_solution(p, u)});
    if (k == steps) break;
    try {
      const Vec k2 = newton_flow(p, h, u + (0.5 * dt) * k1);
      const Vec k3 = newton_flow(p, h, u + (0.5 * dt) * k2);
      const Vec k4 = newton_flow(p, h, u + dt * k3);
      u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const SingularError& e) {
      tr.truncated = true;
      tr.failure = std::string("singular Jacobian in RK4 stage after t = ") + std::to_string(t) + ": " + e.what();
      break;
    }
    if (!u.all_finite()) {
      tr.truncated = true;
      tr.failure = "non-finite state after t = " + std::to_string(t);
      break;
    }
  }
  tr.u_final = tr.nodes.empty() ? tr.u0 : tr.nodes.back().u;
  return tr;
}

struct HomotopyPoint {
  Vec u;
  double residual = 0.0;  // ||F(u) - target||
  std::size_t iterations = 0;
  bool converged = false;
};

// Newton solve of F(u) = target warm-started at `warm`. Iterates toward `tol`;
// once the residual is within `accept_tol` it also stops when a step no longer
// reduces the residual (rounding floor). Converged means residual <= accept_tol.
inline HomotopyPoint solve_shifted(const NonlinearProblem& p, const Vec& target, const Vec& warm, double tol,
                                   std::size_t max_iter, double accept_tol = 0.0) {
  accept_tol = std::max(accept_tol, tol);
  HomotopyPoint pt{warm, norm(p.F(warm) - target), 0, false};
  while (pt.residual > tol && pt.iterations < max_iter) {
    Vec next;
    try {
      next = pt.u - lu_solve(lu_factor(p.J(pt.u)), p.F(pt.u) - target);
    } catch (const SingularError&) {
      break;
    }
    if (!next.all_finite()) break;
    const double r = norm(p.F(next) - target);
    if (pt.residual <= accept_tol && !(r < pt.residual)) break;
    pt.u = std::move(next);
    pt.residual = r;
    ++pt.iterations;
  }
  pt.converged = pt.residual <= accept_tol;
  return pt;
}

// The point u(t) on the path F(u(t)) = h + e^{-t} v0.
inline HomotopyPoint homotopy_point(const ProblemInstance& inst, const Vec& v0, double t, const Vec& warm,
                                    double tol, std::size_t max_iter = 50, double accept_tol = 0.0) {
  return solve_shifted(inst.problem, inst.rhs_h + std::exp(-t) * v0, warm, tol, max_iter, accept_tol);
}

// [F'(u)]^{-1} hdot: velocity of the solution of F(u(t)) = h(t).
inline Vec path_derivative(const NonlinearProblem& p, const Vec& u_t, const Vec& hdot) {
  return lu_solve(lu_factor(p.J(u_t)), hdot);
}

inline TrajectoryTrace dsm_homotopy_solve(const ProblemInstance& inst, const Certificate& /*c*/,
                                          const SolveConfig& cfg = {}) {
  cfg.validate();
  const NonlinearProblem& p = inst.problem;
  const Vec& h = inst.rhs_h;
  TrajectoryTrace tr;
  tr.u0 = inst.initial_guess;
  tr.t_end = cfg.dsm_t_end;
  const Vec v0 = p.F(tr.u0) - h;
  tr.r0 = norm(v0);

  Vec u = tr.u0;
  for (std::size_t k = 0; k <= cfg.homotopy_nodes; ++k) {
    const double t = cfg.dsm_t_end * static_cast<double>(k) / static_cast<double>(cfg.homotopy_nodes);
    if (k > 0) {
      // Polish well below the path's own scale e^{-t} r0; accept at residual_tol.
      const double polish = std::min(cfg.residual_tol, 1e-6 * std::exp(-t) * tr.r0);
      const HomotopyPoint pt = homotopy_point(inst, v0, t, u, polish, cfg.homotopy_inner_iter, cfg.residual_tol);
      if (!pt.converged) {
        tr.truncated = true;
        tr.failure = "inner Newton solve failed at t = " + std::to_string(t) +
                     " (residual " + std::to_string(pt.residual) + ")";
        break;
      }
      u = pt.u;
    }
    Vec udot;
    try {
      udot = path_derivative(p, u, -std::exp(-t) * v0);
    } catch (const SingularError& e) {
      tr.truncated = true;
      tr.failure = std::string("singular Jacobian at t = ") + std::to_string(t) + ": " + e.what();
      break;
    }
    tr.nodes.push_back({t, u, norm(udot), k == 0 ? tr.r0 : norm(p.F(u) - h), detail::dist_to_solution(p, u)});
  }
  tr.u_final = tr.nodes.empty() ? tr.u0 : tr.nodes.back().u;
  return tr;
}

class TruncatedTraceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct LimitEstimate {
  Vec u_inf_estimate;
  double tail_bound = 0.0;  // ||u(inf) - u_final|| <= tail_bound
};

inline LimitEstimate limit_extrapolate(const TrajectoryTrace& traj, const Certificate& c) {
  if (traj.truncated || traj.nodes.empty()) throw TruncatedTraceError("limit_extrapolate: trace is truncated");
  const double t_end = traj.nodes.back().t;
  return {traj.u_final, c.m * traj.r0 / (1.0 - c.q) * std::exp(-t_end)};
}

}  // namespace nu
