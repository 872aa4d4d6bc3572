#pragma once

// Certificates for the local solvability theory: m bounds ||F'(y)^{-1}||,
// omega is the Jacobian modulus of continuity, R solves m*omega(R) = q and
// rho = (1-q)R/m is the admissible distance of h from f.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "newton_universal/linalg.hpp"
#include "newton_universal/modulus.hpp"
#include "newton_universal/problem.hpp"
#include "newton_universal/sampling.hpp"

namespace nu {

class NoRadiusError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Certificate {
  double m = 1.0;
  double q = 0.5;
  double R = 0.0;
  double rho = 0.0;
  ModulusModel modulus = PowerLaw{};
  bool newton_mode = false;  // q < 1/2, hence q1 < 1
  double q1 = 1.0;
  bool heuristic = false;    // omega came from sampling, not an analytic envelope
};

struct DsmCertificate {
  Certificate base;
  double delta = 0.0;  // ||h - f||
  double r = 0.0;      // ||F(u0) - h||
  bool admissible = false;
};

struct EmpiricalModulusConfig {
  std::size_t radii_count = 32;
  std::size_t pairs_per_radius = 256;
  std::uint64_t rng_seed = 0;
};

inline double estimate_m(const NonlinearProblem& p) { return inverse_operator_norm(p.J(p.solution())); }

// Geometric grid over three decades ending at radius_max.
inline std::vector<double> modulus_radius_grid(double radius_max, std::size_t count) {
  std::vector<double> radii(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double e = count == 1 ? 0.0 : -3.0 * static_cast<double>(count - 1 - k) / static_cast<double>(count - 1);
    radii[k] = radius_max * std::pow(10.0, e);
  }
  return radii;
}

// Sampled lower estimate of omega on B(y, radius_max). Every fourth pair is
// anchored at y. Each radius draws from its own substream of cfg.rng_seed.
inline Empirical sample_modulus(const NonlinearProblem& p, double radius_max, const EmpiricalModulusConfig& cfg) {
  if (!(radius_max > 0.0)) throw std::invalid_argument("sample_modulus: radius_max must be positive");
  if (cfg.radii_count < 1 || cfg.pairs_per_radius < 1)
    throw std::invalid_argument("sample_modulus: counts must be at least 1");
  const Vec& y = p.solution();
  const Mat jy = p.J(y);
  const std::vector<double> radii = modulus_radius_grid(radius_max, cfg.radii_count);
  std::vector<double> raw(radii.size(), 0.0);

  for (std::size_t k = 0; k < radii.size(); ++k) {
    Rng rng = make_rng(cfg.rng_seed, k);
    double best = 0.0;
    for (std::size_t i = 0; i < cfg.pairs_per_radius; ++i) {
      const bool anchored = i % 4 == 0;
      const Vec u = anchored ? y : random_in_ball(y, radius_max, rng);
      const Vec v = project_to_ball(u + radii[k] * random_direction(p.dim, rng), y, radius_max);
      const Mat ju = anchored ? jy : p.J(u);
      best = std::max(best, operator_norm(ju - p.J(v)));
    }
    raw[k] = best;
  }
  return Empirical::from_samples(radii, std::move(raw));
}

// Unique R in (0, r_max] with m * omega(R) = q, by bisection.
inline double solve_radius(double m, const ModulusModel& w, double q, double r_max) {
  if (!(m > 0.0)) throw std::invalid_argument("solve_radius: m must be positive");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("solve_radius: q must lie in (0, 1)");
  if (!(r_max > 0.0)) throw std::invalid_argument("solve_radius: r_max must be positive");
  const double hi_limit = std::min(r_max, modulus_domain_max(w));
  const double top = m * modulus_eval(w, hi_limit);
  if (top < q)
    throw NoRadiusError("no radius: m*omega(" + std::to_string(hi_limit) + ") = " + std::to_string(top) +
                        " < q = " + std::to_string(q) + "; choose a smaller q");
  double lo = 0.0, hi = hi_limit;
  // Bisect until the bracket stops shrinking in floating point.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (m * modulus_eval(w, mid) < q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline Certificate certificate_from(double m, const ModulusModel& w, double q, double r_max, bool heuristic) {
  Certificate c;
  c.m = m;
  c.q = q;
  c.modulus = w;
  c.R = solve_radius(m, w, q, r_max);
  c.rho = (1.0 - q) * c.R / m;
  c.q1 = q / (1.0 - q);
  c.newton_mode = q < 0.5;
  c.heuristic = heuristic;
  return c;
}

inline Certificate build_certificate(const NonlinearProblem& p, double q, double r_max,
                                     const EmpiricalModulusConfig& cfg = {}) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("build_certificate: q must lie in (0, 1)");
  const double m = estimate_m(p);
  if (p.known_modulus) return certificate_from(m, *p.known_modulus, q, r_max, false);
  return certificate_from(m, sample_modulus(p, r_max, cfg), q, r_max, true);
}

inline bool check_rhs_admissible(const Certificate& c, const NonlinearProblem& p, const Vec& h) {
  return distance(h, p.rhs()) <= c.rho;
}

inline DsmCertificate build_dsm_certificate(const Certificate& c, const NonlinearProblem& p,
                                            const ProblemInstance& inst) {
  DsmCertificate d;
  d.base = c;
  d.delta = distance(inst.rhs_h, p.rhs());
  d.r = norm(p.F(inst.initial_guess) - inst.rhs_h);
  d.admissible = d.delta + d.r <= c.rho + 1e-12;
  return d;
}

struct BoundCheckSummary {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double max_observed = 0.0;
  double bound = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();  // bound - observed
};

inline constexpr double kAlgebraicSlack = 1e-9;

// Samples u uniformly in B(y, R) and checks ||F'(u)^{-1}|| <= m/(1-q).
// A singular Jacobian counts as a violation.
inline BoundCheckSummary check_inverse_bound(const Certificate& c, const NonlinearProblem& p, std::size_t samples,
                                             std::uint64_t rng_seed) {
  BoundCheckSummary s;
  s.bound = c.m / (1.0 - c.q);
  Rng rng = make_rng(rng_seed);
  const Vec& y = p.solution();
  for (std::size_t k = 0; k < samples; ++k) {
    const Vec u = random_in_ball(y, c.R, rng);
    double v = std::numeric_limits<double>::infinity();
    try {
      v = inverse_operator_norm(p.J(u));
    } catch (const SingularError&) {
    }
    ++s.checked;
    s.max_observed = std::max(s.max_observed, v);
    s.worst_margin = std::min(s.worst_margin, s.bound - v);
    if (!(v <= s.bound * (1.0 + kAlgebraicSlack))) ++s.violations;
  }
  if (s.checked == 0) s.worst_margin = 0.0;
  return s;
}

}  // namespace nu
