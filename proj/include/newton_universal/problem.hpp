#pragma once

// Nonlinear problems F(u) = h on R^n and a catalog of test problems with known
// solutions. The Hölder families have Jacobians that are continuous but not
// Lipschitz at the solution.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "newton_universal/linalg.hpp"
#include "newton_universal/modulus.hpp"
#include "newton_universal/sampling.hpp"

namespace nu {

struct NonlinearProblem {
  std::string name;
  std::size_t dim = 0;
  std::function<Vec(const Vec&)> eval_f;
  std::function<Mat(const Vec&)> eval_jacobian;
  std::optional<Vec> known_solution;  // y
  std::optional<Vec> known_rhs;       // f = F(y)
  std::optional<ModulusModel> known_modulus;

  Vec F(const Vec& u) const { return eval_f(u); }
  Mat J(const Vec& u) const { return eval_jacobian(u); }

  const Vec& solution() const {
    if (!known_solution) throw std::logic_error(name + ": no known solution");
    return *known_solution;
  }
  const Vec& rhs() const {
    if (!known_rhs) throw std::logic_error(name + ": no known right-hand side");
    return *known_rhs;
  }
};

struct ProblemInstance {
  NonlinearProblem problem;
  Vec rhs_h;
  Vec initial_guess;

  ProblemInstance(NonlinearProblem p, Vec h, Vec z)
      : problem(std::move(p)), rhs_h(std::move(h)), initial_guess(std::move(z)) {
    if (rhs_h.size() != problem.dim || initial_guess.size() != problem.dim)
      throw DimensionError("ProblemInstance: dimensions must match the problem");
  }
};

namespace detail {

inline double signed_pow(double u, double p) {
  if (u == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(u), p), u);
}

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

// F(u) = u + c sign(u)|u|^{1+alpha}/(1+alpha), F'(u) = 1 + c|u|^alpha, y = f = 0.
inline NonlinearProblem catalog_scalar_hoelder(double c, double alpha) {
  detail::require(c > 0.0, "scalar-hoelder: c must be positive");
  detail::require(alpha > 0.0 && alpha < 1.0, "scalar-hoelder: alpha must lie in (0, 1)");
  NonlinearProblem p;
  p.name = "scalar-hoelder";
  p.dim = 1;
  p.eval_f = [c, alpha](const Vec& u) {
    return Vec{u[0] + c * detail::signed_pow(u[0], 1.0 + alpha) / (1.0 + alpha)};
  };
  p.eval_jacobian = [c, alpha](const Vec& u) {
    Mat j(1);
    j(0, 0) = 1.0 + (u[0] == 0.0 ? 0.0 : c * std::pow(std::abs(u[0]), alpha));
    return j;
  };
  p.known_solution = Vec{0.0};
  p.known_rhs = Vec{0.0};
  p.known_modulus = make_power_law(c, alpha);
  return p;
}

// Componentwise Hölder map plus coupling * sin(u_{i+1}) in component i < n-1.
// The power-law envelope (c + coupling) r^alpha is valid for r <= 1.
inline NonlinearProblem catalog_diag_hoelder(std::size_t n, double c, double alpha, double coupling) {
  detail::require(n >= 1, "diag-hoelder: n must be positive");
  detail::require(c > 0.0, "diag-hoelder: c must be positive");
  detail::require(alpha > 0.0 && alpha < 1.0, "diag-hoelder: alpha must lie in (0, 1)");
  detail::require(coupling >= 0.0 && coupling <= 0.1, "diag-hoelder: coupling must lie in [0, 0.1]");
  NonlinearProblem p;
  p.name = "diag-hoelder";
  p.dim = n;
  p.eval_f = [n, c, alpha, coupling](const Vec& u) {
    Vec f(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = u[i] + c * detail::signed_pow(u[i], 1.0 + alpha) / (1.0 + alpha);
      if (i + 1 < n) f[i] += coupling * std::sin(u[i + 1]);
    }
    return f;
  };
  p.eval_jacobian = [n, c, alpha, coupling](const Vec& u) {
    Mat j(n);
    for (std::size_t i = 0; i < n; ++i) {
      j(i, i) = 1.0 + (u[i] == 0.0 ? 0.0 : c * std::pow(std::abs(u[i]), alpha));
      if (i + 1 < n) j(i, i + 1) = coupling * std::cos(u[i + 1]);
    }
    return j;
  };
  p.known_solution = Vec(n);
  p.known_rhs = Vec(n);
  p.known_modulus = make_power_law(c + coupling, alpha);
  return p;
}

// Trapezoid discretization on x_i = i/(n-1) of
//   u(x) + lam * int_0^1 x s u(s)^3 ds.
// The Jacobian difference is the rank-one matrix 3 lam x (w x (u^2 - v^2))^T, so
// on B(0, ball) omega(r) <= 6 lam ||x|| max_j(w_j x_j) ball r; that envelope is
// tabulated on [0, ball].
inline NonlinearProblem catalog_smooth_hammerstein(std::size_t n, double lam, double ball = 2.0) {
  detail::require(n >= 2, "hammerstein: n must be at least 2");
  detail::require(lam >= 0.0 && lam < 1.0, "hammerstein: lam must lie in [0, 1)");
  detail::require(ball > 0.0, "hammerstein: ball radius must be positive");
  const double h = 1.0 / static_cast<double>(n - 1);
  Vec x(n), wx(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) * h;
    const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    wx[i] = w * x[i];
  }

  NonlinearProblem p;
  p.name = "hammerstein";
  p.dim = n;
  p.eval_f = [n, lam, x, wx](const Vec& u) {
    double integral = 0.0;
    for (std::size_t j = 0; j < n; ++j) integral += wx[j] * u[j] * u[j] * u[j];
    Vec f = u;
    for (std::size_t i = 0; i < n; ++i) f[i] += lam * x[i] * integral;
    return f;
  };
  p.eval_jacobian = [n, lam, x, wx](const Vec& u) {
    Mat j = Mat::identity(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) j(i, k) += 3.0 * lam * x[i] * wx[k] * u[k] * u[k];
    return j;
  };

  // F(0) = 0, so Newton for F(y) = 0 from the zero start stops immediately.
  Vec y(n);
  p.known_solution = y;
  p.known_rhs = p.eval_f(y);

  double wx_max = 0.0;
  for (double v : wx) wx_max = std::max(wx_max, v);
  const double slope = 6.0 * lam * norm(x) * wx_max * ball;
  constexpr std::size_t kKnots = 32;
  std::vector<double> radii(kKnots), values(kKnots);
  for (std::size_t k = 0; k < kKnots; ++k) {
    radii[k] = ball * static_cast<double>(k + 1) / static_cast<double>(kKnots);
    values[k] = slope * radii[k];
  }
  p.known_modulus = Empirical::from_samples(std::move(radii), std::move(values));
  return p;
}

// F(u) = A u, y = f = 0, no analytic modulus.
inline NonlinearProblem catalog_linear(Mat a) {
  detail::require(a.dim() >= 1, "linear: empty matrix");
  NonlinearProblem p;
  p.name = "linear";
  p.dim = a.dim();
  p.eval_f = [a](const Vec& u) { return a * u; };
  p.eval_jacobian = [a](const Vec&) { return a; };
  p.known_solution = Vec(a.dim());
  p.known_rhs = Vec(a.dim());
  return p;
}

using ParamMap = std::map<std::string, double>;

class UnknownProblemError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double param(const ParamMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

inline std::size_t size_param(const ParamMap& m, const std::string& key, double fallback) {
  const double v = param(m, key, fallback);
  if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument(key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// Catalog lookup by identifier: "scalar-hoelder", "diag-hoelder",
// "hammerstein", "linear".
inline NonlinearProblem make_catalog_problem(const std::string& id, const ParamMap& params) {
  using detail::param;
  using detail::size_param;
  if (id == "scalar-hoelder") return catalog_scalar_hoelder(param(params, "c", 1.0), param(params, "alpha", 0.5));
  if (id == "diag-hoelder")
    return catalog_diag_hoelder(size_param(params, "n", 5), param(params, "c", 1.0), param(params, "alpha", 0.5),
                                param(params, "coupling", 0.0));
  if (id == "hammerstein")
    return catalog_smooth_hammerstein(size_param(params, "n", 21), param(params, "lam", 0.1),
                                      param(params, "ball", 2.0));
  if (id == "linear") {
    const std::size_t n = size_param(params, "n", 1);
    return catalog_linear(param(params, "scale", 1.0) * Mat::identity(n));
  }
  throw UnknownProblemError("unknown problem id '" + id + "'");
}

inline bool is_catalog_id(const std::string& id) {
  return id == "scalar-hoelder" || id == "diag-hoelder" || id == "hammerstein" || id == "linear";
}

// Central-difference Jacobian, column by column.
inline Mat finite_difference_jacobian(const NonlinearProblem& p, const Vec& u, double step = 1e-6) {
  const std::size_t n = p.dim;
  Mat j(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec up = u, um = u;
    up[k] += step;
    um[k] -= step;
    const Vec col = (1.0 / (2.0 * step)) * (p.F(up) - p.F(um));
    for (std::size_t i = 0; i < n; ++i) j(i, k) = col[i];
  }
  return j;
}

struct JacobianGateResult {
  double max_relative_error = 0.0;
  std::size_t points = 0;
  bool passed = false;
};

// Compares eval_jacobian with central differences at random points of
// B(center, radius); relative error is ||J - J_fd|| / max(1, ||J||).
inline JacobianGateResult jacobian_consistency_gate(const NonlinearProblem& p, const Vec& center, double radius,
                                                    std::size_t points, std::uint64_t seed, double step = 1e-6,
                                                    double tol = 1e-5) {
  Rng rng = make_rng(seed);
  JacobianGateResult r;
  for (std::size_t k = 0; k < points; ++k) {
    const Vec u = random_in_ball(center, radius, rng);
    const Mat ja = p.J(u);
    const Mat jf = finite_difference_jacobian(p, u, step);
    const double err = operator_norm(ja - jf) / std::max(1.0, operator_norm(ja));
    r.max_relative_error = std::max(r.max_relative_error, err);
  }
  r.points = points;
  r.passed = r.max_relative_error <= tol;
  return r;
}

}  // namespace nu
