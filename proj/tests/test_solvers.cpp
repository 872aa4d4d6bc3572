#include <cmath>

#include <gtest/gtest.h>

#include "newton_universal/certify.hpp"
#include "newton_universal/solvers.hpp"

namespace nu {
namespace {

// Independent long-double Newton for u + c sign(u)|u|^{1+a}/(1+a) = 0.
std::vector<long double> reference_scalar_newton(long double z, long double c, long double a, int steps) {
  std::vector<long double> out{z};
  long double u = z;
  for (int k = 0; k < steps && u != 0.0L; ++k) {
    const long double au = std::fabs(u);
    const long double f = u + c * std::copysign(std::pow(au, 1.0L + a), u) / (1.0L + a);
    const long double d = 1.0L + c * std::pow(au, a);
    u -= f / d;
    out.push_back(u);
  }
  return out;
}

TEST(NewtonSolve, AffineProblemConvergesInOneStep) {
  const Mat a{{3.0, 1.0, 0.0}, {0.5, 2.0, -1.0}, {0.0, 0.25, 4.0}};
  const NonlinearProblem p = catalog_linear(a);
  const Vec h{1.0, -2.0, 0.5};
  const IterationTrace tr = newton_solve(ProblemInstance(p, h, Vec{5.0, 5.0, -3.0}));
  ASSERT_TRUE(tr.converged);
  EXPECT_EQ(tr.steps.size(), 2u);
  EXPECT_LE(norm(a * tr.steps.back().u - h), 1e-12);
}

TEST(ContractionSolve, AffineProblemConvergesInOneStep) {
  const Mat a{{2.0, 0.3}, {-0.1, 1.5}};
  const NonlinearProblem p = catalog_linear(a);
  const Vec h{0.7, -0.4};
  const IterationTrace tr = contraction_solve(ProblemInstance(p, h, Vec{-1.0, 2.0}));
  ASSERT_TRUE(tr.converged);
  EXPECT_EQ(tr.steps.size(), 2u);
}

TEST(NewtonSolve, StartAtSolutionTakesNoSteps) {
  const NonlinearProblem p = catalog_diag_hoelder(4, 1.0, 0.5, 0.05);
  for (const auto& tr : {newton_solve(ProblemInstance(p, p.rhs(), p.solution())),
                         contraction_solve(ProblemInstance(p, p.rhs(), p.solution()))}) {
    EXPECT_TRUE(tr.converged);
    EXPECT_EQ(tr.steps.size(), 1u);
    EXPECT_EQ(tr.stop_reason, StopReason::ResidualTol);
  }
}

TEST(NewtonSolve, MatchesLongDoubleReference) {
  for (double alpha : {0.3, 0.5, 0.8}) {
    const NonlinearProblem p = catalog_scalar_hoelder(1.0, alpha);
    const double z = 0.05;
    const IterationTrace tr = newton_solve(ProblemInstance(p, p.rhs(), Vec{z}));
    ASSERT_TRUE(tr.converged);
    const auto ref = reference_scalar_newton(z, 1.0L, alpha, static_cast<int>(tr.steps.size()) - 1);
    for (std::size_t k = 0; k < tr.steps.size() && k < ref.size(); ++k) {
      const double expected = static_cast<double>(ref[k]);
      EXPECT_NEAR(tr.steps[k].u[0], expected, 1e-13 * std::abs(z) + 1e-14 * std::abs(expected)) << "step " << k;
    }
  }
}

TEST(NewtonSolve, SingularJacobianStops) {
  const NonlinearProblem p = catalog_linear(Mat{{1.0, 2.0}, {2.0, 4.0}});
  const IterationTrace tr = newton_solve(ProblemInstance(p, Vec{1.0, 0.0}, Vec{0.0, 1.0}));
  EXPECT_FALSE(tr.converged);
  EXPECT_EQ(tr.stop_reason, StopReason::SingularJacobian);
}

TEST(NewtonSolve, MaxIterReported) {
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.5);
  SolveConfig cfg;
  cfg.max_iter = 1;
  const IterationTrace tr = newton_solve(ProblemInstance(p, p.rhs(), Vec{0.5}), cfg);
  EXPECT_FALSE(tr.converged);
  EXPECT_EQ(tr.stop_reason, StopReason::MaxIter);
  EXPECT_EQ(tr.steps.size(), 2u);
}

TEST(SolveConfig, RejectsNonPositiveSettings) {
  SolveConfig cfg;
  cfg.residual_tol = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dsm_step = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.divergence_factor = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ContractionSolve, ErrorRatioBoundedByQ) {
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.5);
  const Certificate c = build_certificate(p, 0.25, 1.0);
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec z = random_in_ball(p.solution(), c.R, rng);
    const IterationTrace tr = contraction_solve(ProblemInstance(p, p.rhs(), z));
    ASSERT_TRUE(tr.converged);
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
      if (*tr.steps[k].a > 1e-300) {
        EXPECT_LE(*tr.steps[k + 1].a, 0.25 * *tr.steps[k].a * (1.0 + 1e-12));
      }
    }
  }
}

TEST(NewtonSolve, ErrorsDecreaseGeometricallyInsideBall) {
  const NonlinearProblem p = catalog_diag_hoelder(5, 1.0, 0.5, 0.05);
  const Certificate c = build_certificate(p, 0.25, 1.0);
  Rng rng = make_rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec z = random_in_ball(p.solution(), c.R, rng);
    const IterationTrace tr = newton_solve(ProblemInstance(p, p.rhs(), z));
    ASSERT_TRUE(tr.converged);
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k)
      EXPECT_LE(*tr.steps[k + 1].a, c.q1 * *tr.steps[k].a * (1.0 + 1e-9) + 1e-300);
  }
}

// Scalar Newton error map: a_1 / a_0 = (c a / (1 + a)) u^a / (1 + c u^a) at u = a_0.
double scalar_first_ratio(double c, double a, double a0) {
  return (c * a / (1.0 + a)) * std::pow(a0, a) / (1.0 + c * std::pow(a0, a));
}

TEST(NewtonSolve, StartOutsideBallCanExceedRate) {
  // alpha = 0.8, q = 0.1: a start with q1 a_0 = R but a_0 > R breaks a_1 <= q1 a_0.
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.8);
  const Certificate c = build_certificate(p, 0.1, 1.0);
  const double far = c.R / c.q1;
  const IterationTrace out = newton_solve(ProblemInstance(p, p.rhs(), Vec{far}));
  ASSERT_TRUE(out.converged);
  const double ratio = *out.steps[1].a / *out.steps[0].a;
  EXPECT_NEAR(ratio, scalar_first_ratio(1.0, 0.8, far), 1e-12);
  EXPECT_GT(ratio, c.q1);
  // From the edge of B(y, R) the rate holds.
  const IterationTrace in = newton_solve(ProblemInstance(p, p.rhs(), Vec{c.R}));
  EXPECT_NEAR(*in.steps[1].a / *in.steps[0].a, scalar_first_ratio(1.0, 0.8, c.R), 1e-12);
  EXPECT_LE(*in.steps[1].a, c.q1 * *in.steps[0].a);
}

TEST(DsmOde, IdentityMapDecaysExponentially) {
  // F(u) = u, h = 0: u' = -u, u(t) = e^{-t} u0.
  const NonlinearProblem p = catalog_linear(Mat::identity(2));
  SolveConfig cfg;
  cfg.dsm_t_end = 5.0;
  const Vec u0{1.0, -0.5};
  const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, Vec(2), u0), cfg);
  ASSERT_FALSE(tr.truncated);
  EXPECT_EQ(tr.nodes.size(), 101u);
  EXPECT_NEAR(tr.nodes.back().t, 5.0, 1e-12);
  EXPECT_LE(distance(tr.u_final, std::exp(-5.0) * u0), 1e-8);
}

TEST(DsmOde, EquilibriumStaysPut) {
  const NonlinearProblem p = catalog_diag_hoelder(3, 1.0, 0.5, 0.05);
  const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, p.rhs(), p.solution()));
  ASSERT_FALSE(tr.truncated);
  for (const auto& node : tr.nodes) {
    EXPECT_EQ(node.udot_norm, 0.0);
    EXPECT_EQ(node.u, p.solution());
  }
}

TEST(DsmOde, ResidualDecaysLikeExponential) {
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.5);
  const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, p.rhs(), Vec{0.04}));
  ASSERT_FALSE(tr.truncated);
  for (const auto& node : tr.nodes)
    EXPECT_LE(node.residual, tr.r0 * std::exp(-node.t) * (1.0 + 1e-4) + 1e-15) << "t = " << node.t;
}

TEST(DsmHomotopy, NodesSatisfyPathEquation) {
  const NonlinearProblem p = catalog_diag_hoelder(4, 1.0, 0.5, 0.05);
  const Certificate c = build_certificate(p, 0.25, 1.0);
  const Vec z = p.solution() + 0.5 * c.R * Vec::unit(4, 1);
  const ProblemInstance inst(p, p.rhs(), z);
  const TrajectoryTrace tr = dsm_homotopy_solve(inst, c);
  ASSERT_FALSE(tr.truncated);
  EXPECT_EQ(tr.nodes.size(), 65u);
  const Vec v0 = p.F(z) - p.rhs();
  for (const auto& node : tr.nodes)
    EXPECT_LE(norm(p.F(node.u) - p.rhs() - std::exp(-node.t) * v0), 1e-12) << "t = " << node.t;
}

TEST(DsmHomotopy, PathDerivativeMatchesFiniteDifference) {
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.5);
  const ProblemInstance inst(p, p.rhs(), Vec{0.05});
  const Vec v0 = p.F(inst.initial_guess) - p.rhs();
  const double k = 1e-4;
  for (double t : {0.5, 1.0, 3.0}) {
    const Vec ut = homotopy_point(inst, v0, t, inst.initial_guess, 1e-16).u;
    const Vec up = homotopy_point(inst, v0, t + k, ut, 1e-16).u;
    const Vec um = homotopy_point(inst, v0, t - k, ut, 1e-16).u;
    const Vec fd = (0.5 / k) * (up - um);
    const Vec an = path_derivative(p, ut, -std::exp(-t) * v0);
    EXPECT_NEAR(an[0], fd[0], 1e-6 * std::abs(an[0])) << "t = " << t;
  }
}

TEST(DsmHomotopy, AgreesWithOdeIntegration) {
  for (const auto& p : {catalog_scalar_hoelder(1.0, 0.5), catalog_diag_hoelder(5, 1.0, 0.5, 0.05)}) {
    const Certificate c = build_certificate(p, 0.25, 1.0);
    const Vec z = p.solution() + 0.4 * c.R * Vec::unit(p.dim, 0);
    const ProblemInstance inst(p, p.rhs(), z);
    const TrajectoryTrace ode = dsm_ode_solve(inst);
    const TrajectoryTrace hom = dsm_homotopy_solve(inst, c);
    ASSERT_FALSE(ode.truncated);
    ASSERT_FALSE(hom.truncated);
    EXPECT_LE(distance(ode.u_final, hom.u_final), 1e-6) << p.name;
  }
}

TEST(LimitExtrapolate, TailBoundClosedForm) {
  const NonlinearProblem p = catalog_scalar_hoelder(1.0, 0.5);
  const Certificate c = build_certificate(p, 0.25, 1.0);
  TrajectoryTrace tr;
  tr.r0 = 0.02;
  tr.t_end = 30.0;
  tr.u0 = Vec{0.02};
  tr.u_final = Vec{0.0};
  tr.nodes.push_back({30.0, Vec{0.0}, 0.0, 0.0, std::nullopt});
  const LimitEstimate le = limit_extrapolate(tr, c);
  EXPECT_NEAR(le.tail_bound, 0.02 / 0.75 * std::exp(-30.0), 1e-27);
  EXPECT_NEAR(le.tail_bound, 2.4954e-15, 1e-19);
}

TEST(LimitExtrapolate, BoundCoversTrueLimitOfIdentityFlow) {
  const NonlinearProblem p = catalog_linear(Mat::identity(2));
  const Certificate c = certificate_from(1.0, PowerLaw{1.0, 1.0}, 0.25, 1.0, false);
  SolveConfig cfg;
  cfg.dsm_t_end = 10.0;
  const Vec u0{0.3, 0.4};
  const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, Vec(2), u0), cfg);
  const LimitEstimate le = limit_extrapolate(tr, c);
  // True limit is 0; distance to it is e^{-10} ||u0||.
  EXPECT_GE(le.tail_bound, norm(tr.u_final));
  EXPECT_GE(le.tail_bound, std::exp(-10.0) * norm(u0) * (1.0 - 1e-6));
}

TEST(LimitExtrapolate, TruncatedTraceThrows) {
  TrajectoryTrace tr;
  tr.truncated = true;
  tr.nodes.push_back({0.0, Vec{1.0}, 0.0, 0.0, std::nullopt});
  EXPECT_THROW(limit_extrapolate(tr, certificate_from(1.0, PowerLaw{1.0, 1.0}, 0.25, 1.0, false)),
               TruncatedTraceError);
}

TEST(DsmOde, SingularJacobianTruncates) {
  const NonlinearProblem p = catalog_linear(Mat{{1.0, 2.0}, {2.0, 4.0}});
  const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, Vec{1.0, 0.0}, Vec{0.0, 1.0}));
  EXPECT_TRUE(tr.truncated);
  EXPECT_FALSE(tr.failure.empty());
}

TEST(DsmOde, VelocityAndDisplacementRespectBoundsFromRandomStarts) {
  const NonlinearProblem p = catalog_diag_hoelder(3, 1.0, 0.5, 0.05);
  const Certificate c = build_certificate(p, 0.25, 1.0);
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec z = random_in_ball(p.solution(), 0.9 * c.rho / 1.1, rng);
    const TrajectoryTrace tr = dsm_ode_solve(ProblemInstance(p, p.rhs(), z));
    if (tr.r0 > c.rho) continue;
    ASSERT_FALSE(tr.truncated);
    const double scale = c.m * tr.r0 / (1.0 - c.q);
    for (const auto& node : tr.nodes) {
      EXPECT_LE(node.udot_norm, scale * std::exp(-node.t) * (1.0 + 1e-6));
      EXPECT_LE(distance(node.u, tr.u0), scale * (1.0 + 1e-9));
    }
  }
}

}  // namespace
}  // namespace nu
