#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "dirtran/model.hpp"
#include "dirtran/models/ballbot.hpp"
#include "dirtran/models/double_integrator.hpp"
#include "dirtran/models/quadrotor.hpp"

using namespace dirtran;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Central differences with an explicit step scale; the oracle for the
// step-halving check below.
Eigen::MatrixXd fd_state_jacobian(const SystemModel& model,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double h_scale) {
  const int n = model.state_dim();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = std::max(h_scale, h_scale * std::abs(x[j]));
    xp[j] += h;
    xm[j] -= h;
    A.col(j) = (model.dynamics(xp, u) - model.dynamics(xm, u)) / (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return A;
}

}  // namespace

TEST(DoubleIntegrator, EvalDynamics) {
  DoubleIntegrator model;
  const Eigen::VectorXd dx = eval_dynamics(model, vec({0, 0}), vec({1}));
  EXPECT_DOUBLE_EQ(dx[0], 0.0);
  EXPECT_DOUBLE_EQ(dx[1], 1.0);
}

TEST(DoubleIntegrator, LinearizeIsExact) {
  DoubleIntegrator model;
  const Linearization lin = linearize(model, vec({0.3, -1.7}), vec({2.5}));
  Eigen::MatrixXd A_expected(2, 2);
  A_expected << 0, 1, 0, 0;
  EXPECT_TRUE(lin.A.isApprox(A_expected));
  EXPECT_DOUBLE_EQ(lin.B(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(lin.B(1, 0), 1.0);
}

TEST(DoubleIntegrator, Rk4ExactForConstantAcceleration) {
  DoubleIntegrator model;
  const Eigen::VectorXd next = rk4_step(model, vec({0, 0}), vec({1}), 0.1);
  EXPECT_NEAR(next[0], 0.005, 1e-15);  // p = u dt^2 / 2
  EXPECT_NEAR(next[1], 0.1, 1e-15);
}

TEST(Dynamics, DimensionMismatchThrows) {
  DoubleIntegrator model;
  EXPECT_THROW(eval_dynamics(model, vec({0, 0, 0}), vec({1})),
               ContractViolation);
  EXPECT_THROW(eval_dynamics(model, vec({0, 0}), vec({1, 1})),
               ContractViolation);
}

TEST(Dynamics, NonFiniteInputThrows) {
  DoubleIntegrator model;
  EXPECT_THROW(
      eval_dynamics(model, vec({std::nan(""), 0}), vec({1})), InvalidInput);
  EXPECT_THROW(rk4_step(model, vec({0, 0}),
                        vec({std::numeric_limits<double>::infinity()}), 0.1),
               InvalidInput);
}

TEST(Dynamics, NonPositiveDtThrows) {
  DoubleIntegrator model;
  EXPECT_THROW(rk4_step(model, vec({0, 0}), vec({1}), 0.0), ContractViolation);
}

TEST(Ballbot, UprightRestIsEquilibrium) {
  Ballbot model;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
  EXPECT_EQ(eval_dynamics(model, x, u).cwiseAbs().maxCoeff(), 0.0);
  // Equilibrium is a fixed point of the integrator as well.
  EXPECT_EQ((rk4_step(model, x, u, 0.05) - x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ballbot, EvaluationIsDeterministic) {
  Ballbot model;
  Eigen::VectorXd x(10);
  x << 0.1, -0.2, 0.05, 0.3, -0.4, 0.2, 1.0, 0.5, -2.0, 0.1;
  const Eigen::VectorXd u = vec({0.3, -0.1, 0.2});
  const Eigen::VectorXd a = eval_dynamics(model, x, u);
  const Eigen::VectorXd b = eval_dynamics(model, x, u);
  EXPECT_TRUE(a == b);
}

TEST(Ballbot, PitchIsDestabilizingWithoutTorque) {
  Ballbot model;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
  for (double pitch : {0.05, 0.3, -0.05, -0.3}) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
    x[2] = pitch;
    const Eigen::VectorXd dx = model.dynamics(x, u);
    EXPECT_GT(dx[3] * pitch, 0.0) << "pitch " << pitch;
  }
}

TEST(Ballbot, FiniteDifferenceJacobianStepHalvingOracle) {
  Ballbot model;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
  const Linearization lin = linearize(model, x, u);
  const Eigen::MatrixXd A_half = fd_state_jacobian(model, x, u, 5e-7);
  EXPECT_LT((lin.A - A_half).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Ballbot, Rk4FourthOrderConvergence) {
  Ballbot model;
  Eigen::VectorXd x(10);
  x << 0.05, 0.1, -0.04, 0.2, 0.0, 0.1, 0.0, 0.4, 0.0, -0.3;
  const Eigen::VectorXd u = vec({0.3, -0.2, 0.1});
  const double horizon = 0.16;

  auto integrate = [&](double dt) {
    Eigen::VectorXd xk = x;
    const int steps = static_cast<int>(std::round(horizon / dt));
    for (int k = 0; k < steps; ++k) xk = rk4_step(model, xk, u, dt);
    return xk;
  };
  const Eigen::VectorXd reference = integrate(0.04 / 100.0);
  const double err_coarse = (integrate(0.04) - reference).norm();
  const double err_fine = (integrate(0.02) - reference).norm();
  const double ratio = err_coarse / err_fine;
  EXPECT_GT(ratio, 9.0);
  EXPECT_LT(ratio, 30.0);
}

TEST(Quadrotor, HoverIsEquilibrium) {
  Quadrotor model;
  const double per_rotor = model.hover_thrust() / 4.0;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, per_rotor);
  const Eigen::VectorXd dx = eval_dynamics(model, x, u);
  EXPECT_LT(dx.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Quadrotor, HoverHeldForManySteps) {
  Quadrotor model;
  const Eigen::VectorXd u =
      Eigen::VectorXd::Constant(4, model.hover_thrust() / 4.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  for (int k = 0; k < 100; ++k) x = rk4_step(model, x, u, 0.01);
  EXPECT_LT(x.head<3>().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Quadrotor, HoverLinearizationHasKinematicRows) {
  Quadrotor model;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  const Eigen::VectorXd u =
      Eigen::VectorXd::Constant(4, model.hover_thrust() / 4.0);
  const Linearization lin = linearize(model, x, u);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 12; ++j) {
      EXPECT_DOUBLE_EQ(lin.A(i, j), (j == i + 6) ? 1.0 : 0.0);
    }
  }
}

// Analytic Jacobians against central differences, 100 random points per
// model that provides them.
TEST(Dynamics, AnalyticMatchesFiniteDifferences) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> box(-0.4, 0.4);
  for (const auto& model :
       std::vector<std::shared_ptr<SystemModel>>{
           std::make_shared<DoubleIntegrator>(),
           std::make_shared<Quadrotor>()}) {
    ASSERT_TRUE(model->has_analytic_jacobians());
    const int n = model->state_dim();
    const int m = model->control_dim();
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd x(n), u(m);
      for (int i = 0; i < n; ++i) x[i] = box(rng);
      for (int i = 0; i < m; ++i) u[i] = box(rng);
      Eigen::MatrixXd A(n, n), B(n, m);
      model->analytic_jacobians(x, u, A, B);

      Eigen::MatrixXd A_fd(n, n), B_fd(n, m);
      Eigen::VectorXd xp, xm, up, um;
      for (int j = 0; j < n; ++j) {
        const double h = fd_step(x[j]);
        xp = x;
        xm = x;
        xp[j] += h;
        xm[j] -= h;
        A_fd.col(j) = (model->dynamics(xp, u) - model->dynamics(xm, u)) /
                      (2 * h);
      }
      for (int j = 0; j < m; ++j) {
        const double h = fd_step(u[j]);
        up = u;
        um = u;
        up[j] += h;
        um[j] -= h;
        B_fd.col(j) = (model->dynamics(x, up) - model->dynamics(x, um)) /
                      (2 * h);
      }
      const double tol_a = 1e-5 * (1.0 + A.cwiseAbs().maxCoeff());
      const double tol_b = 1e-5 * (1.0 + B.cwiseAbs().maxCoeff());
      ASSERT_LT((A - A_fd).cwiseAbs().maxCoeff(), tol_a)
          << model->name() << " trial " << trial;
      ASSERT_LT((B - B_fd).cwiseAbs().maxCoeff(), tol_b)
          << model->name() << " trial " << trial;
    }
  }
}

TEST(Dynamics, StructureProbeFindsKnownPattern) {
  DoubleIntegrator model;
  const JacobianStructure s = probe_jacobian_structure(model);
  EXPECT_TRUE(s.A(0, 1));
  EXPECT_FALSE(s.A(0, 0));
  EXPECT_FALSE(s.A(1, 0));
  EXPECT_FALSE(s.A(1, 1));
  EXPECT_TRUE(s.B(1, 0));
  EXPECT_FALSE(s.B(0, 0));
}

TEST(Dynamics, ParameterValidation) {
  auto params = Ballbot::default_parameters();
  params["torso_mass"] = -1.0;
  EXPECT_THROW(Ballbot{params}, ContractViolation);
}

TEST(Dynamics, ScaledParameters) {
  Ballbot model;
  auto heavier = model.with_scaled_parameters({{"torso_mass", 1.01}});
  EXPECT_NEAR(heavier->parameter("torso_mass"), 9.09, 1e-12);
  EXPECT_THROW(model.with_scaled_parameters({{"no_such", 1.0}}),
               ContractViolation);
}
