#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "dirtran/bench/tasks.hpp"
#include "dirtran/models/ballbot.hpp"
#include "dirtran/models/double_integrator.hpp"
#include "dirtran/transcription.hpp"

using namespace dirtran;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// f == 0 regardless of input; for the stationary-defect cases.
class ZeroModel : public SystemModel {
 public:
  ZeroModel() : SystemModel("zero", 2, 1, {}, {"a", "b"}, {"u"}) {}
  Eigen::VectorXd dynamics(const Eigen::VectorXd&,
                           const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(2);
  }
  std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>&) const override {
    return std::make_shared<ZeroModel>();
  }
};

// xdot = 3 t^2 written as an autonomous system: x = [value, clock].
class CubicClock : public SystemModel {
 public:
  CubicClock() : SystemModel("cubic_clock", 2, 1, {}, {"value", "clock"}, {"u"}) {}
  Eigen::VectorXd dynamics(const Eigen::VectorXd& x,
                           const Eigen::VectorXd&) const override {
    Eigen::VectorXd dx(2);
    dx[0] = 3.0 * x[1] * x[1];
    dx[1] = 1.0;
    return dx;
  }
  std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>&) const override {
    return std::make_shared<CubicClock>();
  }
};

// Dense finite-difference Jacobian of an arbitrary vector evaluator.
Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& y) {
  const Eigen::VectorXd f0 = fn(y);
  Eigen::MatrixXd jac(f0.size(), y.size());
  Eigen::VectorXd yp = y, ym = y;
  for (int j = 0; j < y.size(); ++j) {
    const double h = fd_step(y[j]);
    yp[j] += h;
    ym[j] -= h;
    jac.col(j) = (fn(yp) - fn(ym)) / (2 * h);
    yp[j] = y[j];
    ym[j] = y[j];
  }
  return jac;
}

Eigen::VectorXd random_decision_vector(const TranscribedProblem& problem,
                                       std::mt19937& rng) {
  std::uniform_real_distribution<double> box(-0.4, 0.4);
  std::uniform_real_distribution<double> dt_box(0.05, 0.25);
  Eigen::VectorXd y(problem.num_vars());
  for (int i = 0; i < y.size(); ++i) y[i] = box(rng);
  y[problem.layout().dt_index()] = dt_box(rng);
  return y;
}

Eigen::MatrixXd scatter(const SparsityPattern& pattern,
                        const std::vector<double>& values, int rows,
                        int cols) {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows, cols);
  for (size_t k = 0; k < pattern.size(); ++k) {
    dense(pattern[k].first, pattern[k].second) += values[k];
  }
  return dense;
}

}  // namespace

TEST(DecisionLayout, IndicesAreABijection) {
  const DecisionLayout layout{5, 3, 2};
  EXPECT_EQ(layout.size(), 5 * 5 + 1);
  std::vector<bool> seen(layout.size(), false);
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < 3; ++i) seen[layout.state_index(k, i)] = true;
    for (int j = 0; j < 2; ++j) seen[layout.control_index(k, j)] = true;
  }
  seen[layout.dt_index()] = true;
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  EXPECT_EQ(layout.dt_index(), layout.size() - 1);
}

TEST(Defects, EulerStationaryPoint) {
  const Eigen::VectorXd x = vec({1.0, -2.0});
  EXPECT_EQ(defect_euler(vec({0, 0}), x, x, 0.3).norm(), 0.0);
}

TEST(Defects, EulerMissesCurvatureTerm) {
  // Double integrator, constant acceleration: Euler leaves the u dt^2/2
  // position term as residual.
  const Eigen::VectorXd f_k = vec({0, 1});
  const Eigen::VectorXd r =
      defect_euler(f_k, vec({0, 0}), vec({0.005, 0.1}), 0.1);
  EXPECT_NEAR(r[0], 0.005, 1e-15);
  EXPECT_NEAR(r[1], 0.0, 1e-15);
}

TEST(Defects, EulerResidualIsAffineInEndpoint) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x_k(3), f_k(3), d(3);
    for (int i = 0; i < 3; ++i) {
      x_k[i] = box(rng);
      f_k[i] = box(rng);
      d[i] = box(rng);
    }
    const double dt = 0.2;
    const Eigen::VectorXd base = x_k + dt * f_k;
    const Eigen::VectorXd r1 = defect_euler(f_k, x_k, base + d, dt);
    const Eigen::VectorXd r2 = defect_euler(f_k, x_k, base + 2.0 * d, dt);
    EXPECT_LT((r2 - 2.0 * r1).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Defects, TrapezoidalExactForConstantAcceleration) {
  const Eigen::VectorXd r = defect_trapezoidal(
      vec({0, 1}), vec({0.1, 1}), vec({0, 0}), vec({0.005, 0.1}), 0.1);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Defects, TrapezoidalStationaryPoint) {
  const Eigen::VectorXd x = vec({0.7, 0.3});
  EXPECT_EQ(
      defect_trapezoidal(vec({0, 0}), vec({0, 0}), x, x, 0.5).norm(), 0.0);
}

TEST(Defects, TrapezoidalEndpointAntisymmetry) {
  const Eigen::VectorXd f_k = vec({0.3, -0.1});
  const Eigen::VectorXd f_k1 = vec({-0.2, 0.4});
  const Eigen::VectorXd x_k = vec({1.0, 2.0});
  const Eigen::VectorXd x_k1 = vec({0.5, 1.5});
  // Traversing the interval in reverse (swapped endpoints and derivatives,
  // negated time step) negates the residual.
  const Eigen::VectorXd forward = defect_trapezoidal(f_k, f_k1, x_k, x_k1, 0.2);
  const Eigen::VectorXd backward =
      defect_trapezoidal(f_k1, f_k, x_k1, x_k, -0.2);
  EXPECT_LT((forward + backward).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Defects, HermiteSimpsonExactForConstantAcceleration) {
  DoubleIntegrator model;
  const Eigen::VectorXd x_k = vec({0, 0});
  const Eigen::VectorXd x_k1 = vec({0.005, 0.1});
  const Eigen::VectorXd u = vec({1});
  // Check the midpoint interpolation itself first.
  Eigen::VectorXd x_c, u_c;
  hermite_midpoint(x_k, u, x_k1, u, model.dynamics(x_k, u),
                   model.dynamics(x_k1, u), 0.1, x_c, u_c);
  EXPECT_NEAR(x_c[0], 0.00125, 1e-15);
  EXPECT_NEAR(x_c[1], 0.05, 1e-15);
  const Eigen::VectorXd r =
      defect_hermite_simpson(model, x_k, u, x_k1, u, 0.1);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Defects, HermiteSimpsonZeroDynamics) {
  ZeroModel model;
  const Eigen::VectorXd x = vec({0.4, -0.9});
  const Eigen::VectorXd u = vec({0.3});
  EXPECT_EQ(defect_hermite_simpson(model, x, u, x, u, 0.7).norm(), 0.0);
}

TEST(Defects, HermiteSimpsonExactForCubics) {
  // Simpson quadrature integrates the cubic t^3 exactly.
  CubicClock model;
  const double dt = 0.4;
  const Eigen::VectorXd x_k = vec({0, 0});
  const Eigen::VectorXd x_k1 = vec({dt * dt * dt, dt});
  const Eigen::VectorXd u = vec({0});
  const Eigen::VectorXd r =
      defect_hermite_simpson(model, x_k, u, x_k1, u, dt);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Defects, ConvergenceOrdersOnBallbot) {
  // Node values sampled from a near-exact flow under piecewise-linear
  // control; the defect then measures the scheme's local truncation error.
  Ballbot model;
  Eigen::VectorXd x0(10);
  x0 << 0.04, 0.05, -0.03, 0.1, 0.0, 0.05, 0.0, 0.3, 0.0, -0.2;
  const Eigen::VectorXd u0 = vec({0.4, -0.3, 0.1});
  const Eigen::VectorXd du = vec({-0.5, 0.6, 0.2});  // fixed slope [N*m/s]
  auto u_at = [&](double t) { return (u0 + t * du).eval(); };

  auto flow = [&](double dt) {
    // 400 RK4 substeps under the time-linear control.
    Eigen::VectorXd x = x0;
    const int steps = 400;
    const double h = dt / steps;
    for (int s = 0; s < steps; ++s) {
      const double t = s * h;
      const Eigen::VectorXd k1 = model.dynamics(x, u_at(t));
      const Eigen::VectorXd k2 =
          model.dynamics(x + 0.5 * h * k1, u_at(t + 0.5 * h));
      const Eigen::VectorXd k3 =
          model.dynamics(x + 0.5 * h * k2, u_at(t + 0.5 * h));
      const Eigen::VectorXd k4 = model.dynamics(x + h * k3, u_at(t + h));
      x += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
  };

  auto defect_norms = [&](double dt) {
    const Eigen::VectorXd x1 = flow(dt);
    const Eigen::VectorXd u1 = u_at(dt);
    const Eigen::VectorXd f0 = model.dynamics(x0, u0);
    const Eigen::VectorXd f1 = model.dynamics(x1, u1);
    const double trap = defect_trapezoidal(f0, f1, x0, x1, dt).norm();
    const double hs =
        defect_hermite_simpson(model, x0, u0, x1, u1, dt).norm();
    return std::make_pair(trap, hs);
  };

  const auto [trap_h, hs_h] = defect_norms(0.08);
  const auto [trap_h2, hs_h2] = defect_norms(0.04);
  EXPECT_LT(hs_h, trap_h);
  EXPECT_LT(hs_h2, trap_h2);
  // Local truncation order: ratio ~ 2^(order+1).
  const double trap_order = std::log2(trap_h / trap_h2) - 1.0;
  const double hs_order = std::log2(hs_h / hs_h2) - 1.0;
  EXPECT_GE(trap_order, 1.8);
  EXPECT_GE(hs_order, 3.6);
}

TEST(CostQuadrature, ZeroTrajectory) {
  TaskSpec task = task_library("goto");
  task.nodes = 11;
  PlannedTrajectory traj;
  traj.scheme = Scheme::Trapezoidal;
  traj.dt = 0.2;
  traj.states = Eigen::MatrixXd::Zero(11, 10);
  traj.controls = Eigen::MatrixXd::Zero(11, 3);
  EXPECT_EQ(cost_quadrature(traj, task), 0.0);
}

TEST(CostQuadrature, ConstantTorsoStateTrapezoid) {
  TaskSpec task = task_library("goto");
  task.q_weights = Eigen::VectorXd::Ones(10);
  PlannedTrajectory traj;
  traj.scheme = Scheme::Trapezoidal;
  const int nodes = 21;
  traj.dt = 2.0 / (nodes - 1);  // T = 2 s
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  x.head<6>() << 0.3, -0.1, 0.2, 0.4, -0.5, 0.1;  // torso entries only
  traj.states = x.transpose().replicate(nodes, 1);
  traj.controls = Eigen::MatrixXd::Zero(nodes, 3);
  EXPECT_NEAR(cost_quadrature(traj, task), 2.0 * x.squaredNorm(), 1e-12);
}

TEST(CostQuadrature, SimpsonMatchesTrapezoidOnConstants) {
  TaskSpec task = task_library("goto");
  const int nodes = 13;
  Eigen::VectorXd x(10);
  x << 0.3, -0.1, 0.2, 0.4, -0.5, 0.1, 2.0, 0.3, -1.0, 0.2;
  Eigen::VectorXd u = vec({0.5, -0.4, 0.2});
  PlannedTrajectory traj;
  traj.dt = 0.11;
  traj.states = x.transpose().replicate(nodes, 1);
  traj.controls = u.transpose().replicate(nodes, 1);
  traj.scheme = Scheme::Trapezoidal;
  const double trap = cost_quadrature(traj, task);
  traj.scheme = Scheme::HermiteSimpson;
  const double simpson = cost_quadrature(traj, task);
  EXPECT_NEAR(trap, simpson, 1e-12);
}

TEST(CostQuadrature, BallAngleWeightsAreForcedToZero) {
  TaskSpec task = task_library("goto");
  task.q_weights = Eigen::VectorXd::Ones(10);
  const Eigen::VectorXd q = task.effective_q();
  EXPECT_EQ(q[6], 0.0);
  EXPECT_EQ(q[8], 0.0);
  EXPECT_EQ(q[0], 1.0);
}

TEST(ObstacleClearance, AtCenter) {
  Ballbot model;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  const Obstacle obs{0.0, 0.0, 0.3};
  EXPECT_NEAR(obstacle_clearance(model, x, obs, 0.2), -0.25, 1e-15);
}

TEST(ObstacleClearance, GoalGeometry) {
  Ballbot model;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  x[6] = 8.0;
  x[8] = 24.0;  // -> (1 m, 3 m) with r = 0.125
  const Obstacle obs{1.0, 3.0, 0.3};
  EXPECT_NEAR(obstacle_clearance(model, x, obs, 0.2), -0.25, 1e-12);
}

TEST(ObstacleClearance, RotationInvariance) {
  Ballbot model;
  const double r = model.parameter("ball_radius");
  const Obstacle obs{0.4, -0.7, 0.5};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> ang(0.0, 6.28);
  for (int trial = 0; trial < 20; ++trial) {
    const double px = pos(rng), py = pos(rng), a = ang(rng);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
    x[6] = px / r;
    x[8] = py / r;
    const double c0 = obstacle_clearance(model, x, obs, 0.2);
    // Rotate the robot position about the obstacle center.
    const double rx = obs.cx + std::cos(a) * (px - obs.cx) -
                      std::sin(a) * (py - obs.cy);
    const double ry = obs.cy + std::sin(a) * (px - obs.cx) +
                      std::cos(a) * (py - obs.cy);
    x[6] = rx / r;
    x[8] = ry / r;
    EXPECT_NEAR(obstacle_clearance(model, x, obs, 0.2), c0, 1e-12);
  }
}

TEST(BuildProblem, BallbotGotoCounts) {
  TaskSpec task = task_library("goto");
  task.nodes = 100;
  const auto problem = build_problem(task, Scheme::HermiteSimpson);
  EXPECT_EQ(problem->num_equalities(), 99 * 10 + 10);
  EXPECT_EQ(problem->num_vars(), 100 * 13 + 1);
  EXPECT_EQ(problem->num_inequalities(), 0);
}

TEST(BuildProblem, OneObstacleAddsNRows) {
  TaskSpec task = task_library("one-obstacle");
  task.nodes = 50;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  EXPECT_EQ(problem->num_inequalities(), 50);
  TaskSpec two = task_library("two-obstacle");
  two.nodes = 50;
  EXPECT_EQ(build_problem(two, Scheme::Trapezoidal)->num_inequalities(), 100);
}

TEST(BuildProblem, RejectsInfeasibleTimeWindow) {
  TaskSpec task = task_library("goto");
  task.t_min = 3.0;
  task.t_max = 1.0;
  EXPECT_THROW(build_problem(task, Scheme::Euler), ContractViolation);
}

TEST(BuildProblem, TimeWindowBecomesDtBounds) {
  TaskSpec task = task_library("goto");
  task.nodes = 51;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  const int dt_idx = problem->layout().dt_index();
  EXPECT_NEAR(problem->var_lower()[dt_idx], 1.0 / 50, 1e-15);
  EXPECT_NEAR(problem->var_upper()[dt_idx], 3.5 / 50, 1e-15);
  // Initial state fixed through variable bounds.
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(problem->var_lower()[i], task.x1[i]);
    EXPECT_EQ(problem->var_upper()[i], task.x1[i]);
  }
}

// Sparsity oracle: dense finite differences at N=5. Every pattern entry
// must be numerically alive for some random y, and no numeric nonzero may
// fall outside the pattern.
TEST(BuildProblem, SparsityPatternMatchesDenseFiniteDifferences) {
  std::mt19937 rng(21);
  for (const char* task_name : {"two-obstacle", "quadrotor-cylinder"}) {
    for (Scheme scheme :
         {Scheme::Euler, Scheme::Trapezoidal, Scheme::HermiteSimpson}) {
      TaskSpec task = task_library(task_name);
      task.nodes = 5;
      const auto problem = build_problem(task, scheme);
      const int rows = problem->num_equalities();
      const int cols = problem->num_vars();

      Eigen::MatrixXd support = Eigen::MatrixXd::Zero(rows, cols);
      Eigen::MatrixXd ineq_support =
          Eigen::MatrixXd::Zero(problem->num_inequalities(), cols);
      for (int sample = 0; sample < 8; ++sample) {
        const Eigen::VectorXd y = random_decision_vector(*problem, rng);
        support = support.cwiseMax(
            fd_jacobian([&](const Eigen::VectorXd& z) {
              return problem->equalities(z);
            }, y).cwiseAbs());
        ineq_support = ineq_support.cwiseMax(
            fd_jacobian([&](const Eigen::VectorXd& z) {
              return problem->inequalities(z);
            }, y).cwiseAbs());
      }

      Eigen::MatrixXd in_pattern = Eigen::MatrixXd::Zero(rows, cols);
      for (const auto& [r, c] : problem->eq_pattern()) in_pattern(r, c) = 1.0;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          if (support(r, c) > 1e-8) {
            EXPECT_GT(in_pattern(r, c), 0.0)
                << task_name << " " << scheme_name(scheme) << " numeric"
                << " nonzero outside pattern at (" << r << "," << c << ")";
          }
        }
      }
      for (const auto& [r, c] : problem->eq_pattern()) {
        EXPECT_GT(support(r, c), 1e-8)
            << task_name << " " << scheme_name(scheme)
            << " dead pattern entry at (" << r << "," << c << ")";
      }

      Eigen::MatrixXd ineq_in_pattern =
          Eigen::MatrixXd::Zero(problem->num_inequalities(), cols);
      for (const auto& [r, c] : problem->ineq_pattern()) {
        ineq_in_pattern(r, c) = 1.0;
      }
      for (int r = 0; r < problem->num_inequalities(); ++r) {
        for (int c = 0; c < cols; ++c) {
          if (ineq_support(r, c) > 1e-8) {
            EXPECT_GT(ineq_in_pattern(r, c), 0.0)
                << "ineq nonzero outside pattern at (" << r << "," << c << ")";
          }
        }
      }
      for (const auto& [r, c] : problem->ineq_pattern()) {
        EXPECT_GT(ineq_support(r, c), 1e-8)
            << "dead ineq pattern entry at (" << r << "," << c << ")";
      }
    }
  }
}

// Hand-coded Jacobian values against dense finite differences.
TEST(BuildProblem, JacobianValuesMatchFiniteDifferences) {
  std::mt19937 rng(31);
  for (const char* task_name : {"two-obstacle", "quadrotor-cylinder"}) {
    for (Scheme scheme :
         {Scheme::Euler, Scheme::Trapezoidal, Scheme::HermiteSimpson}) {
      TaskSpec task = task_library(task_name);
      task.nodes = 5;
      const auto problem = build_problem(task, scheme);
      for (int sample = 0; sample < 3; ++sample) {
        const Eigen::VectorXd y = random_decision_vector(*problem, rng);

        std::vector<double> values;
        problem->eq_jacobian(y, values);
        const Eigen::MatrixXd hand =
            scatter(problem->eq_pattern(), values, problem->num_equalities(),
                    problem->num_vars());
        const Eigen::MatrixXd fd = fd_jacobian(
            [&](const Eigen::VectorXd& z) { return problem->equalities(z); },
            y);
        const double tol = 1e-5 * (1.0 + hand.cwiseAbs().maxCoeff());
        ASSERT_LT((hand - fd).cwiseAbs().maxCoeff(), tol)
            << task_name << " " << scheme_name(scheme);

        problem->ineq_jacobian(y, values);
        const Eigen::MatrixXd hand_g =
            scatter(problem->ineq_pattern(), values,
                    problem->num_inequalities(), problem->num_vars());
        const Eigen::MatrixXd fd_g = fd_jacobian(
            [&](const Eigen::VectorXd& z) { return problem->inequalities(z); },
            y);
        ASSERT_LT((hand_g - fd_g).cwiseAbs().maxCoeff(),
                  1e-5 * (1.0 + hand_g.cwiseAbs().maxCoeff()))
            << task_name << " " << scheme_name(scheme);
      }
    }
  }
}

TEST(BuildProblem, ObjectiveGradientMatchesFiniteDifferences) {
  std::mt19937 rng(41);
  for (const char* task_name : {"goto", "quadrotor-cylinder"}) {
    for (Scheme scheme :
         {Scheme::Euler, Scheme::Trapezoidal, Scheme::HermiteSimpson}) {
      TaskSpec task = task_library(task_name);
      task.nodes = 5;
      const auto problem = build_problem(task, scheme);
      for (int sample = 0; sample < 3; ++sample) {
        const Eigen::VectorXd y = random_decision_vector(*problem, rng);
        const Eigen::VectorXd hand = problem->objective_gradient(y);
        Eigen::VectorXd fd(y.size());
        Eigen::VectorXd yp = y, ym = y;
        for (int j = 0; j < y.size(); ++j) {
          const double h = fd_step(y[j]);
          yp[j] += h;
          ym[j] -= h;
          fd[j] =
              (problem->objective(yp) - problem->objective(ym)) / (2 * h);
          yp[j] = y[j];
          ym[j] = y[j];
        }
        ASSERT_LT((hand - fd).cwiseAbs().maxCoeff(),
                  1e-5 * (1.0 + hand.cwiseAbs().maxCoeff()))
            << task_name << " " << scheme_name(scheme);
      }
    }
  }
}

TEST(Initialize, ZeroStrategy) {
  TaskSpec task = task_library("goto");
  task.nodes = 7;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  const Eigen::VectorXd y = initialize(*problem, InitStrategy::Zero);
  EXPECT_EQ(y.head(y.size() - 1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(y[y.size() - 1], 0.5 * (1.0 + 3.5) / 6, 1e-15);
}

TEST(Initialize, LinearStrategyMidpoint) {
  TaskSpec task = task_library("goto");
  task.nodes = 3;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  const Eigen::VectorXd y = initialize(*problem, InitStrategy::Linear);
  const Eigen::VectorXd mid = problem->state_at(y, 1);
  EXPECT_TRUE(mid.isApprox(0.5 * task.xg));
  EXPECT_EQ(problem->control_at(y, 1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Initialize, IncrementalCopiesPriorAndPreservesObjective) {
  TaskSpec one = task_library("one-obstacle");
  one.nodes = 12;
  TaskSpec two = task_library("two-obstacle");
  two.nodes = 12;
  const auto problem_one = build_problem(one, Scheme::Trapezoidal);
  const auto problem_two = build_problem(two, Scheme::Trapezoidal);

  // Any prior trajectory works for the copy semantics.
  std::mt19937 rng(5);
  Eigen::VectorXd y_prior = random_decision_vector(*problem_one, rng);
  const PlannedTrajectory prior = problem_one->unpack(y_prior);
  const double prior_objective = problem_one->objective(y_prior);

  const Eigen::VectorXd y0 =
      initialize(*problem_two, InitStrategy::Incremental, &prior);
  EXPECT_TRUE(y0.isApprox(y_prior));
  EXPECT_NEAR(problem_two->objective(y0), prior_objective, 1e-12);
}

TEST(Initialize, IncrementalRequiresPrior) {
  TaskSpec task = task_library("two-obstacle");
  task.nodes = 8;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  EXPECT_THROW(initialize(*problem, InitStrategy::Incremental), MissingPrior);

  PlannedTrajectory wrong;
  wrong.scheme = Scheme::Trapezoidal;
  wrong.dt = 0.1;
  wrong.states = Eigen::MatrixXd::Zero(9, 10);
  wrong.controls = Eigen::MatrixXd::Zero(9, 3);
  EXPECT_THROW(initialize(*problem, InitStrategy::Incremental, &wrong),
               ContractViolation);
}

TEST(PackUnpack, RoundTripIsExact) {
  TaskSpec task = task_library("goto");
  task.nodes = 9;
  const auto problem = build_problem(task, Scheme::HermiteSimpson);
  std::mt19937 rng(17);
  const Eigen::VectorXd y = random_decision_vector(*problem, rng);
  EXPECT_TRUE(problem->pack(problem->unpack(y)) == y);
}

TEST(TaskLibrary, GotoMapsToMeters) {
  const TaskSpec task = task_library("goto");
  EXPECT_TRUE(task.obstacles.empty());
  const double r = task.model->parameter("ball_radius");
  EXPECT_NEAR(task.xg[6] * r, 1.0, 1e-12);
  EXPECT_NEAR(task.xg[8] * r, 3.0, 1e-12);
}
