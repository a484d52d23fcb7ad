#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "dirtran/bench/tasks.hpp"
#include "dirtran/nlp/ipm.hpp"
#include "dirtran/nlp/sqp.hpp"
#include "dirtran/transcription.hpp"

using namespace dirtran;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// min y^2 s.t. y >= 1, as a general inequality row.
NlpProblem scalar_bound_problem() {
  NlpProblem p;
  p.num_vars = 1;
  p.num_ineq = 1;
  p.objective = [](const Eigen::VectorXd& y) { return y[0] * y[0]; };
  p.gradient = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, 2.0 * y[0]);
  };
  p.inequalities = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, y[0]);
  };
  p.ineq_pattern = {{0, 0}};
  p.ineq_jacobian = [](const Eigen::VectorXd&, std::vector<double>& v) {
    v.assign(1, 1.0);
  };
  p.ineq_lower = Eigen::VectorXd::Constant(1, 1.0);
  p.ineq_upper = Eigen::VectorXd::Constant(1, kInfinity);
  p.var_lower = Eigen::VectorXd::Constant(1, -kInfinity);
  p.var_upper = Eigen::VectorXd::Constant(1, kInfinity);
  return p;
}

// min ||y||^2 s.t. y1 + y2 = 1.
NlpProblem symmetric_equality_problem() {
  NlpProblem p;
  p.num_vars = 2;
  p.num_eq = 1;
  p.objective = [](const Eigen::VectorXd& y) { return y.squaredNorm(); };
  p.gradient = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd(2.0 * y);
  };
  p.equalities = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, y[0] + y[1] - 1.0);
  };
  p.eq_pattern = {{0, 0}, {0, 1}};
  p.eq_jacobian = [](const Eigen::VectorXd&, std::vector<double>& v) {
    v.assign(2, 1.0);
  };
  p.var_lower = Eigen::VectorXd::Constant(2, -kInfinity);
  p.var_upper = Eigen::VectorXd::Constant(2, kInfinity);
  return p;
}

NlpProblem rosenbrock_problem() {
  NlpProblem p;
  p.num_vars = 2;
  p.objective = [](const Eigen::VectorXd& y) {
    const double a = 1.0 - y[0];
    const double b = y[1] - y[0] * y[0];
    return a * a + 100.0 * b * b;
  };
  p.gradient = [](const Eigen::VectorXd& y) {
    Eigen::VectorXd g(2);
    const double b = y[1] - y[0] * y[0];
    g[0] = -2.0 * (1.0 - y[0]) - 400.0 * y[0] * b;
    g[1] = 200.0 * b;
    return g;
  };
  p.var_lower = Eigen::VectorXd::Constant(2, -kInfinity);
  p.var_upper = Eigen::VectorXd::Constant(2, kInfinity);
  return p;
}

// min c'y s.t. y >= 0 (bounds), y1 + y2 >= 1.
NlpProblem corner_lp() {
  NlpProblem p;
  p.num_vars = 2;
  p.num_ineq = 1;
  p.objective = [](const Eigen::VectorXd& y) { return y[0] + y[1]; };
  p.gradient = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(2, 1.0);
  };
  p.inequalities = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, y[0] + y[1]);
  };
  p.ineq_pattern = {{0, 0}, {0, 1}};
  p.ineq_jacobian = [](const Eigen::VectorXd&, std::vector<double>& v) {
    v.assign(2, 1.0);
  };
  p.ineq_lower = Eigen::VectorXd::Constant(1, 1.0);
  p.ineq_upper = Eigen::VectorXd::Constant(1, kInfinity);
  p.var_lower = Eigen::VectorXd::Zero(2);
  p.var_upper = Eigen::VectorXd::Constant(2, kInfinity);
  return p;
}

}  // namespace

TEST(Sqp, ActiveScalarBound) {
  const NlpProblem p = scalar_bound_problem();
  const SolveResult r = solve_sqp(p, vec({5.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], 1.0, 1e-7);
  EXPECT_NEAR(r.objective, 1.0, 1e-6);
  EXPECT_LE(kkt_residual(p, r.y, r.multipliers), 1e-6);
}

TEST(Sqp, SymmetricEqualityQp) {
  const NlpProblem p = symmetric_equality_problem();
  const SolveResult r = solve_sqp(p, vec({3.0, -2.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], 0.5, 1e-8);
  EXPECT_NEAR(r.y[1], 0.5, 1e-8);
}

TEST(Sqp, Rosenbrock) {
  const NlpProblem p = rosenbrock_problem();
  const SolveResult r = solve_sqp(p, vec({-1.2, 1.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], 1.0, 1e-6);
  EXPECT_NEAR(r.y[1], 1.0, 1e-6);
}

TEST(Sqp, MaxIterationsStatus) {
  const NlpProblem p = rosenbrock_problem();
  SolverOptions opts;
  opts.max_iterations = 3;
  const SolveResult r = solve_sqp(p, vec({-1.2, 1.0}), opts);
  EXPECT_EQ(r.status, SolveStatus::MaxIterations);
}

TEST(Ipm, ActiveScalarBoundInteriorIterates) {
  const NlpProblem p = scalar_bound_problem();
  SolverOptions opts;
  std::vector<double> iterates;
  opts.on_iteration = [&](const IterationInfo& info) {
    iterates.push_back((*info.y)[0]);
  };
  const SolveResult r = solve_ipm(p, vec({5.0}), opts);
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], 1.0, 1e-5);
  EXPECT_NEAR(r.objective, 1.0, 1e-5);
  ASSERT_GT(iterates.size(), 2u);
  for (double y : iterates) EXPECT_GT(y, 1.0 - 1e-9);
}

TEST(Ipm, EqualityQpProjection) {
  NlpProblem p = symmetric_equality_problem();
  // min 1/2 ||y||^2 s.t. y1 + y2 = 2 -> (1, 1).
  p.objective = [](const Eigen::VectorXd& y) { return 0.5 * y.squaredNorm(); };
  p.gradient = [](const Eigen::VectorXd& y) { return Eigen::VectorXd(y); };
  p.equalities = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, y[0] + y[1] - 2.0);
  };
  const SolveResult r = solve_ipm(p, vec({0.0, 0.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.y[0], 1.0, 1e-7);
  EXPECT_NEAR(r.y[1], 1.0, 1e-7);
}

TEST(Ipm, CornerLp) {
  // Feasible vertices (1,0) and (0,1) both give value 1; (0,0) violates
  // the coupling row, so the optimal value is 1.
  const NlpProblem p = corner_lp();
  const SolveResult r = solve_ipm(p, vec({2.0, 2.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.objective, 1.0, 1e-5);
  EXPECT_LE(max_constraint_violation(p, r.y), 1e-6);
}

TEST(Sqp, CornerLp) {
  const NlpProblem p = corner_lp();
  const SolveResult r = solve_sqp(p, vec({2.0, 2.0}));
  ASSERT_EQ(r.status, SolveStatus::Optimal) << r.message;
  EXPECT_NEAR(r.objective, 1.0, 1e-6);
}

TEST(KktResidual, UnconstrainedQuadraticAtMinimum) {
  NlpProblem p = rosenbrock_problem();
  p.objective = [](const Eigen::VectorXd& y) { return y.squaredNorm(); };
  p.gradient = [](const Eigen::VectorXd& y) { return Eigen::VectorXd(2 * y); };
  Multipliers mult;
  EXPECT_EQ(kkt_residual(p, vec({0.0, 0.0}), mult), 0.0);
}

TEST(KktResidual, HandSolvedActiveBound) {
  const NlpProblem p = scalar_bound_problem();
  Multipliers mult;
  mult.ineq = Eigen::VectorXd::Constant(1, 2.0);
  // Stationarity 2y - mu = 0 and complementarity mu (y - 1) = 0 at y = 1.
  EXPECT_NEAR(kkt_residual(p, vec({1.0}), mult), 0.0, 1e-15);
}

TEST(KktResidual, LowerBoundedByEqualityViolation) {
  const NlpProblem p = symmetric_equality_problem();
  Multipliers mult;
  mult.eq = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd y = vec({3.0, 1.0});  // violation 3
  EXPECT_GE(kkt_residual(p, y, mult), 3.0);
}

// Random strictly convex equality-constrained QPs against the closed-form
// KKT solution.
TEST(Solvers, AgreeWithClosedFormOnConvexQps) {
  std::mt19937 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6, me = 2;
    Eigen::MatrixXd root(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) root(i, j) = gauss(rng);
    const Eigen::MatrixXd h =
        root.transpose() * root + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = gauss(rng);
    Eigen::MatrixXd a(me, n);
    for (int i = 0; i < me; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::VectorXd b(me);
    for (int i = 0; i < me; ++i) b[i] = gauss(rng);

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
    kkt.topLeftCorner(n, n) = h;
    kkt.topRightCorner(n, me) = a.transpose();
    kkt.bottomLeftCorner(me, n) = a;
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -c;
    rhs.tail(me) = b;
    const Eigen::VectorXd closed_form = kkt.lu().solve(rhs).head(n);

    NlpProblem p;
    p.num_vars = n;
    p.num_eq = me;
    p.objective = [h, c](const Eigen::VectorXd& y) {
      return 0.5 * y.dot(h * y) + c.dot(y);
    };
    p.gradient = [h, c](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(h * y + c);
    };
    p.equalities = [a, b](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(a * y - b);
    };
    for (int i = 0; i < me; ++i)
      for (int j = 0; j < n; ++j) p.eq_pattern.emplace_back(i, j);
    p.eq_jacobian = [a, me, n](const Eigen::VectorXd&,
                               std::vector<double>& v) {
      v.resize(me * n);
      int k = 0;
      for (int i = 0; i < me; ++i)
        for (int j = 0; j < n; ++j) v[k++] = a(i, j);
    };
    p.var_lower = Eigen::VectorXd::Constant(n, -kInfinity);
    p.var_upper = Eigen::VectorXd::Constant(n, kInfinity);

    SolverOptions opts;
    opts.feasibility_tol = 1e-10;
    opts.optimality_tol = 1e-10;
    const SolveResult sqp = solve_sqp(p, Eigen::VectorXd::Zero(n), opts);
    const SolveResult ipm = solve_ipm(p, Eigen::VectorXd::Zero(n), opts);
    ASSERT_EQ(sqp.status, SolveStatus::Optimal) << trial << " " << sqp.message;
    ASSERT_EQ(ipm.status, SolveStatus::Optimal) << trial << " " << ipm.message;
    ASSERT_LT((sqp.y - closed_form).cwiseAbs().maxCoeff(), 1e-8) << trial;
    ASSERT_LT((ipm.y - closed_form).cwiseAbs().maxCoeff(), 1e-8) << trial;
  }
}

TEST(Solvers, DeterministicIterateSequences) {
  TaskSpec task = task_library("goto");
  task.nodes = 12;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  const NlpProblem p = problem->to_nlp();
  const Eigen::VectorXd y0 = initialize(*problem, InitStrategy::Linear);

  for (SolverKind kind : {SolverKind::SQP, SolverKind::IPM}) {
    std::vector<Eigen::VectorXd> first, second;
    SolverOptions opts;
    opts.max_iterations = 25;
    opts.on_iteration = [&](const IterationInfo& info) {
      first.push_back(*info.y);
    };
    solve_nlp(kind, p, y0, opts);
    opts.on_iteration = [&](const IterationInfo& info) {
      second.push_back(*info.y);
    };
    solve_nlp(kind, p, y0, opts);
    ASSERT_EQ(first.size(), second.size()) << solver_name(kind);
    for (size_t i = 0; i < first.size(); ++i) {
      ASSERT_TRUE(first[i] == second[i])
          << solver_name(kind) << " iterate " << i;
    }
  }
}

TEST(Solvers, SolveBallbotGotoSmall) {
  TaskSpec task = task_library("goto");
  task.nodes = 20;
  const auto problem = build_problem(task, Scheme::Trapezoidal);
  const NlpProblem p = problem->to_nlp();
  const Eigen::VectorXd y0 = initialize(*problem, InitStrategy::Linear);
  for (SolverKind kind : {SolverKind::SQP, SolverKind::IPM}) {
    const SolveResult r = solve_nlp(kind, p, y0);
    ASSERT_EQ(r.status, SolveStatus::Optimal)
        << solver_name(kind) << ": " << r.message;
    EXPECT_LE(r.max_violation, 1e-6) << solver_name(kind);
    EXPECT_LE(r.kkt_residual, 1e-6) << solver_name(kind);
    // Terminal condition holds at the solution.
    const PlannedTrajectory traj = problem->unpack(r.y);
    EXPECT_LT((traj.states.row(19).transpose() - task.xg).cwiseAbs().maxCoeff(),
              1e-6);
    const double total = traj.total_time();
    EXPECT_GE(total, task.t_min - 1e-9);
    EXPECT_LE(total, task.t_max + 1e-9);
  }
}

// Per-iteration cost must scale subquadratically with the node count.
TEST(Solvers, PerIterationCostScalesSubquadratically) {
  auto per_iteration_seconds = [](SolverKind kind, int nodes) {
    TaskSpec task = task_library("goto");
    task.nodes = nodes;
    const auto problem = build_problem(task, Scheme::Trapezoidal);
    const NlpProblem p = problem->to_nlp();
    const Eigen::VectorXd y0 = initialize(*problem, InitStrategy::Linear);
    SolverOptions opts;
    opts.max_iterations = 8;
    double best = kInfinity;
    for (int rep = 0; rep < 3; ++rep) {
      const SolveResult r = solve_nlp(kind, p, y0, opts);
      best = std::min(best, r.wall_seconds / std::max(1, r.iterations));
    }
    return best;
  };
  for (SolverKind kind : {SolverKind::SQP, SolverKind::IPM}) {
    const double t25 = per_iteration_seconds(kind, 25);
    const double t100 = per_iteration_seconds(kind, 100);
    // Quadratic scaling would give a factor of 16.
    EXPECT_LT(t100 / t25, 12.0) << solver_name(kind);
  }
}
