#ifndef DIRTRAN_NLP_PROBLEM_HPP
#define DIRTRAN_NLP_PROBLEM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dirtran/errors.hpp"

namespace dirtran {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Coordinate list of structurally nonzero Jacobian entries.
using SparsityPattern = std::vector<std::pair<int, int>>;

/// Sparse nonlinear program
///
///   min f0(y)   s.t.  zeta(y) = 0,
///                     ineq_lower <= g(y) <= ineq_upper,
///                     var_lower  <= y    <= var_upper.
///
/// Jacobian evaluators fill a value vector aligned with the corresponding
/// sparsity pattern. All evaluators must be pure functions of y.
struct NlpProblem {
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> equalities;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> inequalities;
  SparsityPattern eq_pattern;
  SparsityPattern ineq_pattern;
  std::function<void(const Eigen::VectorXd&, std::vector<double>&)>
      eq_jacobian;
  std::function<void(const Eigen::VectorXd&, std::vector<double>&)>
      ineq_jacobian;

  Eigen::VectorXd ineq_lower, ineq_upper;
  Eigen::VectorXd var_lower, var_upper;

  /// Optional quasi-Newton block structure: disjoint groups of variable
  /// indices whose Lagrangian curvature is maintained per group. Empty means
  /// one dense block over all variables.
  std::vector<std::vector<int>> hessian_blocks;
  /// Optional initial Hessian per block (aligned with hessian_blocks).
  std::vector<Eigen::MatrixXd> initial_block_hessians;
  /// Optional exact Lagrangian Hessian
  ///   grad^2 f + sum_i eq_mult_i grad^2 zeta_i - sum_j ineq_mult_j grad^2 g_j
  /// as coordinate values aligned with hess_pattern (duplicates accumulate).
  /// Solvers prefer it over the quasi-Newton model when present.
  SparsityPattern hess_pattern;
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                     const Eigen::VectorXd&, std::vector<double>&)>
      lagrangian_hessian;

  void validate() const {
    if (num_vars < 1) throw ContractViolation("NlpProblem: num_vars < 1");
    if (!objective || !gradient) {
      throw ContractViolation("NlpProblem: objective/gradient missing");
    }
    if (num_eq > 0 && (!equalities || !eq_jacobian)) {
      throw ContractViolation("NlpProblem: equality evaluators missing");
    }
    if (num_ineq > 0 && (!inequalities || !ineq_jacobian)) {
      throw ContractViolation("NlpProblem: inequality evaluators missing");
    }
    if (ineq_lower.size() != num_ineq || ineq_upper.size() != num_ineq) {
      throw ContractViolation("NlpProblem: inequality bounds size mismatch");
    }
    if (var_lower.size() != num_vars || var_upper.size() != num_vars) {
      throw ContractViolation("NlpProblem: variable bounds size mismatch");
    }
    if ((ineq_lower.array() > ineq_upper.array()).any() ||
        (var_lower.array() > var_upper.array()).any()) {
      throw ContractViolation("NlpProblem: bounds must satisfy min <= max");
    }
    for (const auto& [r, c] : eq_pattern) {
      if (r < 0 || r >= num_eq || c < 0 || c >= num_vars) {
        throw ContractViolation("NlpProblem: eq pattern entry out of range");
      }
    }
    for (const auto& [r, c] : ineq_pattern) {
      if (r < 0 || r >= num_ineq || c < 0 || c >= num_vars) {
        throw ContractViolation("NlpProblem: ineq pattern entry out of range");
      }
    }
  }
};

enum class SolveStatus { Optimal, MaxIterations, NumericalFailure, Infeasible };

inline std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

/// Multiplier estimates. Sign convention, matching the stationarity
/// residual grad f + Jeq' * eq - Jineq' * ineq - bounds:
/// a positive inequality/bound multiplier pushes against the lower side,
/// a negative one against the upper side.
struct Multipliers {
  Eigen::VectorXd eq;
  Eigen::VectorXd ineq;
  Eigen::VectorXd bounds;
};

/// Per-iteration report, also the payload of the optional log line.
struct IterationInfo {
  int iteration = 0;
  double objective = 0.0;
  double feasibility = 0.0;  // max constraint violation (inf-norm)
  double kkt = 0.0;
  double step_length = 0.0;
  const Eigen::VectorXd* y = nullptr;
};

struct SolverOptions {
  double feasibility_tol = 1e-6;
  double optimality_tol = 1e-6;
  int max_iterations = 1000;
  /// Wall-clock budget; exceeding it returns MaxIterations. Infinite by
  /// default, which keeps solves bitwise deterministic.
  double max_seconds = kInfinity;

  /// Machine-parseable iteration log: fixed columns
  /// "iter objective feasibility kkt step".
  std::ostream* log = nullptr;
  std::function<void(const IterationInfo&)> on_iteration;

  // Interior-point internals.
  double barrier_initial = 0.1;
  double barrier_reduction = 5.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd y;
  double objective = 0.0;
  double kkt_residual = kInfinity;
  double max_violation = kInfinity;
  int iterations = 0;
  int minor_iterations = 0;
  double wall_seconds = 0.0;
  Multipliers multipliers;
  std::string message;
};

/// Max violation of equalities, inequality bounds and variable bounds.
inline double max_constraint_violation(const NlpProblem& p,
                                       const Eigen::VectorXd& y) {
  double v = 0.0;
  if (p.num_eq > 0) {
    v = std::max(v, p.equalities(y).cwiseAbs().maxCoeff());
  }
  if (p.num_ineq > 0) {
    const Eigen::VectorXd g = p.inequalities(y);
    for (int i = 0; i < p.num_ineq; ++i) {
      v = std::max(v, p.ineq_lower[i] - g[i]);
      v = std::max(v, g[i] - p.ineq_upper[i]);
    }
  }
  for (int i = 0; i < p.num_vars; ++i) {
    v = std::max(v, p.var_lower[i] - y[i]);
    v = std::max(v, y[i] - p.var_upper[i]);
  }
  return v;
}

namespace detail {

inline void add_jacobian_transpose_product(const SparsityPattern& pattern,
                                           const std::vector<double>& values,
                                           const Eigen::VectorXd& multiplier,
                                           double sign, Eigen::VectorXd& out) {
  for (size_t k = 0; k < pattern.size(); ++k) {
    out[pattern[k].second] += sign * values[k] * multiplier[pattern[k].first];
  }
}

/// Complementarity product for one (value, lower, upper, multiplier) row
/// under the documented sign convention.
inline double complementarity(double value, double lo, double hi, double mu) {
  if (mu == 0.0) return 0.0;
  if (lo == hi) return 0.0;  // fixed row: multiplier is free
  if (mu > 0.0) {
    return std::isfinite(lo) ? std::abs(mu * (value - lo)) : std::abs(mu);
  }
  return std::isfinite(hi) ? std::abs(mu * (hi - value)) : std::abs(mu);
}

}  // namespace detail

/// Inf-norm KKT residual: stationarity, primal feasibility violations and
/// complementarity products, evaluated from scratch.
inline double kkt_residual(const NlpProblem& p, const Eigen::VectorXd& y,
                           const Multipliers& mult) {
  Eigen::VectorXd stationarity = p.gradient(y);
  Eigen::VectorXd g;
  if (p.num_eq > 0 && mult.eq.size() == p.num_eq) {
    std::vector<double> values(p.eq_pattern.size());
    p.eq_jacobian(y, values);
    detail::add_jacobian_transpose_product(p.eq_pattern, values, mult.eq, 1.0,
                                           stationarity);
  }
  if (p.num_ineq > 0) {
    g = p.inequalities(y);
    if (mult.ineq.size() == p.num_ineq) {
      std::vector<double> values(p.ineq_pattern.size());
      p.ineq_jacobian(y, values);
      detail::add_jacobian_transpose_product(p.ineq_pattern, values, mult.ineq,
                                             -1.0, stationarity);
    }
  }
  if (mult.bounds.size() == p.num_vars) {
    stationarity -= mult.bounds;
  }
  double r = stationarity.cwiseAbs().maxCoeff();
  r = std::max(r, max_constraint_violation(p, y));
  if (mult.ineq.size() == p.num_ineq) {
    for (int i = 0; i < p.num_ineq; ++i) {
      r = std::max(r, detail::complementarity(g[i], p.ineq_lower[i],
                                              p.ineq_upper[i], mult.ineq[i]));
    }
  }
  if (mult.bounds.size() == p.num_vars) {
    for (int i = 0; i < p.num_vars; ++i) {
      r = std::max(r, detail::complementarity(y[i], p.var_lower[i],
                                              p.var_upper[i],
                                              mult.bounds[i]));
    }
  }
  return r;
}

}  // namespace dirtran

#endif  // DIRTRAN_NLP_PROBLEM_HPP
