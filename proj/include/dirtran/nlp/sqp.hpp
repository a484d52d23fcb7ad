#ifndef DIRTRAN_NLP_SQP_HPP
#define DIRTRAN_NLP_SQP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "dirtran/nlp/block_hessian.hpp"
#include "dirtran/nlp/problem.hpp"
#include "dirtran/nlp/qp.hpp"
#include "dirtran/nlp/reduction.hpp"

namespace dirtran {

namespace detail {

struct NlpPoint {
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd zeta;           // equalities
  Eigen::VectorXd g;              // inequalities
  std::vector<double> eq_values;  // Jacobian values (pattern-aligned)
  std::vector<double> ineq_values;
};

inline void evaluate_point(const NlpProblem& p, const Eigen::VectorXd& y,
                           bool with_jacobians, NlpPoint& point) {
  point.f = p.objective(y);
  point.grad = p.gradient(y);
  if (p.num_eq > 0) {
    point.zeta = p.equalities(y);
    if (with_jacobians) p.eq_jacobian(y, point.eq_values);
  }
  if (p.num_ineq > 0) {
    point.g = p.inequalities(y);
    if (with_jacobians) p.ineq_jacobian(y, point.ineq_values);
  }
}

inline double constraint_l1(const NlpProblem& p, const Eigen::VectorXd& zeta,
                            const Eigen::VectorXd& g) {
  double v = 0.0;
  if (p.num_eq > 0) v += zeta.cwiseAbs().sum();
  for (int i = 0; i < p.num_ineq; ++i) {
    v += std::max(0.0, p.ineq_lower[i] - g[i]);
    v += std::max(0.0, g[i] - p.ineq_upper[i]);
  }
  return v;
}

inline double constraint_inf(const NlpProblem& p, const Eigen::VectorXd& zeta,
                             const Eigen::VectorXd& g) {
  double v = 0.0;
  if (p.num_eq > 0) v = zeta.cwiseAbs().maxCoeff();
  for (int i = 0; i < p.num_ineq; ++i) {
    v = std::max(v, p.ineq_lower[i] - g[i]);
    v = std::max(v, g[i] - p.ineq_upper[i]);
  }
  return v;
}

/// Lagrangian gradient under the documented sign convention, bounds term
/// excluded (it is constant between two evaluation points).
inline Eigen::VectorXd lagrangian_gradient(const NlpProblem& p,
                                           const NlpPoint& point,
                                           const Multipliers& mult) {
  Eigen::VectorXd out = point.grad;
  if (p.num_eq > 0 && mult.eq.size() == p.num_eq) {
    add_jtv(p.eq_pattern, point.eq_values, mult.eq, 1.0, out);
  }
  if (p.num_ineq > 0 && mult.ineq.size() == p.num_ineq) {
    add_jtv(p.ineq_pattern, point.ineq_values, mult.ineq, -1.0, out);
  }
  return out;
}

/// KKT residual from cached evaluations. Bound multipliers of fixed
/// variables are overwritten so their stationarity rows close exactly.
inline double kkt_from_point(const NlpProblem& p, const Eigen::VectorXd& y,
                             const NlpPoint& point, Multipliers& mult) {
  Eigen::VectorXd stationarity = lagrangian_gradient(p, point, mult);
  if (mult.bounds.size() != p.num_vars) {
    mult.bounds = Eigen::VectorXd::Zero(p.num_vars);
  }
  for (int i = 0; i < p.num_vars; ++i) {
    if (p.var_lower[i] == p.var_upper[i]) {
      mult.bounds[i] = stationarity[i];
    }
  }
  stationarity -= mult.bounds;
  double r = stationarity.cwiseAbs().maxCoeff();
  r = std::max(r, constraint_inf(p, point.zeta, point.g));
  for (int i = 0; i < p.num_vars; ++i) {
    r = std::max(r, p.var_lower[i] - y[i]);
    r = std::max(r, y[i] - p.var_upper[i]);
    r = std::max(r, complementarity(y[i], p.var_lower[i], p.var_upper[i],
                                    mult.bounds[i]));
  }
  if (mult.ineq.size() == p.num_ineq) {
    for (int i = 0; i < p.num_ineq; ++i) {
      r = std::max(r, complementarity(point.g[i], p.ineq_lower[i],
                                      p.ineq_upper[i], mult.ineq[i]));
    }
  }
  return r;
}

/// Exact Lagrangian Hessian assembled from the problem's coordinate
/// evaluator (duplicates accumulate).
inline Eigen::SparseMatrix<double> exact_hessian(const NlpProblem& p,
                                                 const Eigen::VectorXd& y,
                                                 const Multipliers& mult) {
  std::vector<double> values;
  p.lagrangian_hessian(y, mult.eq, mult.ineq, values);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values.size());
  for (size_t k = 0; k < p.hess_pattern.size(); ++k) {
    triplets.emplace_back(p.hess_pattern[k].first, p.hess_pattern[k].second,
                          values[k]);
  }
  Eigen::SparseMatrix<double> h(p.num_vars, p.num_vars);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

/// H + sigma I in the free-variable space.
inline Eigen::SparseMatrix<double> damped_reduced_hessian(
    const Eigen::SparseMatrix<double>& h_full, const FreeVariableMap& map,
    double sigma) {
  Eigen::SparseMatrix<double> h = reduced_symmetric(h_full, map);
  if (sigma > 0.0) {
    Eigen::SparseMatrix<double> ridge(h.rows(), h.cols());
    ridge.setIdentity();
    h += sigma * ridge;
  }
  return h;
}

inline void report_iteration(const SolverOptions& opts, int iter,
                             const Eigen::VectorXd& y, double objective,
                             double feasibility, double kkt, double step) {
  if (opts.log) {
    char line[160];
    std::snprintf(line, sizeof(line), "%5d  %+.9e  %.3e  %.3e  %.3e\n", iter,
                  objective, feasibility, kkt, step);
    (*opts.log) << line;
  }
  if (opts.on_iteration) {
    IterationInfo info;
    info.iteration = iter;
    info.objective = objective;
    info.feasibility = feasibility;
    info.kkt = kkt;
    info.step_length = step;
    info.y = &y;
    opts.on_iteration(info);
  }
}

}  // namespace detail

namespace detail {

inline SolveResult solve_sqp_impl(const NlpProblem& p,
                                  const Eigen::VectorXd& y0,
                                  const SolverOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };
  p.validate();
  if (y0.size() != p.num_vars || !y0.allFinite()) {
    throw ContractViolation("solve_sqp: bad initial point");
  }

  Eigen::VectorXd y = y0.cwiseMax(p.var_lower).cwiseMin(p.var_upper);
  const auto map = detail::FreeVariableMap::build(p.var_lower, p.var_upper);
  const bool exact = static_cast<bool>(p.lagrangian_hessian);

  BlockHessian bfgs(p.num_vars, p.hessian_blocks, p.initial_block_hessians);
  QpWorkingSet working_set;
  Multipliers mult;
  mult.eq = Eigen::VectorXd::Zero(p.num_eq);
  mult.ineq = Eigen::VectorXd::Zero(p.num_ineq);
  mult.bounds = Eigen::VectorXd::Zero(p.num_vars);

  detail::NlpPoint point;
  detail::evaluate_point(p, y, true, point);

  // Rows whose violation cannot plausibly be removed by one step are folded
  // into the QP gradient as their l1 merit slope.
  const double fold_reach = 20.0;
  double penalty = 1.0;
  double sigma = 0.0;  // convexification ridge
  double last_step = 0.0;
  double last_merit = kInfinity;
  int stagnant = 0;
  int total_minor = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message = "iteration limit reached";
  int iter = 0;

  for (iter = 0; iter < opts.max_iterations; ++iter) {
    const double feasibility = detail::constraint_inf(p, point.zeta, point.g);
    const double kkt = detail::kkt_from_point(p, y, point, mult);
    detail::report_iteration(opts, iter, y, point.f, feasibility, kkt,
                             last_step);
    if (feasibility <= opts.feasibility_tol && kkt <= opts.optimality_tol) {
      status = SolveStatus::Optimal;
      message = "converged";
      break;
    }
    if (elapsed() > opts.max_seconds) {
      status = SolveStatus::MaxIterations;
      message = "time budget exhausted";
      break;
    }

    const Eigen::SparseMatrix<double> h_full =
        exact ? detail::exact_hessian(p, y, mult) : bfgs.matrix();
    double h_scale = 1.0;
    for (int i = 0; i < h_full.outerSize(); ++i) {
      h_scale = std::max(h_scale, std::abs(h_full.coeff(i, i)));
    }
    auto bump = [&](double s) {
      return s == 0.0 ? 1e-4 * h_scale : 10.0 * s;
    };

    QpData qp;
    qp.a_eq = detail::reduced_jacobian<Eigen::ColMajor>(
        p.num_eq, p.eq_pattern, point.eq_values, map);
    qp.b_eq = p.num_eq > 0 ? Eigen::VectorXd(-point.zeta)
                           : Eigen::VectorXd::Zero(0);
    qp.a_ineq = detail::reduced_jacobian<Eigen::RowMajor>(
        p.num_ineq, p.ineq_pattern, point.ineq_values, map);
    qp.d_lo.resize(map.free_count());
    qp.d_hi.resize(map.free_count());
    for (int i = 0; i < map.free_count(); ++i) {
      const int full = map.free_to_full[i];
      qp.d_lo[i] = p.var_lower[full] - y[full];
      qp.d_hi[i] = p.var_upper[full] - y[full];
    }

    Eigen::SparseMatrix<double> h_reduced;
    QpResult qp_result;
    Eigen::VectorXd d;
    Multipliers qp_mult;
    double viol1 = 0.0, merit0 = 0.0, directional = 0.0;
    bool direction_ready = false;
    for (int attempt = 0; attempt < 8 && !direction_ready; ++attempt) {
      h_reduced = detail::damped_reduced_hessian(h_full, map, sigma);
      qp.h = &h_reduced;
      qp.c = map.gather(point.grad);
      qp.ineq_lo.resize(p.num_ineq);
      qp.ineq_hi.resize(p.num_ineq);
      for (int i = 0; i < p.num_ineq; ++i) {
        qp.ineq_lo[i] = p.ineq_lower[i] - point.g[i];
        qp.ineq_hi[i] = p.ineq_upper[i] - point.g[i];
      }
      for (int i = 0; i < p.num_ineq; ++i) {
        const double row_l1 = qp.a_ineq.row(i).cwiseAbs().sum();
        const double reach = 0.9 * row_l1 * fold_reach;
        const bool lo_unreachable =
            std::isfinite(qp.ineq_lo[i]) && qp.ineq_lo[i] > reach;
        const bool hi_unreachable =
            std::isfinite(qp.ineq_hi[i]) && -qp.ineq_hi[i] > reach;
        if (lo_unreachable || hi_unreachable) {
          const double sign = lo_unreachable ? -penalty : penalty;
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                   qp.a_ineq, i);
               it; ++it) {
            qp.c[it.col()] += sign * it.value();
          }
          qp.ineq_lo[i] = -kInfinity;
          qp.ineq_hi[i] = kInfinity;
        }
      }

      const int qp_budget = 200 + 3 * (p.num_ineq + map.free_count() / 4);
      qp_result = solve_qp_active_set(qp, working_set, qp_budget);
      total_minor += qp_result.iterations;
      if (!qp_result.solved) {
        sigma = bump(sigma);
        if (attempt == 4) {
          if (!exact) bfgs.reset();
          working_set = QpWorkingSet{};
        }
        continue;
      }

      d = map.scatter(qp_result.d, p.num_vars);
      qp_mult.eq = qp_result.eq_mult;
      qp_mult.ineq = qp_result.ineq_mult;
      qp_mult.bounds = map.scatter(qp_result.bound_mult, p.num_vars);

      const double mult_scale = std::max(
          qp_mult.eq.size() ? qp_mult.eq.cwiseAbs().maxCoeff() : 0.0,
          qp_mult.ineq.size() ? qp_mult.ineq.cwiseAbs().maxCoeff() : 0.0);
      if (penalty < 1.2 * mult_scale) {
        penalty = std::min(2.0 * mult_scale + 1e-4, 1e10);
      }

      viol1 = detail::constraint_l1(p, point.zeta, point.g);
      merit0 = point.f + penalty * viol1;
      directional = point.grad.dot(d) - penalty * viol1;
      // An uphill direction means the convexification is too weak.
      if (directional > 1e-12 * (1.0 + std::abs(merit0)) &&
          d.cwiseAbs().maxCoeff() > 1e-14) {
        sigma = bump(sigma);
        continue;
      }
      if (directional > 0.0) directional = 0.0;
      direction_ready = true;
    }
    if (!direction_ready) {
      status = SolveStatus::NumericalFailure;
      message = "QP subproblem failed";
      break;
    }
    const double armijo_slack = 1e-14 * (1.0 + std::abs(merit0));

    double alpha = 1.0;
    bool accepted = false;
    detail::NlpPoint trial;
    Eigen::VectorXd y_trial;
    for (int backtrack = 0; backtrack < 32; ++backtrack) {
      y_trial = (y + alpha * d).cwiseMax(p.var_lower).cwiseMin(p.var_upper);
      bool finite = true;
      double merit_trial = 0.0;
      try {
        detail::evaluate_point(p, y_trial, false, trial);
        merit_trial =
            trial.f + penalty * detail::constraint_l1(p, trial.zeta, trial.g);
        finite = std::isfinite(merit_trial);
      } catch (const Error&) {
        finite = false;
      }
      if (finite &&
          merit_trial <= merit0 + 0.1 * alpha * directional + armijo_slack) {
        accepted = true;
        break;
      }

      // Second-order correction: restore the constraints at the full-step
      // trial point with a least-norm correction through the current
      // Jacobian, countering the merit's curvature bias (Maratos effect).
      if (backtrack == 0 && finite && p.num_eq > 0) {
        const int nf = map.free_count();
        const int n_active = static_cast<int>(working_set.rows.size());
        const int dim = nf + p.num_eq + n_active;
        std::vector<Eigen::Triplet<double>> triplets;
        for (int i = 0; i < nf; ++i) triplets.emplace_back(i, i, 1.0);
        for (int k = 0; k < qp.a_eq.outerSize(); ++k) {
          for (Eigen::SparseMatrix<double>::InnerIterator it(qp.a_eq, k); it;
               ++it) {
            triplets.emplace_back(nf + static_cast<int>(it.row()),
                                  static_cast<int>(it.col()), it.value());
            triplets.emplace_back(static_cast<int>(it.col()),
                                  nf + static_cast<int>(it.row()), it.value());
          }
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        rhs.segment(nf, p.num_eq) = -trial.zeta;
        for (int a = 0; a < n_active; ++a) {
          const auto& [row, side] = working_set.rows[a];
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                   qp.a_ineq, row);
               it; ++it) {
            triplets.emplace_back(nf + p.num_eq + a,
                                  static_cast<int>(it.col()), it.value());
            triplets.emplace_back(static_cast<int>(it.col()),
                                  nf + p.num_eq + a, it.value());
          }
          const double target = side == ActiveSide::Lower
                                    ? p.ineq_lower[row]
                                    : p.ineq_upper[row];
          rhs[nf + p.num_eq + a] = target - trial.g[row];
        }
        for (int i = nf; i < dim; ++i) triplets.emplace_back(i, i, -1e-10);
        Eigen::SparseMatrix<double> soc(dim, dim);
        soc.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
        ldlt.compute(soc);
        if (ldlt.info() == Eigen::Success) {
          const Eigen::VectorXd correction = ldlt.solve(rhs).head(nf);
          if (correction.allFinite()) {
            const Eigen::VectorXd y_soc =
                (y + d + map.scatter(correction, p.num_vars))
                    .cwiseMax(p.var_lower)
                    .cwiseMin(p.var_upper);
            detail::NlpPoint soc_point;
            bool soc_finite = true;
            double soc_merit = 0.0;
            try {
              detail::evaluate_point(p, y_soc, false, soc_point);
              soc_merit = soc_point.f +
                          penalty * detail::constraint_l1(p, soc_point.zeta,
                                                          soc_point.g);
              soc_finite = std::isfinite(soc_merit);
            } catch (const Error&) {
              soc_finite = false;
            }
            if (soc_finite &&
                soc_merit <= merit0 + 0.1 * directional + armijo_slack) {
              y_trial = y_soc;
              trial = std::move(soc_point);
              accepted = true;
              break;
            }
          }
        }
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      sigma = bump(sigma);
      if (++stagnant >= 8 || sigma > 1e10 * h_scale) {
        status = feasibility > std::max(1e3 * opts.feasibility_tol, 1e-4)
                     ? SolveStatus::Infeasible
                     : SolveStatus::NumericalFailure;
        message = "no further progress";
        break;
      }
      continue;
    }
    if (alpha == 1.0 && sigma > 0.0) {
      sigma = sigma < 1e-10 * h_scale ? 0.0 : sigma / 3.0;
    }

    const double merit_new =
        trial.f + penalty * detail::constraint_l1(p, trial.zeta, trial.g);
    if (std::abs(last_merit - merit_new) <=
        1e-12 * (1.0 + std::abs(merit_new))) {
      if (++stagnant >= 8) {
        status = feasibility > std::max(1e3 * opts.feasibility_tol, 1e-4)
                     ? SolveStatus::Infeasible
                     : SolveStatus::NumericalFailure;
        message = "no further progress";
        break;
      }
    } else {
      stagnant = 0;
    }
    last_merit = merit_new;

    detail::NlpPoint next = std::move(trial);
    if (p.num_eq > 0) p.eq_jacobian(y_trial, next.eq_values);
    if (p.num_ineq > 0) p.ineq_jacobian(y_trial, next.ineq_values);
    if (!exact) {
      // Damped BFGS on the Lagrangian gradient difference at fixed new
      // multipliers.
      const Eigen::VectorXd lag_old =
          detail::lagrangian_gradient(p, point, qp_mult);
      const Eigen::VectorXd lag_new =
          detail::lagrangian_gradient(p, next, qp_mult);
      bfgs.update(y_trial - y, lag_new - lag_old);
    }

    y = y_trial;
    point = std::move(next);
    mult = qp_mult;
    last_step = alpha;
  }

  SolveResult result;
  result.status = status;
  result.message = message;
  result.y = y;
  result.objective = point.f;
  result.iterations = iter;
  result.minor_iterations = total_minor;
  result.multipliers = mult;
  result.kkt_residual = detail::kkt_from_point(p, y, point, result.multipliers);
  result.max_violation = detail::constraint_inf(p, point.zeta, point.g);
  result.wall_seconds = elapsed();
  return result;
}

}  // namespace detail

/// Sequential quadratic programming with an l1 merit line search. Major
/// iterations linearize the problem and solve a convex QP subproblem
/// (minor iterations of an active-set method) for the step; a second-order
/// correction counters the merit function's curvature bias near the
/// constraint manifold. The Hessian model is the problem's exact Lagrangian
/// Hessian with an adaptive convexification ridge when available, otherwise
/// a block-diagonal damped BFGS approximation. Constraint rows are
/// internally equilibrated; reported residuals refer to the original
/// problem.
inline SolveResult solve_sqp(const NlpProblem& p, const Eigen::VectorXd& y0,
                             const SolverOptions& opts = {}) {
  p.validate();
  if (y0.size() != p.num_vars || !y0.allFinite()) {
    throw ContractViolation("solve_sqp: bad initial point");
  }
  const Eigen::VectorXd y_start =
      y0.cwiseMax(p.var_lower).cwiseMin(p.var_upper);
  detail::RowScaling scaling;
  const NlpProblem scaled = detail::make_row_scaled(p, y_start, scaling);
  SolverOptions impl_opts = opts;
  impl_opts.feasibility_tol = opts.feasibility_tol * scaling.eq_min;
  SolveResult result = detail::solve_sqp_impl(scaled, y0, impl_opts);
  result.multipliers.eq =
      scaling.eq.cwiseProduct(result.multipliers.eq);
  result.multipliers.ineq =
      scaling.ineq.cwiseProduct(result.multipliers.ineq);
  result.kkt_residual = kkt_residual(p, result.y, result.multipliers);
  result.max_violation = max_constraint_violation(p, result.y);
  const bool passes = result.max_violation <= opts.feasibility_tol &&
                      result.kkt_residual <= opts.optimality_tol;
  if (result.status == SolveStatus::Optimal && !passes) {
    result.status = SolveStatus::NumericalFailure;
    result.message = "post-solve verification failed";
  } else if (result.status != SolveStatus::Optimal && passes) {
    result.status = SolveStatus::Optimal;
    result.message = "converged";
  }
  return result;
}

}  // namespace dirtran

#endif  // DIRTRAN_NLP_SQP_HPP
