#ifndef DIRTRAN_NLP_IPM_HPP
#define DIRTRAN_NLP_IPM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <chrono>

#include "dirtran/nlp/block_hessian.hpp"
#include "dirtran/nlp/problem.hpp"
#include "dirtran/nlp/reduction.hpp"
#include "dirtran/nlp/sqp.hpp"

namespace dirtran {

namespace detail {

inline double push_inside(double value, double lo, double hi) {
  double v = value;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const double pad = std::min(1e-2 * (1.0 + std::abs(lo)), 0.25 * (hi - lo));
    v = std::min(std::max(v, lo + pad), hi - pad);
  } else if (std::isfinite(lo)) {
    v = std::max(v, lo + 1e-2 * (1.0 + std::abs(lo)));
  } else if (std::isfinite(hi)) {
    v = std::min(v, hi - 1e-2 * (1.0 + std::abs(hi)));
  }
  return v;
}

}  // namespace detail

namespace detail {

/// One interior-point run; see solve_ipm below. With use_shift set, bounds
/// of initially violated inequality rows are temporarily shifted and
/// restored in stages (a feasibility homotopy) before the barrier descends.
inline SolveResult solve_ipm_attempt(const NlpProblem& p,
                                     const Eigen::VectorXd& y0,
                                     const SolverOptions& opts,
                                     bool use_shift) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };
  p.validate();
  if (y0.size() != p.num_vars || !y0.allFinite()) {
    throw ContractViolation("solve_ipm: bad initial point");
  }

  const auto map = detail::FreeVariableMap::build(p.var_lower, p.var_upper);
  const int nf = map.free_count();
  const int me = p.num_eq;
  const int mi = p.num_ineq;

  // Strictly interior primal start.
  Eigen::VectorXd y = y0.cwiseMax(p.var_lower).cwiseMin(p.var_upper);
  for (int i = 0; i < nf; ++i) {
    const int full = map.free_to_full[i];
    y[full] = detail::push_inside(y[full], p.var_lower[full],
                                  p.var_upper[full]);
  }

  detail::NlpPoint point;
  detail::evaluate_point(p, y, true, point);

  double mu = opts.barrier_initial;
  const double mu_floor = std::min(1e-9, opts.optimality_tol / 10.0);

  // Rows violated at the start get temporarily shifted bounds, kept
  // pressed a bounded allowance into the violated region: the resulting
  // slack inconsistency is small enough for bounded multipliers yet
  // steadily squeezes the iterates toward feasibility.
  Eigen::VectorXd shift_lo = Eigen::VectorXd::Zero(mi);
  Eigen::VectorXd shift_hi = Eigen::VectorXd::Zero(mi);
  for (int j = 0; j < mi; ++j) {
    if (std::isfinite(p.ineq_lower[j])) {
      shift_lo[j] = std::max(0.0, p.ineq_lower[j] - point.g[j]);
    }
    if (std::isfinite(p.ineq_upper[j])) {
      shift_hi[j] = std::max(0.0, point.g[j] - p.ineq_upper[j]);
    }
  }
  double shift_factor = use_shift ? 1.0 : 0.0;
  bool any_shift = false;
  for (int j = 0; j < mi; ++j) {
    if (shift_lo[j] > 0.0 || shift_hi[j] > 0.0) any_shift = true;
  }
  if (!any_shift) shift_factor = 0.0;
  Eigen::VectorXd ineq_lo_eff = p.ineq_lower;
  Eigen::VectorXd ineq_hi_eff = p.ineq_upper;
  double shift_max = std::max(mi > 0 ? shift_lo.maxCoeff() : 0.0,
                              mi > 0 ? shift_hi.maxCoeff() : 0.0);
  auto apply_bound_shift = [&]() {
    const double breathing = shift_factor > 0.0 ? 0.05 * mu : 0.0;
    for (int j = 0; j < mi; ++j) {
      if (std::isfinite(p.ineq_lower[j])) {
        const double margin =
            shift_lo[j] > 0.0 ? 0.1 * (1.0 + std::abs(p.ineq_lower[j])) : 0.0;
        ineq_lo_eff[j] = p.ineq_lower[j] -
                         shift_factor * (1.1 * shift_lo[j] + margin) -
                         breathing;
      }
      if (std::isfinite(p.ineq_upper[j])) {
        const double margin =
            shift_hi[j] > 0.0 ? 0.1 * (1.0 + std::abs(p.ineq_upper[j])) : 0.0;
        ineq_hi_eff[j] = p.ineq_upper[j] +
                         shift_factor * (1.1 * shift_hi[j] + margin) +
                         breathing;
      }
    }
  };
  apply_bound_shift();

  Eigen::VectorXd s(mi);
  for (int j = 0; j < mi; ++j) {
    s[j] = detail::push_inside(point.g[j], ineq_lo_eff[j], ineq_hi_eff[j]);
  }

  // Dual start: lambda, nu at zero; barrier duals mu / distance.
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(mi);
  Eigen::VectorXd z_lo = Eigen::VectorXd::Zero(p.num_vars);
  Eigen::VectorXd z_hi = Eigen::VectorXd::Zero(p.num_vars);
  Eigen::VectorXd w_lo = Eigen::VectorXd::Zero(mi);
  Eigen::VectorXd w_hi = Eigen::VectorXd::Zero(mi);
  auto clamp_dual = [](double v) { return std::min(std::max(v, 1e-10), 1e8); };
  for (int i = 0; i < nf; ++i) {
    const int full = map.free_to_full[i];
    if (std::isfinite(p.var_lower[full])) {
      z_lo[full] = clamp_dual(mu / (y[full] - p.var_lower[full]));
    }
    if (std::isfinite(p.var_upper[full])) {
      z_hi[full] = clamp_dual(mu / (p.var_upper[full] - y[full]));
    }
  }
  for (int j = 0; j < mi; ++j) {
    if (std::isfinite(ineq_lo_eff[j])) {
      w_lo[j] = clamp_dual(mu / (s[j] - ineq_lo_eff[j]));
    }
    if (std::isfinite(ineq_hi_eff[j])) {
      w_hi[j] = clamp_dual(mu / (ineq_hi_eff[j] - s[j]));
    }
  }

  const bool exact = static_cast<bool>(p.lagrangian_hessian);
  BlockHessian hessian(p.num_vars, p.hessian_blocks, p.initial_block_hessians);

  double penalty = 1.0;
  double delta_p = 0.0;       // value used in the current factorization
  double delta_last = 0.0;    // last value that produced a good step
  double last_step = 0.0;
  int line_search_failures = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message = "iteration limit reached";
  Multipliers mult;
  int iter = 0;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  bool pattern_analyzed = false;
  Eigen::SparseMatrix<double> kkt;

  for (iter = 0; iter < opts.max_iterations; ++iter) {
    // Mapped multiplier estimates under the solver-facing convention.
    mult.eq = lambda;
    mult.ineq = w_lo - w_hi;
    mult.bounds = z_lo - z_hi;
    const double feasibility = detail::constraint_inf(p, point.zeta, point.g);
    const double kkt_now = detail::kkt_from_point(p, y, point, mult);
    detail::report_iteration(opts, iter, y, point.f, feasibility, kkt_now,
                             last_step);
    if (feasibility <= opts.feasibility_tol &&
        kkt_now <= opts.optimality_tol) {
      status = SolveStatus::Optimal;
      message = "converged";
      break;
    }
    if (elapsed() > opts.max_seconds) {
      status = SolveStatus::MaxIterations;
      message = "time budget exhausted";
      break;
    }

    // Lagrangian stationarity (bound duals excluded; they are handled
    // through the barrier terms).
    Eigen::VectorXd lag = point.grad;
    if (me > 0) detail::add_jtv(p.eq_pattern, point.eq_values, lambda, 1.0, lag);
    if (mi > 0) detail::add_jtv(p.ineq_pattern, point.ineq_values, nu, 1.0, lag);

    // Inner (barrier) residual for the Fiacco-McCormick test.
    double inner = 0.0;
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      double r = lag[full] - z_lo[full] + z_hi[full];
      inner = std::max(inner, std::abs(r));
      if (std::isfinite(p.var_lower[full])) {
        inner = std::max(inner, std::abs(z_lo[full] *
                                             (y[full] - p.var_lower[full]) -
                                         mu));
      }
      if (std::isfinite(p.var_upper[full])) {
        inner = std::max(inner, std::abs(z_hi[full] *
                                             (p.var_upper[full] - y[full]) -
                                         mu));
      }
    }
    for (int j = 0; j < mi; ++j) {
      inner = std::max(inner, std::abs(-nu[j] - w_lo[j] + w_hi[j]));
      inner = std::max(inner, std::abs(point.g[j] - s[j]));
      if (std::isfinite(ineq_lo_eff[j])) {
        inner = std::max(inner,
                         std::abs(w_lo[j] * (s[j] - ineq_lo_eff[j]) - mu));
      }
      if (std::isfinite(ineq_hi_eff[j])) {
        inner = std::max(inner,
                         std::abs(w_hi[j] * (ineq_hi_eff[j] - s[j]) - mu));
      }
    }
    if (me > 0) {
      inner = std::max(inner, point.zeta.cwiseAbs().maxCoeff());
    }
    auto refloor_slacks = [&]() {
      for (int j = 0; j < mi; ++j) {
        if (std::isfinite(ineq_lo_eff[j])) {
          s[j] = std::max(s[j], ineq_lo_eff[j] + 0.01 * mu);
        }
        if (std::isfinite(ineq_hi_eff[j])) {
          s[j] = std::min(s[j], ineq_hi_eff[j] - 0.01 * mu);
        }
      }
    };
    // Homotopy sequencing: while shifted bounds are active, inner
    // convergence tightens the shift; the barrier parameter descends once
    // the true bounds are restored.
    if (inner <= 10.0 * mu) {
      if (shift_factor > 0.0) {
        // Advance the feasibility homotopy only when the iterates have
        // caught up with the current relief level.
        if (feasibility <=
            1.05 * shift_factor * shift_max + opts.feasibility_tol) {
          shift_factor = shift_factor < 1e-6 ? 0.0 : 0.7 * shift_factor;
          apply_bound_shift();
          refloor_slacks();
        }
      } else if (mu > mu_floor) {
        mu = std::max(mu / opts.barrier_reduction, mu_floor);
        apply_bound_shift();  // breathing term follows mu
        refloor_slacks();
      }
    }

    // Condensed primal-dual system over (dy, dlambda, dnu).
    Eigen::VectorXd sigma_y = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd rhat_y(nf);
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      double sig = 0.0;
      double r = lag[full];
      if (std::isfinite(p.var_lower[full])) {
        const double gap = y[full] - p.var_lower[full];
        sig += z_lo[full] / gap;
        r -= mu / gap;
      }
      if (std::isfinite(p.var_upper[full])) {
        const double gap = p.var_upper[full] - y[full];
        sig += z_hi[full] / gap;
        r += mu / gap;
      }
      sigma_y[i] = sig;
      rhat_y[i] = r;
    }
    Eigen::VectorXd sigma_s(mi), rhat_s(mi);
    for (int j = 0; j < mi; ++j) {
      double sig = 0.0;
      double r = -nu[j];
      if (std::isfinite(ineq_lo_eff[j])) {
        const double gap = s[j] - ineq_lo_eff[j];
        sig += w_lo[j] / gap;
        r -= mu / gap;
      }
      if (std::isfinite(ineq_hi_eff[j])) {
        const double gap = ineq_hi_eff[j] - s[j];
        sig += w_hi[j] / gap;
        r += mu / gap;
      }
      sigma_s[j] = std::max(sig, 1e-12);
      rhat_s[j] = r;
    }

    Eigen::SparseMatrix<double> h_reduced;
    if (exact) {
      Multipliers curvature;
      curvature.eq = lambda;
      curvature.ineq = -nu;
      h_reduced = detail::reduced_symmetric(
          detail::exact_hessian(p, y, curvature), map);
    } else {
      h_reduced = detail::reduced_symmetric(hessian.matrix(), map);
    }
    const auto a_eq = detail::reduced_jacobian<Eigen::ColMajor>(
        me, p.eq_pattern, point.eq_values, map);
    const auto a_g = detail::reduced_jacobian<Eigen::ColMajor>(
        mi, p.ineq_pattern, point.ineq_values, map);

    const int dim = nf + me + mi;
    Eigen::VectorXd rhs(dim);
    rhs.head(nf) = -rhat_y;
    if (me > 0) rhs.segment(nf, me) = -point.zeta;
    for (int j = 0; j < mi; ++j) {
      rhs[nf + me + j] = -(point.g[j] - s[j]) - rhat_s[j] / sigma_s[j];
    }

    Eigen::VectorXd solution;
    bool solved_linear = false;
    const double delta_c_base = 1e-11;
    double delta_c = delta_c_base;
    // Probe one step below the last successful regularization rather than
    // jumping to zero: pure-Newton probes near degenerate active sets
    // produce huge oscillating steps.
    delta_p = delta_last < 1e-12 ? 0.0 : 0.2 * delta_last;
    for (int attempt = 0; attempt < 14; ++attempt) {
      std::vector<Eigen::Triplet<double>> triplets;
      triplets.reserve(h_reduced.nonZeros() + 2 * a_eq.nonZeros() +
                       2 * a_g.nonZeros() + dim);
      for (int k = 0; k < h_reduced.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(h_reduced, k); it;
             ++it) {
          triplets.emplace_back(static_cast<int>(it.row()),
                                static_cast<int>(it.col()), it.value());
        }
      }
      double h_diag_scale = 1.0;
      for (int i = 0; i < nf; ++i) {
        h_diag_scale = std::max(h_diag_scale, std::abs(h_reduced.coeff(i, i)));
      }
      const double delta_min = 1e-9 * h_diag_scale;
      for (int i = 0; i < nf; ++i) {
        triplets.emplace_back(i, i, sigma_y[i] + delta_p + delta_min);
      }
      for (int k = 0; k < a_eq.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_eq, k); it;
             ++it) {
          triplets.emplace_back(nf + static_cast<int>(it.row()),
                                static_cast<int>(it.col()), it.value());
          triplets.emplace_back(static_cast<int>(it.col()),
                                nf + static_cast<int>(it.row()), it.value());
        }
      }
      for (int i = 0; i < me; ++i) {
        triplets.emplace_back(nf + i, nf + i, -delta_c);
      }
      for (int k = 0; k < a_g.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_g, k); it; ++it) {
          triplets.emplace_back(nf + me + static_cast<int>(it.row()),
                                static_cast<int>(it.col()), it.value());
          triplets.emplace_back(static_cast<int>(it.col()),
                                nf + me + static_cast<int>(it.row()),
                                it.value());
        }
      }
      for (int j = 0; j < mi; ++j) {
        triplets.emplace_back(nf + me + j, nf + me + j,
                              -1.0 / sigma_s[j] - delta_c);
      }
      kkt.resize(dim, dim);
      kkt.setFromTriplets(triplets.begin(), triplets.end());
      if (!pattern_analyzed) {
        ldlt.analyzePattern(kkt);
        pattern_analyzed = true;
      }
      ldlt.factorize(kkt);
      if (std::getenv("DIRTRAN_IPM_DEBUG")) {
        int neg = 0, bad = 0;
        double dmin = kInfinity;
        if (ldlt.info() == Eigen::Success) {
          const auto& pv = ldlt.vectorD();
          for (int i = 0; i < pv.size(); ++i) {
            if (!std::isfinite(pv[i]) || pv[i] == 0.0) ++bad;
            else { if (pv[i] < 0) ++neg; dmin = std::min(dmin, std::abs(pv[i])); }
          }
        }
        std::fprintf(stderr,
                     "  [ipm-fact] attempt info=%d neg=%d want=%d bad=%d dmin=%.2e delta=%.2e\n",
                     (int)ldlt.info(), neg, me + mi, bad, dmin, delta_p);
      }
      if (ldlt.info() == Eigen::Success) {
        // Inertia control: exactly one negative pivot per constraint row,
        // otherwise the Hessian needs more convexification.
        int negatives = 0;
        bool pivots_ok = true;
        const auto& pivots = ldlt.vectorD();
        for (int i = 0; i < pivots.size(); ++i) {
          if (!std::isfinite(pivots[i]) || pivots[i] == 0.0) {
            pivots_ok = false;
            break;
          }
          if (pivots[i] < 0.0) ++negatives;
        }
        if (pivots_ok && negatives == me + mi) {
          solution = ldlt.solve(rhs);
          if (solution.allFinite() &&
              solution.cwiseAbs().maxCoeff() < 1e8) {
            if (delta_c <= delta_c_base) {
              // One refinement pass against the delta_c-free constraint
              // rows.
              Eigen::VectorXd residual = rhs - kkt * solution;
              residual.tail(dim - nf) -= delta_c * solution.tail(dim - nf);
              solution += ldlt.solve(residual);
            }
            solved_linear = true;
            break;
          }
          // Huge step: locally dependent or inconsistent constraint rows;
          // relax them and satisfy in a least-squares sense.
          if (delta_c < 1e-2) {
            delta_c = std::min(delta_c * 1e4, 1e-2);
            pattern_analyzed = false;
            continue;
          }
        }
      }
      delta_p = delta_p == 0.0 ? 1e-6 : delta_p * 5.0;
      pattern_analyzed = false;  // regularization changes only values, but
                                 // re-analyze defensively after failures
    }
    if (!solved_linear) {
      status = SolveStatus::NumericalFailure;
      message = "KKT factorization failed";
      break;
    }

    const Eigen::VectorXd dy_red = solution.head(nf);
    Eigen::VectorXd dlambda = solution.segment(nf, me);
    Eigen::VectorXd dnu = solution.tail(mi);
    Eigen::VectorXd ds(mi);
    for (int j = 0; j < mi; ++j) {
      ds[j] = (dnu[j] - rhat_s[j]) / sigma_s[j];
    }
    Eigen::VectorXd dy = map.scatter(dy_red, p.num_vars);
    // Cap pathological directions; a wrong curvature model can otherwise
    // produce steps the merit function only accepts microscopically.
    const double dir_norm = nf > 0 ? dy.cwiseAbs().maxCoeff() : 0.0;
    if (dir_norm > 1e3) {
      const double scale = 1e3 / dir_norm;
      dy *= scale;
      ds *= scale;
      dlambda *= scale;
      dnu *= scale;
    }

    // Barrier dual steps.
    Eigen::VectorXd dz_lo = Eigen::VectorXd::Zero(p.num_vars);
    Eigen::VectorXd dz_hi = Eigen::VectorXd::Zero(p.num_vars);
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      if (std::isfinite(p.var_lower[full])) {
        const double gap = y[full] - p.var_lower[full];
        dz_lo[full] = mu / gap - z_lo[full] - z_lo[full] * dy[full] / gap;
      }
      if (std::isfinite(p.var_upper[full])) {
        const double gap = p.var_upper[full] - y[full];
        dz_hi[full] = mu / gap - z_hi[full] + z_hi[full] * dy[full] / gap;
      }
    }
    Eigen::VectorXd dw_lo = Eigen::VectorXd::Zero(mi);
    Eigen::VectorXd dw_hi = Eigen::VectorXd::Zero(mi);
    for (int j = 0; j < mi; ++j) {
      if (std::isfinite(ineq_lo_eff[j])) {
        const double gap = s[j] - ineq_lo_eff[j];
        dw_lo[j] = mu / gap - w_lo[j] - w_lo[j] * ds[j] / gap;
      }
      if (std::isfinite(ineq_hi_eff[j])) {
        const double gap = ineq_hi_eff[j] - s[j];
        dw_hi[j] = mu / gap - w_hi[j] + w_hi[j] * ds[j] / gap;
      }
    }

    // Fraction to the boundary.
    const double tau = std::max(0.99, 1.0 - mu);
    double alpha_primal = 1.0;
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      if (std::isfinite(p.var_lower[full]) && dy[full] < 0.0) {
        alpha_primal = std::min(
            alpha_primal, -tau * (y[full] - p.var_lower[full]) / dy[full]);
      }
      if (std::isfinite(p.var_upper[full]) && dy[full] > 0.0) {
        alpha_primal = std::min(
            alpha_primal, tau * (p.var_upper[full] - y[full]) / dy[full]);
      }
    }
    for (int j = 0; j < mi; ++j) {
      if (std::isfinite(ineq_lo_eff[j]) && ds[j] < 0.0) {
        alpha_primal =
            std::min(alpha_primal, -tau * (s[j] - ineq_lo_eff[j]) / ds[j]);
      }
      if (std::isfinite(ineq_hi_eff[j]) && ds[j] > 0.0) {
        alpha_primal =
            std::min(alpha_primal, tau * (ineq_hi_eff[j] - s[j]) / ds[j]);
      }
    }
    double alpha_dual = 1.0;
    auto limit_dual = [&](double v, double dv) {
      if (dv < 0.0) alpha_dual = std::min(alpha_dual, -tau * v / dv);
    };
    for (int i = 0; i < p.num_vars; ++i) {
      if (z_lo[i] > 0.0) limit_dual(z_lo[i], dz_lo[i]);
      if (z_hi[i] > 0.0) limit_dual(z_hi[i], dz_hi[i]);
    }
    for (int j = 0; j < mi; ++j) {
      if (w_lo[j] > 0.0) limit_dual(w_lo[j], dw_lo[j]);
      if (w_hi[j] > 0.0) limit_dual(w_hi[j], dw_hi[j]);
    }

    // Growth-capped dual step length, shared by the merit penalty estimate
    // and the actual update: relaxed solves near locally inconsistent
    // constraints would otherwise inject enormous multipliers.
    double alpha_eq_cap = 1.0;
    {
      const double dual_step =
          std::max(me > 0 ? dlambda.cwiseAbs().maxCoeff() : 0.0,
                   mi > 0 ? dnu.cwiseAbs().maxCoeff() : 0.0);
      const double dual_now =
          std::max(me > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0,
                   mi > 0 ? nu.cwiseAbs().maxCoeff() : 0.0);
      const double cap = 10.0 * (1.0 + dual_now);
      if (dual_step > cap) alpha_eq_cap = cap / dual_step;
    }
    // l1-penalized barrier merit line search along the primal direction.
    const double dual_scale = std::max(
        me > 0 ? (lambda + alpha_eq_cap * dlambda).cwiseAbs().maxCoeff() : 0.0,
        mi > 0 ? (nu + alpha_eq_cap * dnu).cwiseAbs().maxCoeff() : 0.0);
    if (penalty < 1.2 * dual_scale) {
      penalty = std::min(2.0 * dual_scale + 1e-4, 1e6);
    }

    auto barrier_value = [&](const Eigen::VectorXd& yv,
                             const Eigen::VectorXd& sv, double f) {
      double b = f;
      for (int i = 0; i < nf; ++i) {
        const int full = map.free_to_full[i];
        if (std::isfinite(p.var_lower[full])) {
          b -= mu * std::log(yv[full] - p.var_lower[full]);
        }
        if (std::isfinite(p.var_upper[full])) {
          b -= mu * std::log(p.var_upper[full] - yv[full]);
        }
      }
      for (int j = 0; j < mi; ++j) {
        if (std::isfinite(ineq_lo_eff[j])) {
          b -= mu * std::log(sv[j] - ineq_lo_eff[j]);
        }
        if (std::isfinite(ineq_hi_eff[j])) {
          b -= mu * std::log(ineq_hi_eff[j] - sv[j]);
        }
      }
      return b;
    };
    auto merit_violation = [&](const detail::NlpPoint& pt,
                               const Eigen::VectorXd& sv) {
      double v = pt.zeta.size() ? pt.zeta.cwiseAbs().sum() : 0.0;
      for (int j = 0; j < mi; ++j) v += std::abs(pt.g[j] - sv[j]);
      return v;
    };

    const double merit0 =
        barrier_value(y, s, point.f) + penalty * merit_violation(point, s);
    // Barrier gradient dotted with the primal direction.
    double directional = point.grad.dot(dy);
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      if (std::isfinite(p.var_lower[full])) {
        directional -= mu * dy[full] / (y[full] - p.var_lower[full]);
      }
      if (std::isfinite(p.var_upper[full])) {
        directional += mu * dy[full] / (p.var_upper[full] - y[full]);
      }
    }
    for (int j = 0; j < mi; ++j) {
      if (std::isfinite(ineq_lo_eff[j])) {
        directional -= mu * ds[j] / (s[j] - ineq_lo_eff[j]);
      }
      if (std::isfinite(ineq_hi_eff[j])) {
        directional += mu * ds[j] / (ineq_hi_eff[j] - s[j]);
      }
    }
    directional -= penalty * merit_violation(point, s);
    // An uphill direction means the curvature model needs more damping.
    if (directional > 1e-12 * (1.0 + std::abs(merit0)) &&
        dir_norm > 1e-14) {
      delta_p = (delta_p == 0.0 ? 1e-6 : delta_p * 100);
      if (delta_p > 1e12) {
        status = SolveStatus::NumericalFailure;
        message = "could not find a descent direction";
        break;
      }
      continue;
    }
    if (directional > 0.0) directional = 0.0;

    if (std::getenv("DIRTRAN_IPM_DEBUG")) {
      // Recompute the inner components for the dump.
      double i_stat = 0, i_comp = 0, i_eq = 0, i_gs = 0;
      for (int i = 0; i < nf; ++i) {
        const int full = map.free_to_full[i];
        i_stat = std::max(i_stat,
                          std::abs(lag[full] - z_lo[full] + z_hi[full]));
        if (std::isfinite(p.var_lower[full])) {
          i_comp = std::max(i_comp, std::abs(z_lo[full] * (y[full] -
                                              p.var_lower[full]) - mu));
        }
        if (std::isfinite(p.var_upper[full])) {
          i_comp = std::max(i_comp, std::abs(z_hi[full] * (p.var_upper[full] -
                                              y[full]) - mu));
        }
      }
      for (int j = 0; j < mi; ++j) {
        i_stat = std::max(i_stat, std::abs(-nu[j] - w_lo[j] + w_hi[j]));
        i_gs = std::max(i_gs, std::abs(point.g[j] - s[j]));
        if (std::isfinite(ineq_lo_eff[j])) {
          i_comp = std::max(i_comp,
                            std::abs(w_lo[j] * (s[j] - ineq_lo_eff[j]) - mu));
        }
        if (std::isfinite(ineq_hi_eff[j])) {
          i_comp = std::max(i_comp,
                            std::abs(w_hi[j] * (ineq_hi_eff[j] - s[j]) - mu));
        }
      }
      if (me > 0) i_eq = point.zeta.cwiseAbs().maxCoeff();
      std::fprintf(stderr,
                   "  [ipm] mu=%.2e |dy|=%.2e a_p=%.2e a_d=%.2e inner=%.2e "
                   "(stat=%.1e comp=%.1e eq=%.1e gs=%.1e) dp=%.1e\n",
                   mu, dy.cwiseAbs().maxCoeff(), alpha_primal, alpha_dual,
                   inner, i_stat, i_comp, i_eq, i_gs, delta_p);
    }
    double alpha = alpha_primal;
    bool accepted = false;
    detail::NlpPoint trial;
    Eigen::VectorXd y_trial, s_trial;
    for (int backtrack = 0; backtrack < 40; ++backtrack) {
      y_trial = y + alpha * dy;
      s_trial = s + alpha * ds;
      bool finite = true;
      double merit_trial = 0.0;
      try {
        detail::evaluate_point(p, y_trial, false, trial);
        merit_trial = barrier_value(y_trial, s_trial, trial.f) +
                      penalty * merit_violation(trial, s_trial);
        finite = std::isfinite(merit_trial);
      } catch (const Error&) {
        finite = false;
      }
      if (finite && merit_trial <= merit0 + 0.1 * alpha * directional +
                                       1e-14 * (1.0 + std::abs(merit0))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++line_search_failures;
      penalty *= 10.0;
      if (line_search_failures >= 3) {
        status = feasibility > std::max(1e3 * opts.feasibility_tol, 1e-4)
                     ? SolveStatus::Infeasible
                     : SolveStatus::NumericalFailure;
        message = "line search failed";
        break;
      }
      continue;
    }
    line_search_failures = 0;

    detail::NlpPoint next = std::move(trial);
    if (me > 0) p.eq_jacobian(y_trial, next.eq_values);
    if (mi > 0) p.ineq_jacobian(y_trial, next.ineq_values);
    const double alpha_eq = std::min(alpha_dual, alpha_eq_cap);
    const Eigen::VectorXd lambda_new = lambda + alpha_eq * dlambda;
    const Eigen::VectorXd nu_new = nu + alpha_eq * dnu;
    if (!exact) {
      // Quasi-Newton curvature of the bound-free Lagrangian.
      Eigen::VectorXd lag_old = point.grad;
      if (me > 0) {
        detail::add_jtv(p.eq_pattern, point.eq_values, lambda_new, 1.0,
                        lag_old);
      }
      if (mi > 0) {
        detail::add_jtv(p.ineq_pattern, point.ineq_values, nu_new, 1.0,
                        lag_old);
      }
      Eigen::VectorXd lag_new = next.grad;
      if (me > 0) {
        detail::add_jtv(p.eq_pattern, next.eq_values, lambda_new, 1.0,
                        lag_new);
      }
      if (mi > 0) {
        detail::add_jtv(p.ineq_pattern, next.ineq_values, nu_new, 1.0,
                        lag_new);
      }
      hessian.update(alpha * dy, lag_new - lag_old);
    }


    delta_last = alpha < 0.1 ? std::min(delta_p * 5.0, 1e8) : delta_p;
    // Once curvature correction was ever needed, stay off pure Newton;
    // probing zero near degenerate active sets causes step bursts.
    if (delta_last > 0.0 && delta_last < 1e-6) delta_last = 1e-6;
    y = y_trial;
    s = s_trial;
    point = std::move(next);
    lambda = lambda_new.cwiseMax(-1e4).cwiseMin(1e4);
    nu = nu_new.cwiseMax(-1e4).cwiseMin(1e4);
    for (int i = 0; i < p.num_vars; ++i) {
      z_lo[i] = std::max(z_lo[i] + alpha_dual * dz_lo[i], 0.0);
      z_hi[i] = std::max(z_hi[i] + alpha_dual * dz_hi[i], 0.0);
    }
    for (int j = 0; j < mi; ++j) {
      w_lo[j] = std::max(w_lo[j] + alpha_dual * dw_lo[j], 0.0);
      w_hi[j] = std::max(w_hi[j] + alpha_dual * dw_hi[j], 0.0);
    }
    // Slack floor: while the barrier is active, slacks of violated rows
    // must not collapse against their bound, or their duals diverge and
    // freeze the iteration.
    for (int j = 0; j < mi; ++j) {
      const bool lo_finite = std::isfinite(ineq_lo_eff[j]);
      const bool hi_finite = std::isfinite(ineq_hi_eff[j]);
      if (lo_finite && hi_finite &&
          ineq_hi_eff[j] - ineq_lo_eff[j] < 0.04 * mu) {
        s[j] = 0.5 * (ineq_lo_eff[j] + ineq_hi_eff[j]);
        continue;
      }
      if (lo_finite) s[j] = std::max(s[j], ineq_lo_eff[j] + 0.01 * mu);
      if (hi_finite) s[j] = std::min(s[j], ineq_hi_eff[j] - 0.01 * mu);
    }
    // Keep barrier duals commensurate with mu (kappa-sigma safeguard).
    const double kappa = std::max(1e4, 1e-2 / mu);
    for (int i = 0; i < nf; ++i) {
      const int full = map.free_to_full[i];
      if (std::isfinite(p.var_lower[full])) {
        const double gap = y[full] - p.var_lower[full];
        z_lo[full] = std::min(std::max(z_lo[full], mu / (kappa * gap)),
                              kappa * mu / gap);
      }
      if (std::isfinite(p.var_upper[full])) {
        const double gap = p.var_upper[full] - y[full];
        z_hi[full] = std::min(std::max(z_hi[full], mu / (kappa * gap)),
                              kappa * mu / gap);
      }
    }
    for (int j = 0; j < mi; ++j) {
      if (std::isfinite(ineq_lo_eff[j])) {
        const double gap = s[j] - ineq_lo_eff[j];
        w_lo[j] = std::min(std::max(w_lo[j], mu / (kappa * gap)),
                           kappa * mu / gap);
      }
      if (std::isfinite(ineq_hi_eff[j])) {
        const double gap = ineq_hi_eff[j] - s[j];
        w_hi[j] = std::min(std::max(w_hi[j], mu / (kappa * gap)),
                           kappa * mu / gap);
      }
    }
    last_step = alpha;
  }

  SolveResult result;
  mult.eq = lambda;
  mult.ineq = w_lo - w_hi;
  mult.bounds = z_lo - z_hi;
  result.status = status;
  result.message = message;
  result.y = y;
  result.objective = point.f;
  result.iterations = iter;
  result.minor_iterations = 0;
  result.multipliers = mult;
  result.kkt_residual =
      detail::kkt_from_point(p, y, point, result.multipliers);
  result.max_violation = detail::constraint_inf(p, point.zeta, point.g);
  result.wall_seconds = elapsed();
  if (result.status == SolveStatus::Optimal &&
      (result.max_violation > opts.feasibility_tol ||
       result.kkt_residual > opts.optimality_tol)) {
    result.status = SolveStatus::NumericalFailure;
    result.message = "post-solve verification failed";
  }
  return result;
}

}  // namespace detail

/// Primal-dual interior-point method: slacks on the inequalities, log
/// barriers on all finite bounds, Newton steps on the perturbed KKT system
/// with a fraction-to-the-boundary rule, and a Fiacco-McCormick barrier
/// schedule (mu0 = 0.1, mu /= 5 once the inner residual reaches 10 mu).
/// A run that fails early from an infeasible start is retried once with a
/// staged bound-shift homotopy on the violated inequality rows.
inline SolveResult solve_ipm(const NlpProblem& p, const Eigen::VectorXd& y0,
                             const SolverOptions& opts = {}) {
  p.validate();
  if (y0.size() != p.num_vars || !y0.allFinite()) {
    throw ContractViolation("solve_ipm: bad initial point");
  }
  const Eigen::VectorXd y_start =
      y0.cwiseMax(p.var_lower).cwiseMin(p.var_upper);
  detail::RowScaling scaling;
  const NlpProblem scaled = detail::make_row_scaled(p, y_start, scaling);
  SolverOptions impl_opts = opts;
  impl_opts.feasibility_tol = opts.feasibility_tol * scaling.eq_min;

  SolveResult result = detail::solve_ipm_attempt(scaled, y0, impl_opts, false);
  const bool retry_worthwhile =
      result.status != SolveStatus::Optimal &&
      result.status != SolveStatus::MaxIterations && p.num_ineq > 0 &&
      result.iterations <= opts.max_iterations * 4 / 5;
  if (retry_worthwhile) {
    SolverOptions retry_opts = impl_opts;
    retry_opts.max_iterations = opts.max_iterations - result.iterations;
    if (std::isfinite(opts.max_seconds)) {
      retry_opts.max_seconds =
          std::max(0.0, opts.max_seconds - result.wall_seconds);
    }
    SolveResult retry =
        detail::solve_ipm_attempt(scaled, y0, retry_opts, true);
    retry.iterations += result.iterations;
    retry.minor_iterations += result.minor_iterations;
    retry.wall_seconds += result.wall_seconds;
    if (retry.status == SolveStatus::Optimal ||
        retry.max_violation < result.max_violation) {
      result = retry;
    }
  }
  result.multipliers.eq = scaling.eq.cwiseProduct(result.multipliers.eq);
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

/// Dispatch by solver family.
enum class SolverKind { SQP, IPM };

inline std::string solver_name(SolverKind k) {
  return k == SolverKind::SQP ? "sqp" : "ipm";
}

inline SolverKind parse_solver(const std::string& name) {
  if (name == "sqp") return SolverKind::SQP;
  if (name == "ipm") return SolverKind::IPM;
  throw ConfigError("unknown solver '" + name + "' (sqp, ipm)");
}

inline SolveResult solve_nlp(SolverKind kind, const NlpProblem& p,
                             const Eigen::VectorXd& y0,
                             const SolverOptions& opts = {}) {
  return kind == SolverKind::SQP ? solve_sqp(p, y0, opts)
                                 : solve_ipm(p, y0, opts);
}

}  // namespace dirtran

#endif  // DIRTRAN_NLP_IPM_HPP
