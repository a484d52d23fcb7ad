#ifndef DIRTRAN_NLP_QP_HPP
#define DIRTRAN_NLP_QP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "dirtran/nlp/problem.hpp"

namespace dirtran {

/// Convex QP in step variables:
///   min 1/2 d'Hd + c'd
///   s.t. a_eq d = b_eq
///        ineq_lo <= a_ineq d <= ineq_hi
///        d_lo <= d <= d_hi
/// All variables are free (fixed variables are eliminated by the caller).
struct QpData {
  const Eigen::SparseMatrix<double>* h = nullptr;
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> a_eq;
  Eigen::VectorXd b_eq;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a_ineq;
  Eigen::VectorXd ineq_lo, ineq_hi;
  Eigen::VectorXd d_lo, d_hi;
};

enum class ActiveSide { Lower, Upper };

/// Active inequality rows and variable bounds; persists across major
/// iterations as a warm start.
struct QpWorkingSet {
  std::vector<std::pair<int, ActiveSide>> rows;
  std::vector<std::pair<int, ActiveSide>> bounds;
};

struct QpResult {
  bool solved = false;
  Eigen::VectorXd d;
  Eigen::VectorXd eq_mult;     // multipliers of a_eq d = b_eq
  Eigen::VectorXd ineq_mult;   // per row; > 0 pushes at the lower side
  Eigen::VectorXd bound_mult;  // per variable; same convention
  int iterations = 0;
};

namespace detail {

inline std::uint64_t working_set_hash(const QpWorkingSet& ws) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const auto& [i, side] : ws.rows) {
    mix(static_cast<std::uint64_t>(i) * 2 + (side == ActiveSide::Upper));
  }
  mix(0xabcdefull);
  for (const auto& [i, side] : ws.bounds) {
    mix(static_cast<std::uint64_t>(i) * 2 + (side == ActiveSide::Upper));
  }
  return h;
}

}  // namespace detail

/// Primal-dual active-set iteration: repeatedly solve the equality-
/// constrained QP for the current working-set guess, add the most violated
/// inequality (smallest index on ties), and drop active constraints whose
/// multiplier has the wrong sign. Each cycle is one "minor iteration" and
/// costs one sparse quasi-definite KKT factorization.
inline QpResult solve_qp_active_set(const QpData& qp, QpWorkingSet& ws,
                                    int max_iterations) {
  const int n = static_cast<int>(qp.c.size());
  const int me = static_cast<int>(qp.b_eq.size());
  const int mi = static_cast<int>(qp.ineq_lo.size());
  QpResult result;
  result.d = Eigen::VectorXd::Zero(n);
  result.eq_mult = Eigen::VectorXd::Zero(me);
  result.ineq_mult = Eigen::VectorXd::Zero(mi);
  result.bound_mult = Eigen::VectorXd::Zero(n);

  // Sanitize the warm start: deduplicate, drop rows whose active side has
  // no finite bound.
  {
    QpWorkingSet clean;
    std::set<int> seen_rows, seen_bounds;
    for (const auto& [i, side] : ws.rows) {
      if (i < 0 || i >= mi || seen_rows.count(i)) continue;
      const double bound =
          side == ActiveSide::Lower ? qp.ineq_lo[i] : qp.ineq_hi[i];
      if (!std::isfinite(bound)) continue;
      seen_rows.insert(i);
      clean.rows.emplace_back(i, side);
    }
    for (const auto& [i, side] : ws.bounds) {
      if (i < 0 || i >= n || seen_bounds.count(i)) continue;
      const double bound = side == ActiveSide::Lower ? qp.d_lo[i] : qp.d_hi[i];
      if (!std::isfinite(bound)) continue;
      seen_bounds.insert(i);
      clean.bounds.emplace_back(i, side);
    }
    ws = std::move(clean);
  }

  double h_scale = 1.0;
  for (int k = 0; k < qp.h->outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(*qp.h, k); it; ++it) {
      h_scale = std::max(h_scale, std::abs(it.value()));
    }
  }
  double delta_p = 0.0;
  const double delta_min = 1e-9 * h_scale;  // keeps the system quasi-definite
  const double delta_c_base = 1e-11 * h_scale;
  // Raised temporarily when the constraint rows are locally dependent or
  // inconsistent; the step then satisfies them in a least-squares sense.
  double delta_c = delta_c_base;
  const double feas_tol = 1e-9;
  const double mult_tol = 1e-9 * (1.0 + qp.c.cwiseAbs().maxCoeff());

  std::set<std::uint64_t> visited;
  int regularization_bumps = 0;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;

  for (int iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    const int na =
        static_cast<int>(ws.rows.size()) + static_cast<int>(ws.bounds.size());
    const int dim = n + me + na;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(qp.h->nonZeros() + 4 * (qp.a_eq.nonZeros() + 8 * na) +
                     dim);
    for (int k = 0; k < qp.h->outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(*qp.h, k); it; ++it) {
        triplets.emplace_back(static_cast<int>(it.row()),
                              static_cast<int>(it.col()), it.value());
      }
    }
    for (int i = 0; i < n; ++i) {
      triplets.emplace_back(i, i, delta_p + delta_min);
    }
    for (int k = 0; k < qp.a_eq.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp.a_eq, k); it;
           ++it) {
        const int r = n + static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        triplets.emplace_back(r, c, it.value());
        triplets.emplace_back(c, r, it.value());
      }
    }
    Eigen::VectorXd rhs(dim);
    rhs.head(n) = -qp.c;
    rhs.segment(n, me) = qp.b_eq;
    int offset = n + me;
    for (const auto& [i, side] : ws.rows) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
               qp.a_ineq, i);
           it; ++it) {
        triplets.emplace_back(offset, static_cast<int>(it.col()), it.value());
        triplets.emplace_back(static_cast<int>(it.col()), offset, it.value());
      }
      rhs[offset] = side == ActiveSide::Lower ? qp.ineq_lo[i] : qp.ineq_hi[i];
      ++offset;
    }
    for (const auto& [i, side] : ws.bounds) {
      triplets.emplace_back(offset, i, 1.0);
      triplets.emplace_back(i, offset, 1.0);
      rhs[offset] = side == ActiveSide::Lower ? qp.d_lo[i] : qp.d_hi[i];
      ++offset;
    }
    for (int i = n; i < dim; ++i) triplets.emplace_back(i, i, -delta_c);

    Eigen::SparseMatrix<double> kkt(dim, dim);
    kkt.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::VectorXd solution;
    bool ok = false;
    double local_delta = delta_p;
    for (int attempt = 0; attempt < 10; ++attempt) {
      ldlt.compute(kkt);
      if (ldlt.info() == Eigen::Success) {
        // Inertia control: a correct saddle point needs exactly one
        // negative pivot per constraint row.
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
        if (pivots_ok && negatives == dim - n) {
          solution = ldlt.solve(rhs);
          if (solution.allFinite() &&
              solution.cwiseAbs().maxCoeff() < 1e8) {
            if (delta_c <= delta_c_base) {
              // Refine against the unregularized constraint block to remove
              // the delta_c bias from the step.
              for (int refine = 0; refine < 2; ++refine) {
                Eigen::VectorXd residual = rhs - kkt * solution;
                residual.tail(dim - n) -= delta_c * solution.tail(dim - n);
                solution += ldlt.solve(residual);
              }
            }
            ok = true;
            break;
          }
          // Huge multipliers: dependent or inconsistent constraint rows.
          if (delta_c < 1e-2 * h_scale) {
            const double new_delta_c = std::min(delta_c * 1e4, 1e-2 * h_scale);
            for (int i = n; i < dim; ++i) {
              kkt.coeffRef(i, i) -= new_delta_c - delta_c;
            }
            delta_c = new_delta_c;
            continue;
          }
        }
      }
      // Regularize the Hessian block and retry.
      const double bump =
          (local_delta == 0.0 ? 1e-8 * h_scale : local_delta * 100);
      for (int i = 0; i < n; ++i) {
        kkt.coeffRef(i, i) += bump - local_delta;
      }
      local_delta = bump;
    }
    delta_p = local_delta;
    if (!ok) {
      result.solved = false;
      return result;
    }

    const Eigen::VectorXd d = solution.head(n);

    // Most violated inactive constraint, smallest index on ties.
    int best_kind = -1;  // 0 = row, 1 = bound
    int best_index = -1;
    ActiveSide best_side = ActiveSide::Lower;
    double best_violation = feas_tol * (1.0 + d.cwiseAbs().maxCoeff());
    std::vector<bool> row_active(mi, false), bound_active(n, false);
    for (const auto& [i, side] : ws.rows) row_active[i] = true;
    for (const auto& [i, side] : ws.bounds) bound_active[i] = true;

    const Eigen::VectorXd ad = qp.a_ineq * d;
    for (int i = 0; i < mi; ++i) {
      if (row_active[i]) continue;
      const double lo_violation = qp.ineq_lo[i] - ad[i];
      const double hi_violation = ad[i] - qp.ineq_hi[i];
      if (std::isfinite(qp.ineq_lo[i]) && lo_violation > best_violation) {
        best_violation = lo_violation;
        best_kind = 0;
        best_index = i;
        best_side = ActiveSide::Lower;
      }
      if (std::isfinite(qp.ineq_hi[i]) && hi_violation > best_violation) {
        best_violation = hi_violation;
        best_kind = 0;
        best_index = i;
        best_side = ActiveSide::Upper;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (bound_active[i]) continue;
      const double lo_violation = qp.d_lo[i] - d[i];
      const double hi_violation = d[i] - qp.d_hi[i];
      if (std::isfinite(qp.d_lo[i]) && lo_violation > best_violation) {
        best_violation = lo_violation;
        best_kind = 1;
        best_index = i;
        best_side = ActiveSide::Lower;
      }
      if (std::isfinite(qp.d_hi[i]) && hi_violation > best_violation) {
        best_violation = hi_violation;
        best_kind = 1;
        best_index = i;
        best_side = ActiveSide::Upper;
      }
    }

    if (best_kind >= 0) {
      if (best_kind == 0) {
        ws.rows.emplace_back(best_index, best_side);
      } else {
        ws.bounds.emplace_back(best_index, best_side);
      }
      const std::uint64_t signature = detail::working_set_hash(ws);
      if (!visited.insert(signature).second) {
        // Cycle: push the Hessian toward steepest descent and start over.
        delta_p = (delta_p == 0.0 ? 1e-8 * h_scale : delta_p * 100);
        visited.clear();
        if (++regularization_bumps > 3) {
          result.solved = false;
          return result;
        }
      }
      continue;
    }

    // Feasible; enforce multiplier signs. Active-at-lower rows need
    // kkt multiplier <= 0 (NLP multiplier -nu >= 0), upper the reverse.
    double worst_wrong = mult_tol;
    int drop_kind = -1, drop_position = -1;
    offset = n + me;
    for (size_t k = 0; k < ws.rows.size(); ++k, ++offset) {
      const double nu = solution[offset];
      const double wrong =
          ws.rows[k].second == ActiveSide::Lower ? nu : -nu;
      if (wrong > worst_wrong) {
        worst_wrong = wrong;
        drop_kind = 0;
        drop_position = static_cast<int>(k);
      }
    }
    for (size_t k = 0; k < ws.bounds.size(); ++k, ++offset) {
      const double nu = solution[offset];
      const double wrong =
          ws.bounds[k].second == ActiveSide::Lower ? nu : -nu;
      if (wrong > worst_wrong) {
        worst_wrong = wrong;
        drop_kind = 1;
        drop_position = static_cast<int>(k);
      }
    }
    if (drop_kind >= 0) {
      if (drop_kind == 0) {
        ws.rows.erase(ws.rows.begin() + drop_position);
      } else {
        ws.bounds.erase(ws.bounds.begin() + drop_position);
      }
      const std::uint64_t signature = detail::working_set_hash(ws);
      if (!visited.insert(signature).second) {
        delta_p = (delta_p == 0.0 ? 1e-8 * h_scale : delta_p * 100);
        visited.clear();
        if (++regularization_bumps > 3) {
          result.solved = false;
          return result;
        }
      }
      continue;
    }

    // Optimal for the QP.
    result.d = d;
    result.eq_mult = solution.segment(n, me);
    offset = n + me;
    for (const auto& [i, side] : ws.rows) {
      result.ineq_mult[i] = -solution[offset++];
    }
    for (const auto& [i, side] : ws.bounds) {
      result.bound_mult[i] = -solution[offset++];
    }
    result.solved = true;
    return result;
  }
  result.solved = false;
  return result;
}

}  // namespace dirtran

#endif  // DIRTRAN_NLP_QP_HPP
