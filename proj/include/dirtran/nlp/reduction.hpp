#ifndef DIRTRAN_NLP_REDUCTION_HPP
#define DIRTRAN_NLP_REDUCTION_HPP

#include <Eigen/Sparse>
#include <vector>

#include "dirtran/nlp/problem.hpp"

namespace dirtran::detail {

/// Variables with equal bounds are pinned and eliminated from the solver's
/// linear algebra; this maps between full and free index spaces.
struct FreeVariableMap {
  std::vector<int> free_to_full;
  std::vector<int> full_to_free;  // -1 for fixed variables

  int free_count() const { return static_cast<int>(free_to_full.size()); }

  static FreeVariableMap build(const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper) {
    FreeVariableMap map;
    map.full_to_free.assign(lower.size(), -1);
    for (int i = 0; i < lower.size(); ++i) {
      if (lower[i] < upper[i]) {
        map.full_to_free[i] = static_cast<int>(map.free_to_full.size());
        map.free_to_full.push_back(i);
      }
    }
    return map;
  }

  Eigen::VectorXd gather(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(free_count());
    for (int i = 0; i < free_count(); ++i) out[i] = full[free_to_full[i]];
    return out;
  }

  /// Scatter a free-space vector into a zero full-space vector.
  Eigen::VectorXd scatter(const Eigen::VectorXd& reduced, int full_dim) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full_dim);
    for (int i = 0; i < free_count(); ++i) out[free_to_full[i]] = reduced[i];
    return out;
  }
};

template <int Options>
Eigen::SparseMatrix<double, Options> reduced_jacobian(
    int rows, const SparsityPattern& pattern,
    const std::vector<double>& values, const FreeVariableMap& map) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pattern.size());
  for (size_t k = 0; k < pattern.size(); ++k) {
    const int col = map.full_to_free[pattern[k].second];
    if (col >= 0) {
      triplets.emplace_back(pattern[k].first, col, values[k]);
    }
  }
  Eigen::SparseMatrix<double, Options> jac(rows, map.free_count());
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

/// Drop fixed rows and columns of a symmetric full-space matrix.
inline Eigen::SparseMatrix<double> reduced_symmetric(
    const Eigen::SparseMatrix<double>& full, const FreeVariableMap& map) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(full.nonZeros());
  for (int k = 0; k < full.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(full, k); it; ++it) {
      const int r = map.full_to_free[static_cast<int>(it.row())];
      const int c = map.full_to_free[static_cast<int>(it.col())];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> out(map.free_count(), map.free_count());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

/// Transpose-product J' * v accumulated through a coordinate pattern.
inline void add_jtv(const SparsityPattern& pattern,
                    const std::vector<double>& values,
                    const Eigen::VectorXd& v, double sign,
                    Eigen::VectorXd& out) {
  for (size_t k = 0; k < pattern.size(); ++k) {
    out[pattern[k].second] += sign * values[k] * v[pattern[k].first];
  }
}

/// Constraint row equilibration: rows are rescaled so their initial
/// Jacobian inf-norm is at most one. Stationarity and complementarity are
/// invariant under the rescaling (multipliers scale inversely), so only
/// the internal step computation and merit change.
struct RowScaling {
  Eigen::VectorXd eq;    // multiplier applied to each equality row
  Eigen::VectorXd ineq;  // and to each inequality row
  double eq_min = 1.0;   // smallest equality scale (for tolerance mapping)
};

inline NlpProblem make_row_scaled(const NlpProblem& p,
                                  const Eigen::VectorXd& y0,
                                  RowScaling& scaling) {
  scaling.eq = Eigen::VectorXd::Ones(p.num_eq);
  scaling.ineq = Eigen::VectorXd::Ones(p.num_ineq);
  scaling.eq_min = 1.0;
  if (p.num_eq > 0) {
    std::vector<double> values(p.eq_pattern.size());
    p.eq_jacobian(y0, values);
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(p.num_eq);
    for (size_t k = 0; k < p.eq_pattern.size(); ++k) {
      row_norm[p.eq_pattern[k].first] =
          std::max(row_norm[p.eq_pattern[k].first], std::abs(values[k]));
    }
    for (int i = 0; i < p.num_eq; ++i) {
      scaling.eq[i] = 1.0 / std::max(1.0, row_norm[i]);
      scaling.eq_min = std::min(scaling.eq_min, scaling.eq[i]);
    }
  }
  if (p.num_ineq > 0) {
    std::vector<double> values(p.ineq_pattern.size());
    p.ineq_jacobian(y0, values);
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(p.num_ineq);
    for (size_t k = 0; k < p.ineq_pattern.size(); ++k) {
      row_norm[p.ineq_pattern[k].first] =
          std::max(row_norm[p.ineq_pattern[k].first], std::abs(values[k]));
    }
    for (int i = 0; i < p.num_ineq; ++i) {
      scaling.ineq[i] = 1.0 / std::max(1.0, row_norm[i]);
    }
  }

  NlpProblem scaled = p;
  const Eigen::VectorXd d_eq = scaling.eq;
  const Eigen::VectorXd d_ineq = scaling.ineq;
  if (p.num_eq > 0) {
    auto base_eq = p.equalities;
    scaled.equalities = [base_eq, d_eq](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(d_eq.cwiseProduct(base_eq(y)));
    };
    auto base_eq_jac = p.eq_jacobian;
    auto pattern = p.eq_pattern;
    scaled.eq_jacobian = [base_eq_jac, pattern, d_eq](
                             const Eigen::VectorXd& y,
                             std::vector<double>& values) {
      base_eq_jac(y, values);
      for (size_t k = 0; k < pattern.size(); ++k) {
        values[k] *= d_eq[pattern[k].first];
      }
    };
  }
  if (p.num_ineq > 0) {
    auto base_ineq = p.inequalities;
    scaled.inequalities = [base_ineq, d_ineq](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(d_ineq.cwiseProduct(base_ineq(y)));
    };
    auto base_ineq_jac = p.ineq_jacobian;
    auto pattern = p.ineq_pattern;
    scaled.ineq_jacobian = [base_ineq_jac, pattern, d_ineq](
                               const Eigen::VectorXd& y,
                               std::vector<double>& values) {
      base_ineq_jac(y, values);
      for (size_t k = 0; k < pattern.size(); ++k) {
        values[k] *= d_ineq[pattern[k].first];
      }
    };
    scaled.ineq_lower = d_ineq.cwiseProduct(p.ineq_lower);
    scaled.ineq_upper = d_ineq.cwiseProduct(p.ineq_upper);
    for (int i = 0; i < p.num_ineq; ++i) {  // keep infinities clean
      if (!std::isfinite(p.ineq_lower[i])) scaled.ineq_lower[i] = -kInfinity;
      if (!std::isfinite(p.ineq_upper[i])) scaled.ineq_upper[i] = kInfinity;
    }
  }
  if (p.lagrangian_hessian) {
    auto base_hess = p.lagrangian_hessian;
    scaled.lagrangian_hessian =
        [base_hess, d_eq, d_ineq](const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& eq_mult,
                                  const Eigen::VectorXd& ineq_mult,
                                  std::vector<double>& values) {
          base_hess(y, d_eq.cwiseProduct(eq_mult),
                    d_ineq.cwiseProduct(ineq_mult), values);
        };
  }
  return scaled;
}

}  // namespace dirtran::detail

#endif  // DIRTRAN_NLP_REDUCTION_HPP
