#ifndef DIRTRAN_TRANSCRIPTION_HPP
#define DIRTRAN_TRANSCRIPTION_HPP

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <vector>

#include "dirtran/errors.hpp"
#include "dirtran/model.hpp"
#include "dirtran/nlp/problem.hpp"
#include "dirtran/task.hpp"
#include "dirtran/trajectory.hpp"

namespace dirtran {

/// Decision vector ordering: y = [x_1..x_N, u_1..u_N, dT].
struct DecisionLayout {
  int nodes = 0;
  int state_dim = 0;
  int control_dim = 0;

  int size() const { return nodes * (state_dim + control_dim) + 1; }
  int state_index(int k, int i) const { return k * state_dim + i; }
  int control_index(int k, int j) const {
    return nodes * state_dim + k * control_dim + j;
  }
  int dt_index() const { return nodes * (state_dim + control_dim); }
};

namespace detail {
inline void check_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            const char* where) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(where) + ": dimension mismatch");
  }
}
}  // namespace detail

/// Euler defect: x_{k+1} - x_k - f(x_k, u_k) * dT.
inline Eigen::VectorXd defect_euler(const Eigen::VectorXd& f_k,
                                    const Eigen::VectorXd& x_k,
                                    const Eigen::VectorXd& x_k1, double dt) {
  detail::check_same_size(f_k, x_k, "defect_euler");
  detail::check_same_size(x_k, x_k1, "defect_euler");
  if (!(dt > 0.0)) throw ContractViolation("defect_euler: dt must be > 0");
  return x_k1 - x_k - f_k * dt;
}

/// Trapezoidal defect: x_{k+1} - x_k - dT/2 * (f_k + f_{k+1}).
inline Eigen::VectorXd defect_trapezoidal(const Eigen::VectorXd& f_k,
                                          const Eigen::VectorXd& f_k1,
                                          const Eigen::VectorXd& x_k,
                                          const Eigen::VectorXd& x_k1,
                                          double dt) {
  detail::check_same_size(f_k, f_k1, "defect_trapezoidal");
  detail::check_same_size(f_k, x_k, "defect_trapezoidal");
  detail::check_same_size(x_k, x_k1, "defect_trapezoidal");
  return x_k1 - x_k - 0.5 * dt * (f_k + f_k1);
}

/// Compressed Hermite-Simpson midpoint state and control.
inline void hermite_midpoint(const Eigen::VectorXd& x_k,
                             const Eigen::VectorXd& u_k,
                             const Eigen::VectorXd& x_k1,
                             const Eigen::VectorXd& u_k1,
                             const Eigen::VectorXd& f_k,
                             const Eigen::VectorXd& f_k1, double dt,
                             Eigen::VectorXd& x_c, Eigen::VectorXd& u_c) {
  x_c = 0.5 * (x_k + x_k1) + (dt / 8.0) * (f_k - f_k1);
  u_c = 0.5 * (u_k + u_k1);
}

/// Hermite-Simpson defect:
/// x_{k+1} - x_k - dT/6 * (f_k + 4 f(x_c, u_c) + f_{k+1}).
inline Eigen::VectorXd defect_hermite_simpson(const SystemModel& model,
                                              const Eigen::VectorXd& x_k,
                                              const Eigen::VectorXd& u_k,
                                              const Eigen::VectorXd& x_k1,
                                              const Eigen::VectorXd& u_k1,
                                              double dt) {
  detail::check_same_size(x_k, x_k1, "defect_hermite_simpson");
  detail::check_same_size(u_k, u_k1, "defect_hermite_simpson");
  if (!(dt > 0.0)) {
    throw ContractViolation("defect_hermite_simpson: dt must be > 0");
  }
  const Eigen::VectorXd f_k = eval_dynamics(model, x_k, u_k);
  const Eigen::VectorXd f_k1 = eval_dynamics(model, x_k1, u_k1);
  Eigen::VectorXd x_c, u_c;
  hermite_midpoint(x_k, u_k, x_k1, u_k1, f_k, f_k1, dt, x_c, u_c);
  const Eigen::VectorXd f_c = eval_dynamics(model, x_c, u_c);
  return x_k1 - x_k - (dt / 6.0) * (f_k + 4.0 * f_c + f_k1);
}

/// Signed squared clearance of the state's planar position from a circular
/// obstacle inflated by the robot margin; feasible when >= 0.
inline double obstacle_clearance(const SystemModel& model,
                                 const Eigen::VectorXd& x, const Obstacle& obs,
                                 double margin) {
  const auto map = model.planar_map();
  if (!map) {
    throw ContractViolation("obstacle_clearance: model '" + model.name() +
                            "' has no planar position");
  }
  const double px = map->sx * x[map->ix];
  const double py = map->sy * x[map->iy];
  const double r_total = obs.radius + margin;
  const double dx = px - obs.cx;
  const double dy = py - obs.cy;
  return dx * dx + dy * dy - r_total * r_total;
}

/// Running cost integrand l(x, u) = x'Qx + u'Ru with diagonal weights.
inline double running_cost(const Eigen::VectorXd& q, const Eigen::VectorXd& r,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return (q.array() * x.array().square()).sum() +
         (r.array() * u.array().square()).sum();
}

/// Quadrature of the running cost over a trajectory, matching its scheme
/// (rectangle / trapezoid / Simpson with the Hermite midpoint).
inline double cost_quadrature(const PlannedTrajectory& traj,
                              const TaskSpec& task) {
  const Eigen::VectorXd q = task.effective_q();
  const Eigen::VectorXd& r = task.r_weights;
  const int last = traj.nodes() - 1;
  const double dt = traj.dt;
  auto node_cost = [&](int k) {
    return running_cost(q, r, traj.states.row(k).transpose(),
                        traj.controls.row(k).transpose());
  };
  double cost = 0.0;
  switch (traj.scheme) {
    case Scheme::Euler:
      for (int k = 0; k < last; ++k) cost += dt * node_cost(k);
      break;
    case Scheme::Trapezoidal:
      for (int k = 0; k < last; ++k) {
        cost += 0.5 * dt * (node_cost(k) + node_cost(k + 1));
      }
      break;
    case Scheme::HermiteSimpson: {
      const SystemModel& model = *task.model;
      for (int k = 0; k < last; ++k) {
        const Eigen::VectorXd x0 = traj.states.row(k).transpose();
        const Eigen::VectorXd x1 = traj.states.row(k + 1).transpose();
        const Eigen::VectorXd u0 = traj.controls.row(k).transpose();
        const Eigen::VectorXd u1 = traj.controls.row(k + 1).transpose();
        Eigen::VectorXd x_c, u_c;
        hermite_midpoint(x0, u0, x1, u1, eval_dynamics(model, x0, u0),
                         eval_dynamics(model, x1, u1), dt, x_c, u_c);
        cost += (dt / 6.0) * (node_cost(k) + 4.0 * running_cost(q, r, x_c, u_c) +
                              node_cost(k + 1));
      }
      break;
    }
  }
  return cost;
}

/// NLP initialization strategy.
enum class InitStrategy { Zero, Linear, Incremental };

inline std::string init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::Zero: return "zero";
    case InitStrategy::Linear: return "linear";
    case InitStrategy::Incremental: return "incremental";
  }
  return "?";
}

inline InitStrategy parse_init(const std::string& name) {
  if (name == "zero") return InitStrategy::Zero;
  if (name == "linear") return InitStrategy::Linear;
  if (name == "incremental") return InitStrategy::Incremental;
  throw ConfigError("unknown init strategy '" + name +
                    "' (zero, linear, incremental)");
}

/// The task transcribed into a finite sparse NLP:
///   objective   quadrature of the running cost
///   equalities  (N-1)*n defects plus the n terminal conditions x_N = xg
///   inequalities per-node obstacle clearances (>= 0)
///   bounds      x_1 fixed, state/control boxes, dT window implementing
///               T_min <= (N-1) dT <= T_max.
class TranscribedProblem
    : public std::enable_shared_from_this<TranscribedProblem> {
 public:
  TranscribedProblem(TaskSpec task, Scheme scheme, unsigned structure_seed = 0)
      : task_(std::move(task)), scheme_(scheme) {
    task_.validate();
    const SystemModel& model = *task_.model;
    n_ = model.state_dim();
    m_ = model.control_dim();
    layout_ = DecisionLayout{task_.nodes, n_, m_};
    q_eff_ = task_.effective_q();

    build_bounds();
    probe_defect_structure(structure_seed);
    build_patterns();
  }

  const TaskSpec& task() const { return task_; }
  Scheme scheme() const { return scheme_; }
  const DecisionLayout& layout() const { return layout_; }
  int num_vars() const { return layout_.size(); }
  int num_equalities() const { return (layout_.nodes - 1) * n_ + n_; }
  int num_inequalities() const {
    return layout_.nodes * static_cast<int>(task_.obstacles.size());
  }
  const SparsityPattern& eq_pattern() const { return eq_pattern_; }
  const SparsityPattern& ineq_pattern() const { return ineq_pattern_; }
  const Eigen::VectorXd& var_lower() const { return var_lower_; }
  const Eigen::VectorXd& var_upper() const { return var_upper_; }
  const Eigen::VectorXd& ineq_lower() const { return ineq_lower_; }
  const Eigen::VectorXd& ineq_upper() const { return ineq_upper_; }

  Eigen::VectorXd state_at(const Eigen::VectorXd& y, int k) const {
    return y.segment(layout_.state_index(k, 0), n_);
  }
  Eigen::VectorXd control_at(const Eigen::VectorXd& y, int k) const {
    return y.segment(layout_.control_index(k, 0), m_);
  }
  double dt_of(const Eigen::VectorXd& y) const { return y[layout_.dt_index()]; }

  PlannedTrajectory unpack(const Eigen::VectorXd& y) const {
    check_y(y);
    PlannedTrajectory traj;
    traj.scheme = scheme_;
    traj.dt = dt_of(y);
    traj.states.resize(layout_.nodes, n_);
    traj.controls.resize(layout_.nodes, m_);
    for (int k = 0; k < layout_.nodes; ++k) {
      traj.states.row(k) = state_at(y, k).transpose();
      traj.controls.row(k) = control_at(y, k).transpose();
    }
    return traj;
  }

  Eigen::VectorXd pack(const PlannedTrajectory& traj) const {
    if (traj.nodes() != layout_.nodes || traj.states.cols() != n_ ||
        traj.controls.cols() != m_) {
      throw ContractViolation("pack: trajectory shape mismatch");
    }
    Eigen::VectorXd y(layout_.size());
    for (int k = 0; k < layout_.nodes; ++k) {
      y.segment(layout_.state_index(k, 0), n_) = traj.states.row(k);
      y.segment(layout_.control_index(k, 0), m_) = traj.controls.row(k);
    }
    y[layout_.dt_index()] = traj.dt;
    return y;
  }

  double objective(const Eigen::VectorXd& y) const {
    check_y(y);
    return cost_quadrature(unpack_fast(y), task_);
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& y) const {
    check_y(y);
    const int last = layout_.nodes - 1;
    const double dt = dt_of(y);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.size());
    double dcost_ddt = 0.0;
    auto lx = [&](const Eigen::VectorXd& x) {
      return (q_eff_.array() * x.array().square()).sum();
    };
    auto lu = [&](const Eigen::VectorXd& u) {
      return (task_.r_weights.array() * u.array().square()).sum();
    };
    switch (scheme_) {
      case Scheme::Euler: {
        for (int k = 0; k < last; ++k) {
          const Eigen::VectorXd x = state_at(y, k);
          const Eigen::VectorXd u = control_at(y, k);
          grad.segment(layout_.state_index(k, 0), n_) +=
              dt * 2.0 * q_eff_.cwiseProduct(x);
          grad.segment(layout_.control_index(k, 0), m_) +=
              dt * 2.0 * task_.r_weights.cwiseProduct(u);
          dcost_ddt += lx(x) + lu(u);
        }
        break;
      }
      case Scheme::Trapezoidal: {
        for (int k = 0; k <= last; ++k) {
          const double w = (k == 0 || k == last) ? 0.5 : 1.0;
          const Eigen::VectorXd x = state_at(y, k);
          const Eigen::VectorXd u = control_at(y, k);
          grad.segment(layout_.state_index(k, 0), n_) +=
              w * dt * 2.0 * q_eff_.cwiseProduct(x);
          grad.segment(layout_.control_index(k, 0), m_) +=
              w * dt * 2.0 * task_.r_weights.cwiseProduct(u);
          dcost_ddt += w * (lx(x) + lu(u));
        }
        break;
      }
      case Scheme::HermiteSimpson: {
        const SystemModel& model = *task_.model;
        for (int k = 0; k < last; ++k) {
          const Eigen::VectorXd x0 = state_at(y, k);
          const Eigen::VectorXd x1 = state_at(y, k + 1);
          const Eigen::VectorXd u0 = control_at(y, k);
          const Eigen::VectorXd u1 = control_at(y, k + 1);
          const Eigen::VectorXd f0 = eval_dynamics(model, x0, u0);
          const Eigen::VectorXd f1 = eval_dynamics(model, x1, u1);
          Eigen::VectorXd xc, uc;
          hermite_midpoint(x0, u0, x1, u1, f0, f1, dt, xc, uc);
          const Linearization l0 = linearize(model, x0, u0);
          const Linearization l1 = linearize(model, x1, u1);
          const Eigen::VectorXd gxc = 2.0 * q_eff_.cwiseProduct(xc);
          const Eigen::VectorXd guc = 2.0 * task_.r_weights.cwiseProduct(uc);
          const double w = dt / 6.0;

          grad.segment(layout_.state_index(k, 0), n_) +=
              w * 2.0 * q_eff_.cwiseProduct(x0) +
              4.0 * w * (0.5 * gxc + (dt / 8.0) * l0.A.transpose() * gxc);
          grad.segment(layout_.state_index(k + 1, 0), n_) +=
              w * 2.0 * q_eff_.cwiseProduct(x1) +
              4.0 * w * (0.5 * gxc - (dt / 8.0) * l1.A.transpose() * gxc);
          grad.segment(layout_.control_index(k, 0), m_) +=
              w * 2.0 * task_.r_weights.cwiseProduct(u0) +
              4.0 * w * ((dt / 8.0) * l0.B.transpose() * gxc + 0.5 * guc);
          grad.segment(layout_.control_index(k + 1, 0), m_) +=
              w * 2.0 * task_.r_weights.cwiseProduct(u1) +
              4.0 * w * (-(dt / 8.0) * l1.B.transpose() * gxc + 0.5 * guc);

          const double lc =
              running_cost(q_eff_, task_.r_weights, xc, uc);
          dcost_ddt += (lx(x0) + lu(u0) + 4.0 * lc + lx(x1) + lu(u1)) / 6.0 +
                       (dt / 6.0) * 4.0 * gxc.dot((f0 - f1) / 8.0);
        }
        break;
      }
    }
    grad[layout_.dt_index()] = dcost_ddt;
    return grad;
  }

  Eigen::VectorXd equalities(const Eigen::VectorXd& y) const {
    check_y(y);
    const SystemModel& model = *task_.model;
    const int last = layout_.nodes - 1;
    const double dt = dt_of(y);
    Eigen::VectorXd zeta(num_equalities());
    std::vector<Eigen::VectorXd> f(layout_.nodes);
    for (int k = 0; k <= last; ++k) {
      f[k] = eval_dynamics(model, state_at(y, k), control_at(y, k));
    }
    for (int k = 0; k < last; ++k) {
      const Eigen::VectorXd x0 = state_at(y, k);
      const Eigen::VectorXd x1 = state_at(y, k + 1);
      switch (scheme_) {
        case Scheme::Euler:
          zeta.segment(k * n_, n_) = x1 - x0 - dt * f[k];
          break;
        case Scheme::Trapezoidal:
          zeta.segment(k * n_, n_) = x1 - x0 - 0.5 * dt * (f[k] + f[k + 1]);
          break;
        case Scheme::HermiteSimpson: {
          Eigen::VectorXd xc, uc;
          hermite_midpoint(x0, control_at(y, k), x1, control_at(y, k + 1),
                           f[k], f[k + 1], dt, xc, uc);
          const Eigen::VectorXd fc = eval_dynamics(model, xc, uc);
          zeta.segment(k * n_, n_) =
              x1 - x0 - (dt / 6.0) * (f[k] + 4.0 * fc + f[k + 1]);
          break;
        }
      }
    }
    zeta.segment(last * n_, n_) = state_at(y, last) - task_.xg;
    return zeta;
  }

  /// Values aligned with eq_pattern().
  void eq_jacobian(const Eigen::VectorXd& y, std::vector<double>& values) const {
    check_y(y);
    values.resize(eq_pattern_.size());
    const SystemModel& model = *task_.model;
    const int last = layout_.nodes - 1;
    const double dt = dt_of(y);
    const int block_cols = 2 * (n_ + m_) + 1;

    std::vector<Linearization> lin(layout_.nodes);
    std::vector<Eigen::VectorXd> f(layout_.nodes);
    for (int k = 0; k <= last; ++k) {
      const Eigen::VectorXd x = state_at(y, k);
      const Eigen::VectorXd u = control_at(y, k);
      f[k] = eval_dynamics(model, x, u);
      lin[k] = linearize(model, x, u);
    }

    Eigen::MatrixXd block(n_, block_cols);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_, n_);
    size_t slot = 0;
    for (int k = 0; k < last; ++k) {
      block.setZero();
      // Local columns: [x_k (n), u_k (m), x_{k+1} (n), u_{k+1} (m), dT].
      switch (scheme_) {
        case Scheme::Euler:
          block.middleCols(0, n_) = -eye - dt * lin[k].A;
          block.middleCols(n_, m_) = -dt * lin[k].B;
          block.middleCols(n_ + m_, n_) = eye;
          block.col(block_cols - 1) = -f[k];
          break;
        case Scheme::Trapezoidal:
          block.middleCols(0, n_) = -eye - 0.5 * dt * lin[k].A;
          block.middleCols(n_, m_) = -0.5 * dt * lin[k].B;
          block.middleCols(n_ + m_, n_) = eye - 0.5 * dt * lin[k + 1].A;
          block.middleCols(2 * n_ + m_, m_) = -0.5 * dt * lin[k + 1].B;
          block.col(block_cols - 1) = -0.5 * (f[k] + f[k + 1]);
          break;
        case Scheme::HermiteSimpson: {
          const Eigen::VectorXd x0 = state_at(y, k);
          const Eigen::VectorXd x1 = state_at(y, k + 1);
          Eigen::VectorXd xc, uc;
          hermite_midpoint(x0, control_at(y, k), x1, control_at(y, k + 1),
                           f[k], f[k + 1], dt, xc, uc);
          const Eigen::VectorXd fc = eval_dynamics(model, xc, uc);
          const Linearization lc = linearize(model, xc, uc);
          const double w = dt / 6.0;
          block.middleCols(0, n_) =
              -eye - w * (lin[k].A +
                          4.0 * lc.A * (0.5 * eye + (dt / 8.0) * lin[k].A));
          block.middleCols(n_, m_) =
              -w * (lin[k].B +
                    4.0 * ((dt / 8.0) * lc.A * lin[k].B + 0.5 * lc.B));
          block.middleCols(n_ + m_, n_) =
              eye - w * (lin[k + 1].A +
                         4.0 * lc.A * (0.5 * eye - (dt / 8.0) * lin[k + 1].A));
          block.middleCols(2 * n_ + m_, m_) =
              -w * (lin[k + 1].B +
                    4.0 * (-(dt / 8.0) * lc.A * lin[k + 1].B + 0.5 * lc.B));
          block.col(block_cols - 1) =
              -(f[k] + 4.0 * fc + f[k + 1]) / 6.0 -
              (dt / 12.0) * (lc.A * (f[k] - f[k + 1]));
          break;
        }
      }
      for (const auto& [i, lc_col] : defect_block_entries_) {
        values[slot++] = block(i, lc_col);
      }
    }
    for (int i = 0; i < n_; ++i) values[slot++] = 1.0;  // terminal identity
  }

  const SparsityPattern& hessian_pattern() const { return hess_pattern_; }

  /// Exact Lagrangian Hessian values aligned with hessian_pattern():
  /// grad^2 f0 + sum_i lam_i grad^2 zeta_i - sum_j mu_j grad^2 g_j.
  /// Duplicate coordinates accumulate. Constraint curvature uses
  /// finite-differenced dynamics Jacobians; the Hermite-Simpson midpoint
  /// terms drop the second-order sensitivities of the midpoint map itself.
  void lagrangian_hessian(const Eigen::VectorXd& y,
                          const Eigen::VectorXd& eq_mult,
                          const Eigen::VectorXd& ineq_mult,
                          std::vector<double>& values) const {
    check_y(y);
    if (eq_mult.size() != num_equalities() ||
        ineq_mult.size() != num_inequalities()) {
      throw ContractViolation("lagrangian_hessian: multiplier size mismatch");
    }
    values.assign(hess_pattern_.size(), 0.0);
    const SystemModel& model = *task_.model;
    const int last = layout_.nodes - 1;
    const int nm = n_ + m_;
    const int block_dim = 2 * nm + 1;
    const double dt = dt_of(y);

    std::vector<Linearization> lin(layout_.nodes);
    std::vector<Eigen::VectorXd> f(layout_.nodes);
    for (int k = 0; k <= last; ++k) {
      const Eigen::VectorXd x = state_at(y, k);
      const Eigen::VectorXd u = control_at(y, k);
      f[k] = eval_dynamics(model, x, u);
      lin[k] = linearize(model, x, u);
    }

    const Eigen::VectorXd w2 =
        (Eigen::VectorXd(nm) << 2.0 * q_eff_, 2.0 * task_.r_weights)
            .finished();
    auto cost_grad = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      Eigen::VectorXd g(nm);
      g.head(n_) = 2.0 * q_eff_.cwiseProduct(x);
      g.tail(m_) = 2.0 * task_.r_weights.cwiseProduct(u);
      return g;
    };
    auto node_grad = [&](int k, const Eigen::VectorXd& w) {
      Eigen::VectorXd g(nm);
      g.head(n_) = lin[k].A.transpose() * w;
      g.tail(m_) = lin[k].B.transpose() * w;
      return g;
    };

    Eigen::MatrixXd h_loc(block_dim, block_dim);
    size_t slot = 0;
    for (int k = 0; k < last; ++k) {
      h_loc.setZero();
      const Eigen::VectorXd lam = eq_mult.segment(k * n_, n_);
      const bool with_curvature = lam.cwiseAbs().maxCoeff() > 0.0;
      const Eigen::VectorXd x0 = state_at(y, k);
      const Eigen::VectorXd u0 = control_at(y, k);
      const Eigen::VectorXd x1 = state_at(y, k + 1);
      const Eigen::VectorXd u1 = control_at(y, k + 1);

      switch (scheme_) {
        case Scheme::Euler: {
          if (with_curvature) {
            h_loc.topLeftCorner(nm, nm) -=
                dt * weighted_dynamics_hessian(model, x0, u0, lam);
            const Eigen::VectorXd g0 = node_grad(k, lam);
            h_loc.col(block_dim - 1).head(nm) -= g0;
            h_loc.row(block_dim - 1).head(nm) -= g0;
          }
          // Objective: dt * l(x0, u0).
          h_loc.topLeftCorner(nm, nm).diagonal() += dt * w2;
          const Eigen::VectorXd a0 = cost_grad(x0, u0);
          h_loc.col(block_dim - 1).head(nm) += a0;
          h_loc.row(block_dim - 1).head(nm) += a0;
          break;
        }
        case Scheme::Trapezoidal: {
          if (with_curvature) {
            h_loc.topLeftCorner(nm, nm) -=
                0.5 * dt * weighted_dynamics_hessian(model, x0, u0, lam);
            h_loc.block(nm, nm, nm, nm) -=
                0.5 * dt * weighted_dynamics_hessian(model, x1, u1, lam);
            const Eigen::VectorXd g0 = node_grad(k, lam);
            const Eigen::VectorXd g1 = node_grad(k + 1, lam);
            h_loc.col(block_dim - 1).head(nm) -= 0.5 * g0;
            h_loc.row(block_dim - 1).head(nm) -= 0.5 * g0;
            h_loc.col(block_dim - 1).segment(nm, nm) -= 0.5 * g1;
            h_loc.row(block_dim - 1).segment(nm, nm) -= 0.5 * g1;
          }
          // Objective: dt/2 * (l0 + l1).
          h_loc.topLeftCorner(nm, nm).diagonal() += 0.5 * dt * w2;
          h_loc.block(nm, nm, nm, nm).diagonal() += 0.5 * dt * w2;
          const Eigen::VectorXd a0 = 0.5 * cost_grad(x0, u0);
          const Eigen::VectorXd a1 = 0.5 * cost_grad(x1, u1);
          h_loc.col(block_dim - 1).head(nm) += a0;
          h_loc.row(block_dim - 1).head(nm) += a0;
          h_loc.col(block_dim - 1).segment(nm, nm) += a1;
          h_loc.row(block_dim - 1).segment(nm, nm) += a1;
          break;
        }
        case Scheme::HermiteSimpson: {
          Eigen::VectorXd xc, uc;
          hermite_midpoint(x0, u0, x1, u1, f[k], f[k + 1], dt, xc, uc);
          const Linearization linc = linearize(model, xc, uc);

          // Sensitivity of the midpoint (xc, uc) to the interval variables.
          Eigen::MatrixXd mid_map = Eigen::MatrixXd::Zero(nm, block_dim);
          const Eigen::MatrixXd eye_n = Eigen::MatrixXd::Identity(n_, n_);
          mid_map.block(0, 0, n_, n_) = 0.5 * eye_n + (dt / 8.0) * lin[k].A;
          mid_map.block(0, n_, n_, m_) = (dt / 8.0) * lin[k].B;
          mid_map.block(0, nm, n_, n_) = 0.5 * eye_n - (dt / 8.0) * lin[k + 1].A;
          mid_map.block(0, nm + n_, n_, m_) = -(dt / 8.0) * lin[k + 1].B;
          mid_map.block(0, block_dim - 1, n_, 1) = (f[k] - f[k + 1]) / 8.0;
          for (int j = 0; j < m_; ++j) {
            mid_map(n_ + j, n_ + j) = 0.5;
            mid_map(n_ + j, nm + n_ + j) = 0.5;
          }

          if (with_curvature) {
            Eigen::VectorXd gc(nm);
            gc.head(n_) = linc.A.transpose() * lam;
            gc.tail(m_) = linc.B.transpose() * lam;
            Eigen::VectorXd s_grad = Eigen::VectorXd::Zero(block_dim);
            s_grad.head(nm) += node_grad(k, lam);
            s_grad.segment(nm, nm) += node_grad(k + 1, lam);
            s_grad += 4.0 * mid_map.transpose() * gc;

            Eigen::MatrixXd s_hess = Eigen::MatrixXd::Zero(block_dim, block_dim);
            s_hess.topLeftCorner(nm, nm) +=
                weighted_dynamics_hessian(model, x0, u0, lam);
            s_hess.block(nm, nm, nm, nm) +=
                weighted_dynamics_hessian(model, x1, u1, lam);
            s_hess += 4.0 * mid_map.transpose() *
                      weighted_dynamics_hessian(model, xc, uc, lam) * mid_map;

            h_loc -= (dt / 6.0) * s_hess;
            h_loc.col(block_dim - 1) -= (1.0 / 6.0) * s_grad;
            h_loc.row(block_dim - 1) -= (1.0 / 6.0) * s_grad;
          }

          // Objective: dt/6 * (l0 + 4 lc + l1).
          Eigen::VectorXd sj_grad = Eigen::VectorXd::Zero(block_dim);
          sj_grad.head(nm) += cost_grad(x0, u0);
          sj_grad.segment(nm, nm) += cost_grad(x1, u1);
          sj_grad += 4.0 * mid_map.transpose() * cost_grad(xc, uc);

          Eigen::MatrixXd sj_hess = Eigen::MatrixXd::Zero(block_dim, block_dim);
          sj_hess.topLeftCorner(nm, nm).diagonal() += w2;
          sj_hess.block(nm, nm, nm, nm).diagonal() += w2;
          sj_hess += 4.0 * mid_map.transpose() * w2.asDiagonal() * mid_map;

          h_loc += (dt / 6.0) * sj_hess;
          h_loc.col(block_dim - 1) += (1.0 / 6.0) * sj_grad;
          h_loc.row(block_dim - 1) += (1.0 / 6.0) * sj_grad;
          break;
        }
      }
      for (int i = 0; i < block_dim; ++i) {
        for (int j = 0; j < block_dim; ++j) {
          values[slot++] = h_loc(i, j);
        }
      }
    }

    const auto map = task_.model->planar_map();
    const int n_obs = static_cast<int>(task_.obstacles.size());
    for (int k = 0; k < layout_.nodes; ++k) {
      for (int o = 0; o < n_obs; ++o) {
        const double mu = ineq_mult[k * n_obs + o];
        values[slot++] = -mu * 2.0 * map->sx * map->sx;
        values[slot++] = -mu * 2.0 * map->sy * map->sy;
      }
    }
  }

  Eigen::VectorXd inequalities(const Eigen::VectorXd& y) const {
    check_y(y);
    const int n_obs = static_cast<int>(task_.obstacles.size());
    Eigen::VectorXd g(num_inequalities());
    for (int k = 0; k < layout_.nodes; ++k) {
      const Eigen::VectorXd x = state_at(y, k);
      for (int o = 0; o < n_obs; ++o) {
        g[k * n_obs + o] = obstacle_clearance(*task_.model, x,
                                              task_.obstacles[o],
                                              task_.obstacle_margin);
      }
    }
    return g;
  }

  /// Values aligned with ineq_pattern(): two entries per obstacle row.
  void ineq_jacobian(const Eigen::VectorXd& y,
                     std::vector<double>& values) const {
    check_y(y);
    values.resize(ineq_pattern_.size());
    const auto map = task_.model->planar_map();
    const int n_obs = static_cast<int>(task_.obstacles.size());
    size_t slot = 0;
    for (int k = 0; k < layout_.nodes; ++k) {
      const Eigen::VectorXd x = state_at(y, k);
      for (int o = 0; o < n_obs; ++o) {
        const Obstacle& obs = task_.obstacles[o];
        const double px = map->sx * x[map->ix];
        const double py = map->sy * x[map->iy];
        values[slot++] = 2.0 * (px - obs.cx) * map->sx;
        values[slot++] = 2.0 * (py - obs.cy) * map->sy;
      }
    }
  }

  /// Wrap into the generic solver-facing problem. The returned object keeps
  /// this transcription alive via shared_ptr.
  NlpProblem to_nlp() const {
    auto self = shared_from_this();
    NlpProblem p;
    p.num_vars = num_vars();
    p.num_eq = num_equalities();
    p.num_ineq = num_inequalities();
    p.objective = [self](const Eigen::VectorXd& y) { return self->objective(y); };
    p.gradient = [self](const Eigen::VectorXd& y) {
      return self->objective_gradient(y);
    };
    p.equalities = [self](const Eigen::VectorXd& y) {
      return self->equalities(y);
    };
    p.eq_jacobian = [self](const Eigen::VectorXd& y,
                           std::vector<double>& values) {
      self->eq_jacobian(y, values);
    };
    if (p.num_ineq > 0) {
      p.inequalities = [self](const Eigen::VectorXd& y) {
        return self->inequalities(y);
      };
      p.ineq_jacobian = [self](const Eigen::VectorXd& y,
                               std::vector<double>& values) {
        self->ineq_jacobian(y, values);
      };
    }
    p.eq_pattern = eq_pattern_;
    p.ineq_pattern = ineq_pattern_;
    p.hess_pattern = hess_pattern_;
    p.lagrangian_hessian = [self](const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& eq_mult,
                                  const Eigen::VectorXd& ineq_mult,
                                  std::vector<double>& values) {
      self->lagrangian_hessian(y, eq_mult, ineq_mult, values);
    };
    p.ineq_lower = ineq_lower_;
    p.ineq_upper = ineq_upper_;
    p.var_lower = var_lower_;
    p.var_upper = var_upper_;

    // Quasi-Newton block structure: one block per node. The shared time
    // step couples into every defect block, so its Hessian column is
    // estimated exactly by the solvers instead.
    const double dt0 = 0.5 * (task_.t_min + task_.t_max) / (layout_.nodes - 1);
    for (int k = 0; k < layout_.nodes; ++k) {
      std::vector<int> block;
      for (int i = 0; i < n_; ++i) block.push_back(layout_.state_index(k, i));
      for (int j = 0; j < m_; ++j) block.push_back(layout_.control_index(k, j));
      p.hessian_blocks.push_back(std::move(block));
      Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(n_ + m_, n_ + m_);
      h0.diagonal().head(n_) = 2.0 * dt0 * q_eff_;
      h0.diagonal().tail(m_) = 2.0 * dt0 * task_.r_weights;
      h0.diagonal().array() += 1e-3;
      p.initial_block_hessians.push_back(std::move(h0));
    }
    p.hessian_blocks.push_back({layout_.dt_index()});
    p.initial_block_hessians.push_back(Eigen::MatrixXd::Identity(1, 1));
    return p;
  }

 private:
  void check_y(const Eigen::VectorXd& y) const {
    if (y.size() != layout_.size()) {
      throw ContractViolation("TranscribedProblem: decision vector has size " +
                              std::to_string(y.size()) + ", expected " +
                              std::to_string(layout_.size()));
    }
  }

  // unpack without the validation (internal hot path)
  PlannedTrajectory unpack_fast(const Eigen::VectorXd& y) const {
    PlannedTrajectory traj;
    traj.scheme = scheme_;
    traj.dt = y[layout_.dt_index()];
    traj.states.resize(layout_.nodes, n_);
    traj.controls.resize(layout_.nodes, m_);
    for (int k = 0; k < layout_.nodes; ++k) {
      traj.states.row(k) = state_at(y, k).transpose();
      traj.controls.row(k) = control_at(y, k).transpose();
    }
    return traj;
  }

  void build_bounds() {
    const int p = layout_.size();
    var_lower_ = Eigen::VectorXd::Constant(p, -kInfinity);
    var_upper_ = Eigen::VectorXd::Constant(p, kInfinity);
    for (int k = 0; k < layout_.nodes; ++k) {
      if (task_.state_lower.size() > 0) {
        for (int i = 0; i < n_; ++i) {
          var_lower_[layout_.state_index(k, i)] = task_.state_lower[i];
          var_upper_[layout_.state_index(k, i)] = task_.state_upper[i];
        }
      }
      if (task_.control_lower.size() > 0) {
        for (int j = 0; j < m_; ++j) {
          var_lower_[layout_.control_index(k, j)] = task_.control_lower[j];
          var_upper_[layout_.control_index(k, j)] = task_.control_upper[j];
        }
      }
    }
    // Fixed initial state.
    for (int i = 0; i < n_; ++i) {
      var_lower_[layout_.state_index(0, i)] = task_.x1[i];
      var_upper_[layout_.state_index(0, i)] = task_.x1[i];
    }
    const int intervals = layout_.nodes - 1;
    var_lower_[layout_.dt_index()] = task_.t_min / intervals;
    var_upper_[layout_.dt_index()] = task_.t_max / intervals;

    const int n_ineq = num_inequalities();
    ineq_lower_ = Eigen::VectorXd::Zero(n_ineq);
    ineq_upper_ = Eigen::VectorXd::Constant(n_ineq, kInfinity);
  }

  /// Detect the structural support of one defect block by finite-differencing
  /// the defect at a few pseudo-random interval configurations. Variables the
  /// defect never reads produce bitwise-zero differences, so the support is
  /// exact for fixed-structure dynamics.
  void probe_defect_structure(unsigned seed) {
    const SystemModel& model = *task_.model;
    const int block_cols = 2 * (n_ + m_) + 1;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(n_, block_cols);
    mask.setConstant(false);
    std::mt19937 rng(seed + 98761u);
    std::uniform_real_distribution<double> box(-0.4, 0.4);
    std::uniform_real_distribution<double> dt_box(0.05, 0.3);

    auto defect = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      const Eigen::VectorXd x0 = z.segment(0, n_);
      const Eigen::VectorXd u0 = z.segment(n_, m_);
      const Eigen::VectorXd x1 = z.segment(n_ + m_, n_);
      const Eigen::VectorXd u1 = z.segment(2 * n_ + m_, m_);
      const double dt = z[block_cols - 1];
      switch (scheme_) {
        case Scheme::Euler:
          return defect_euler(model.dynamics(x0, u0), x0, x1, dt);
        case Scheme::Trapezoidal:
          return defect_trapezoidal(model.dynamics(x0, u0),
                                    model.dynamics(x1, u1), x0, x1, dt);
        case Scheme::HermiteSimpson:
        default:
          return defect_hermite_simpson(model, x0, u0, x1, u1, dt);
      }
    };

    for (int sample = 0; sample < 6; ++sample) {
      Eigen::VectorXd z(block_cols);
      for (int i = 0; i < block_cols - 1; ++i) z[i] = box(rng);
      z[block_cols - 1] = dt_box(rng);
      for (int c = 0; c < block_cols; ++c) {
        const double h = fd_step(z[c]);
        Eigen::VectorXd zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        const Eigen::VectorXd diff = defect(zp) - defect(zm);
        for (int i = 0; i < n_; ++i) {
          if (std::abs(diff[i]) > 1e-11 * (1.0 + diff.cwiseAbs().maxCoeff())) {
            mask(i, c) = true;
          }
        }
      }
    }
    defect_block_entries_.clear();
    for (int i = 0; i < n_; ++i) {
      for (int c = 0; c < block_cols; ++c) {
        if (mask(i, c)) defect_block_entries_.emplace_back(i, c);
      }
    }
  }

  void build_patterns() {
    eq_pattern_.clear();
    const int last = layout_.nodes - 1;
    for (int k = 0; k < last; ++k) {
      for (const auto& [i, c] : defect_block_entries_) {
        eq_pattern_.emplace_back(k * n_ + i, local_to_global(k, c));
      }
    }
    for (int i = 0; i < n_; ++i) {
      eq_pattern_.emplace_back(last * n_ + i, layout_.state_index(last, i));
    }

    ineq_pattern_.clear();
    const auto map = task_.model->planar_map();
    const int n_obs = static_cast<int>(task_.obstacles.size());
    for (int k = 0; k < layout_.nodes; ++k) {
      for (int o = 0; o < n_obs; ++o) {
        ineq_pattern_.emplace_back(k * n_obs + o,
                                   layout_.state_index(k, map->ix));
        ineq_pattern_.emplace_back(k * n_obs + o,
                                   layout_.state_index(k, map->iy));
      }
    }

    // Lagrangian Hessian support: one dense symmetric block per interval
    // (nodes k, k+1 and dT), plus the obstacle diagonal entries.
    hess_pattern_.clear();
    const int block_dim = 2 * (n_ + m_) + 1;
    for (int k = 0; k < last; ++k) {
      for (int i = 0; i < block_dim; ++i) {
        for (int j = 0; j < block_dim; ++j) {
          hess_pattern_.emplace_back(local_to_global(k, i),
                                     local_to_global(k, j));
        }
      }
    }
    for (int k = 0; k < layout_.nodes; ++k) {
      for (int o = 0; o < n_obs; ++o) {
        const int ix = layout_.state_index(k, map->ix);
        const int iy = layout_.state_index(k, map->iy);
        hess_pattern_.emplace_back(ix, ix);
        hess_pattern_.emplace_back(iy, iy);
      }
    }
  }

  int local_to_global(int interval, int local_col) const {
    if (local_col < n_) return layout_.state_index(interval, local_col);
    local_col -= n_;
    if (local_col < m_) return layout_.control_index(interval, local_col);
    local_col -= m_;
    if (local_col < n_) return layout_.state_index(interval + 1, local_col);
    local_col -= n_;
    if (local_col < m_) return layout_.control_index(interval + 1, local_col);
    return layout_.dt_index();
  }

  TaskSpec task_;
  Scheme scheme_;
  int n_ = 0, m_ = 0;
  DecisionLayout layout_;
  Eigen::VectorXd q_eff_;
  Eigen::VectorXd var_lower_, var_upper_, ineq_lower_, ineq_upper_;
  std::vector<std::pair<int, int>> defect_block_entries_;  // (row, local col)
  SparsityPattern eq_pattern_, ineq_pattern_, hess_pattern_;
};

inline std::shared_ptr<TranscribedProblem> build_problem(
    const TaskSpec& task, Scheme scheme, unsigned structure_seed = 0) {
  return std::make_shared<TranscribedProblem>(task, scheme, structure_seed);
}

/// Initial decision vector for the given strategy. Incremental copies the
/// full prior solution (states, controls and dT); Zero and Linear start dT
/// at the middle of the admissible window.
inline Eigen::VectorXd initialize(const TranscribedProblem& problem,
                                  InitStrategy strategy,
                                  const PlannedTrajectory* prior = nullptr) {
  const DecisionLayout& layout = problem.layout();
  const TaskSpec& task = problem.task();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(layout.size());
  y[layout.dt_index()] =
      0.5 * (task.t_min + task.t_max) / (layout.nodes - 1);
  switch (strategy) {
    case InitStrategy::Zero:
      break;
    case InitStrategy::Linear: {
      for (int k = 0; k < layout.nodes; ++k) {
        const double a = static_cast<double>(k) / (layout.nodes - 1);
        y.segment(layout.state_index(k, 0), layout.state_dim) =
            (1.0 - a) * task.x1 + a * task.xg;
      }
      break;
    }
    case InitStrategy::Incremental: {
      if (prior == nullptr) {
        throw MissingPrior(
            "initialize: Incremental strategy requires a prior solution");
      }
      if (prior->nodes() != layout.nodes || prior->scheme != problem.scheme()) {
        throw ContractViolation(
            "initialize: prior solution must match node count and scheme");
      }
      y = problem.pack(*prior);
      break;
    }
  }
  return y;
}

}  // namespace dirtran

#endif  // DIRTRAN_TRANSCRIPTION_HPP
