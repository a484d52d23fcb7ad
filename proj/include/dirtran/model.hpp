#ifndef DIRTRAN_MODEL_HPP
#define DIRTRAN_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dirtran/errors.hpp"

namespace dirtran {

/// Jacobians A = df/dx, B = df/du evaluated at one point.
struct Linearization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
};

/// Linear planar-position decoder: p = (sx * x[ix], sy * x[iy]).
/// Models without a spatial interpretation return no map.
struct PlanarMap {
  int ix = 0;
  double sx = 1.0;
  int iy = 0;
  double sy = 1.0;
};

/// Continuous-time dynamical system xdot = f(x, u).
///
/// Models are immutable after construction; all evaluation entry points
/// are const and safe to call concurrently.
class SystemModel {
 public:
  SystemModel(std::string name, int state_dim, int control_dim,
              std::map<std::string, double> parameters,
              std::vector<std::string> state_labels,
              std::vector<std::string> control_labels)
      : name_(std::move(name)),
        n_(state_dim),
        m_(control_dim),
        parameters_(std::move(parameters)),
        state_labels_(std::move(state_labels)),
        control_labels_(std::move(control_labels)) {
    if (n_ < 1 || m_ < 1) {
      throw ContractViolation("SystemModel '" + name_ +
                              "': state and control dimensions must be >= 1");
    }
    for (const auto& [key, value] : parameters_) {
      if (!(value > 0.0)) {
        throw ContractViolation("SystemModel '" + name_ + "': parameter '" +
                                key + "' must be strictly positive");
      }
    }
  }
  virtual ~SystemModel() = default;

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  const std::map<std::string, double>& parameters() const {
    return parameters_;
  }
  double parameter(const std::string& key) const {
    auto it = parameters_.find(key);
    if (it == parameters_.end()) {
      throw ContractViolation("SystemModel '" + name_ + "': no parameter '" +
                              key + "'");
    }
    return it->second;
  }
  const std::vector<std::string>& state_labels() const {
    return state_labels_;
  }
  const std::vector<std::string>& control_labels() const {
    return control_labels_;
  }

  /// xdot = f(x, u). Dimensions are validated by eval_dynamics(); overrides
  /// may assume they are correct.
  virtual Eigen::VectorXd dynamics(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) const = 0;

  virtual bool has_analytic_jacobians() const { return false; }
  virtual void analytic_jacobians(const Eigen::VectorXd& /*x*/,
                                  const Eigen::VectorXd& /*u*/,
                                  Eigen::MatrixXd& /*A*/,
                                  Eigen::MatrixXd& /*B*/) const {
    throw ContractViolation("SystemModel '" + name_ +
                            "': no analytic Jacobians");
  }

  /// Planar position used by obstacle constraints, when the state has one.
  virtual std::optional<PlanarMap> planar_map() const { return std::nullopt; }

  /// State indices whose running-cost weight is forced to zero (position
  /// surrogates that the terminal condition already pins down).
  virtual std::vector<int> forced_zero_weight_indices() const { return {}; }

  /// Clone with named parameters rescaled (factor 1.01 = +1%).
  virtual std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>& scale) const = 0;

 protected:
  std::map<std::string, double> scaled_parameters(
      const std::map<std::string, double>& scale) const {
    std::map<std::string, double> out = parameters_;
    for (const auto& [key, factor] : scale) {
      auto it = out.find(key);
      if (it == out.end()) {
        throw ContractViolation("SystemModel '" + name_ + "': no parameter '" +
                                key + "' to scale");
      }
      it->second *= factor;
    }
    return out;
  }

 private:
  std::string name_;
  int n_;
  int m_;
  std::map<std::string, double> parameters_;
  std::vector<std::string> state_labels_;
  std::vector<std::string> control_labels_;
};

namespace detail {

inline void check_eval_args(const SystemModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, const char* where) {
  if (x.size() != model.state_dim() || u.size() != model.control_dim()) {
    throw ContractViolation(std::string(where) + ": dimension mismatch for '" +
                            model.name() + "' (got x " +
                            std::to_string(x.size()) + ", u " +
                            std::to_string(u.size()) + ")");
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw InvalidInput(std::string(where) + ": non-finite input for '" +
                       model.name() + "'");
  }
}

}  // namespace detail

/// xdot = f(x, u) with argument validation.
inline Eigen::VectorXd eval_dynamics(const SystemModel& model,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) {
  detail::check_eval_args(model, x, u, "eval_dynamics");
  return model.dynamics(x, u);
}

/// Central-difference step for component v: h = max(1e-6, 1e-6 * |v|).
inline double fd_step(double v) { return std::max(1e-6, 1e-6 * std::abs(v)); }

/// A = df/dx, B = df/du. Analytic when the model provides it, otherwise
/// central finite differences.
inline Linearization linearize(const SystemModel& model,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) {
  detail::check_eval_args(model, x, u, "linearize");
  const int n = model.state_dim();
  const int m = model.control_dim();
  Linearization lin;
  lin.x = x;
  lin.u = u;
  if (model.has_analytic_jacobians()) {
    lin.A.resize(n, n);
    lin.B.resize(n, m);
    model.analytic_jacobians(x, u, lin.A, lin.B);
  } else {
    lin.A.resize(n, n);
    lin.B.resize(n, m);
    Eigen::VectorXd xp = x, xm = x, up = u, um = u;
    for (int j = 0; j < n; ++j) {
      const double h = fd_step(x[j]);
      xp[j] = x[j] + h;
      xm[j] = x[j] - h;
      lin.A.col(j) = (model.dynamics(xp, u) - model.dynamics(xm, u)) / (2 * h);
      xp[j] = x[j];
      xm[j] = x[j];
    }
    for (int j = 0; j < m; ++j) {
      const double h = fd_step(u[j]);
      up[j] = u[j] + h;
      um[j] = u[j] - h;
      lin.B.col(j) = (model.dynamics(x, up) - model.dynamics(x, um)) / (2 * h);
      up[j] = u[j];
      um[j] = u[j];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(lin.A(i, j))) {
        throw LinearizationFailure("linearize: non-finite A(" +
                                   std::to_string(i) + "," +
                                   std::to_string(j) + ") for '" +
                                   model.name() + "'");
      }
    }
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(lin.B(i, j))) {
        throw LinearizationFailure("linearize: non-finite B(" +
                                   std::to_string(i) + "," +
                                   std::to_string(j) + ") for '" +
                                   model.name() + "'");
      }
    }
  }
  return lin;
}

/// Classical RK4 step with zero-order-hold control.
inline Eigen::VectorXd rk4_step(const SystemModel& model,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u, double dt) {
  detail::check_eval_args(model, x, u, "rk4_step");
  if (!(dt > 0.0)) {
    throw ContractViolation("rk4_step: dt must be > 0");
  }
  const Eigen::VectorXd k1 = model.dynamics(x, u);
  const Eigen::VectorXd k2 = model.dynamics(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = model.dynamics(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = model.dynamics(x + dt * k3, u);
  Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw IntegrationFailure("rk4_step: non-finite state for '" +
                             model.name() + "'");
  }
  return next;
}

/// Hessian of the scalar w'f(x, u) with respect to the stacked (x, u),
/// from central differences of the Jacobians. Used for the exact
/// constraint-curvature terms of transcription Hessians.
inline Eigen::MatrixXd weighted_dynamics_hessian(const SystemModel& model,
                                                 const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& w) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  auto gradient = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& uu) {
    const Linearization lin = linearize(model, xx, uu);
    Eigen::VectorXd g(n + m);
    g.head(n) = lin.A.transpose() * w;
    g.tail(m) = lin.B.transpose() * w;
    return g;
  };
  Eigen::MatrixXd hess(n + m, n + m);
  Eigen::VectorXd xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < n; ++j) {
    const double h = std::max(1e-4, 1e-4 * std::abs(x[j]));
    xp[j] += h;
    xm[j] -= h;
    hess.col(j) = (gradient(xp, u) - gradient(xm, u)) / (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < m; ++j) {
    const double h = std::max(1e-4, 1e-4 * std::abs(u[j]));
    up[j] += h;
    um[j] -= h;
    hess.col(n + j) = (gradient(x, up) - gradient(x, um)) / (2 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
  return 0.5 * (hess + hess.transpose());
}

/// Boolean structure of (A, B), detected at a fixed set of pseudo-random
/// evaluation points. Entries the dynamics never read come out exactly zero
/// under finite differencing, so detection is reliable for the model family
/// used here (fixed-structure smooth dynamics).
struct JacobianStructure {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> A;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> B;
};

inline JacobianStructure probe_jacobian_structure(const SystemModel& model,
                                                  unsigned seed = 12345,
                                                  int samples = 7) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  JacobianStructure s;
  s.A.setConstant(n, n, false);
  s.B.setConstant(n, m, false);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> box(-0.4, 0.4);
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd x(n), u(m);
    for (int i = 0; i < n; ++i) x[i] = box(rng);
    for (int i = 0; i < m; ++i) u[i] = box(rng);
    const Linearization lin = linearize(model, x, u);
    const double tol = 1e-10 * (1.0 + lin.A.cwiseAbs().maxCoeff() +
                                lin.B.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (std::abs(lin.A(i, j)) > tol) s.A(i, j) = true;
      for (int j = 0; j < m; ++j)
        if (std::abs(lin.B(i, j)) > tol) s.B(i, j) = true;
    }
  }
  return s;
}

}  // namespace dirtran

#endif  // DIRTRAN_MODEL_HPP
