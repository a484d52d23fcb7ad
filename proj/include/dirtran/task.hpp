#ifndef DIRTRAN_TASK_HPP
#define DIRTRAN_TASK_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "dirtran/errors.hpp"
#include "dirtran/model.hpp"

namespace dirtran {

/// Circular (cylindrical, for 3-D robots) keep-out region in the x-y plane.
struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

/// One motion-planning task: reach xg from x1 within a bounded total time,
/// minimizing the quadratic running cost, clearing all obstacles.
struct TaskSpec {
  std::shared_ptr<const SystemModel> model;
  std::string name;
  Eigen::VectorXd x1;
  Eigen::VectorXd xg;
  Eigen::VectorXd q_weights;  // diagonal of Q, per state, [unit^2 / s]
  Eigen::VectorXd r_weights;  // diagonal of R, per control
  std::vector<Obstacle> obstacles;
  double obstacle_margin = 0.2;  // robot clearance added to obstacle radii
  // Empty vectors mean unbounded. Bounds apply at every node.
  Eigen::VectorXd state_lower, state_upper;
  Eigen::VectorXd control_lower, control_upper;
  double t_min = 1.0;
  double t_max = 3.5;
  int nodes = 100;

  void validate() const {
    if (!model) throw ContractViolation("TaskSpec: model is null");
    const int n = model->state_dim();
    const int m = model->control_dim();
    if (nodes < 3) throw ContractViolation("TaskSpec: nodes must be >= 3");
    if (!(t_min > 0.0) || t_min > t_max) {
      throw ContractViolation(
          "TaskSpec: time window must satisfy 0 < t_min <= t_max");
    }
    if (x1.size() != n || xg.size() != n) {
      throw ContractViolation("TaskSpec: x1/xg dimension mismatch");
    }
    if (q_weights.size() != n || r_weights.size() != m) {
      throw ContractViolation("TaskSpec: Q/R dimension mismatch");
    }
    if ((q_weights.array() < 0.0).any()) {
      throw ContractViolation("TaskSpec: Q must be nonnegative");
    }
    if ((r_weights.array() <= 0.0).any()) {
      throw ContractViolation("TaskSpec: R must be strictly positive");
    }
    for (const Obstacle& o : obstacles) {
      if (!(o.radius > 0.0)) {
        throw ContractViolation("TaskSpec: obstacle radius must be > 0");
      }
    }
    if (!obstacles.empty() && !model->planar_map().has_value()) {
      throw ContractViolation("TaskSpec: model '" + model->name() +
                              "' has no planar position for obstacles");
    }
    auto check_bounds = [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           int dim, const char* what) {
      if (lo.size() == 0 && hi.size() == 0) return;
      if (lo.size() != dim || hi.size() != dim) {
        throw ContractViolation(std::string("TaskSpec: ") + what +
                                " bounds dimension mismatch");
      }
      if ((lo.array() > hi.array()).any()) {
        throw ContractViolation(std::string("TaskSpec: ") + what +
                                " bounds must satisfy lower <= upper");
      }
    };
    check_bounds(state_lower, state_upper, n, "state");
    check_bounds(control_lower, control_upper, m, "control");
  }

  /// Running-cost weights with the model's position-surrogate entries
  /// forced to zero.
  Eigen::VectorXd effective_q() const {
    Eigen::VectorXd q = q_weights;
    for (int i : model->forced_zero_weight_indices()) q[i] = 0.0;
    return q;
  }
};

}  // namespace dirtran

#endif  // DIRTRAN_TASK_HPP
