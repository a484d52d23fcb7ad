#ifndef DIRTRAN_TVLQR_HPP
#define DIRTRAN_TVLQR_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dirtran/errors.hpp"
#include "dirtran/model.hpp"
#include "dirtran/trajectory.hpp"
#include "dirtran/util/csv.hpp"

namespace dirtran {

/// Weights for the discrete Riccati backward pass.
struct LqrWeights {
  Eigen::MatrixXd q;           // n x n, PSD
  Eigen::MatrixXd r;           // m x m, PD
  Eigen::MatrixXd q_terminal;  // n x n, PSD

  void validate(int n, int m) const {
    if (q.rows() != n || q.cols() != n || q_terminal.rows() != n ||
        q_terminal.cols() != n || r.rows() != m || r.cols() != m) {
      throw ContractViolation("LqrWeights: dimension mismatch");
    }
    if (!q.isApprox(q.transpose()) || !r.isApprox(r.transpose()) ||
        !q_terminal.isApprox(q_terminal.transpose())) {
      throw ContractViolation("LqrWeights: weights must be symmetric");
    }
  }
};

/// Time-indexed feedback gains K_k at node times, zero-order held between
/// nodes. Feedback convention: u = u*(t) + K(t) (x*(t) - x).
struct GainSchedule {
  std::vector<Eigen::MatrixXd> gains;  // N matrices, each m x n
  double dt = 0.0;

  int nodes() const { return static_cast<int>(gains.size()); }

  const Eigen::MatrixXd& at_time(double t) const {
    const int last = nodes() - 1;
    int k = static_cast<int>(t / dt);
    if (k < 0) k = 0;
    if (k > last) k = last;
    return gains[k];
  }

  void save_csv(const std::string& path) const {
    csv::Table table;
    const int m = static_cast<int>(gains.front().rows());
    const int n = static_cast<int>(gains.front().cols());
    table.header.push_back("t");
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        table.header.push_back("k_" + std::to_string(i) + "_" +
                               std::to_string(j));
      }
    }
    for (int k = 0; k < nodes(); ++k) {
      std::vector<std::string> row;
      row.push_back(csv::format_double(k * dt));
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          row.push_back(csv::format_double(gains[k](i, j)));
        }
      }
      table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
  }

  static GainSchedule load_csv(const std::string& path, int state_dim,
                               int control_dim) {
    const csv::Table table = csv::read_file(path);
    if (table.rows.size() < 2) {
      throw ConfigError("gains csv '" + path + "': too few rows");
    }
    if (static_cast<int>(table.header.size()) !=
        1 + state_dim * control_dim) {
      throw ConfigError("gains csv '" + path + "': column count mismatch");
    }
    GainSchedule schedule;
    for (const auto& row : table.rows) {
      Eigen::MatrixXd k(control_dim, state_dim);
      for (int i = 0; i < control_dim; ++i) {
        for (int j = 0; j < state_dim; ++j) {
          k(i, j) = std::stod(row[1 + i * state_dim + j]);
        }
      }
      schedule.gains.push_back(std::move(k));
    }
    schedule.dt = std::stod(table.rows[1][0]) - std::stod(table.rows[0][0]);
    return schedule;
  }
};

/// Time-varying LQR along a planned trajectory: linearize at each node,
/// discretize to second order, run the Riccati recursion backward from
/// P_N = Q_f. The last node repeats the final interval gain so the schedule
/// has one entry per node.
inline GainSchedule tvlqr(const SystemModel& model,
                          const PlannedTrajectory& traj,
                          const LqrWeights& weights) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  weights.validate(n, m);
  const int nodes = traj.nodes();
  if (nodes < 2) throw ContractViolation("tvlqr: trajectory too short");
  const double dt = traj.dt;
  if (!(dt > 0.0)) throw ContractViolation("tvlqr: dt must be > 0");

  std::vector<Eigen::MatrixXd> a_d(nodes - 1), b_d(nodes - 1);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k + 1 < nodes; ++k) {
    const Linearization lin = linearize(model, traj.states.row(k).transpose(),
                                        traj.controls.row(k).transpose());
    a_d[k] = eye + dt * lin.A + 0.5 * dt * dt * lin.A * lin.A;
    b_d[k] = dt * lin.B + 0.5 * dt * dt * lin.A * lin.B;
  }

  GainSchedule schedule;
  schedule.dt = dt;
  schedule.gains.resize(nodes);
  Eigen::MatrixXd p = weights.q_terminal;
  for (int k = nodes - 2; k >= 0; --k) {
    const Eigen::MatrixXd bt_p = b_d[k].transpose() * p;
    const Eigen::MatrixXd gain =
        (weights.r + bt_p * b_d[k]).ldlt().solve(bt_p * a_d[k]);
    p = weights.q + a_d[k].transpose() * p * (a_d[k] - b_d[k] * gain);
    p = 0.5 * (p + p.transpose());
    if (!p.allFinite() || !gain.allFinite()) {
      throw StabilizationFailure(
          "tvlqr: Riccati recursion diverged at node " + std::to_string(k), k);
    }
    schedule.gains[k] = gain;
  }
  schedule.gains[nodes - 1] = schedule.gains[nodes - 2];
  return schedule;
}

/// u = u*(t) + K(t) (x*(t) - x); u* and x* linearly interpolated, K
/// zero-order held, t clamped to [0, T].
inline Eigen::VectorXd feedback_control(const GainSchedule& gains, double t,
                                        const Eigen::VectorXd& x,
                                        const PlannedTrajectory& plan) {
  return plan.control_at(t) + gains.at_time(t) * (plan.state_at(t) - x);
}

}  // namespace dirtran

#endif  // DIRTRAN_TVLQR_HPP
