#ifndef DIRTRAN_TRAJECTORY_HPP
#define DIRTRAN_TRAJECTORY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <string>

#include "dirtran/errors.hpp"
#include "dirtran/util/csv.hpp"

namespace dirtran {

/// Integration rule used for the dynamics defects (and matching quadrature).
enum class Scheme { Euler, Trapezoidal, HermiteSimpson };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Euler: return "euler";
    case Scheme::Trapezoidal: return "trapezoidal";
    case Scheme::HermiteSimpson: return "hermite";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "trapezoidal" || name == "trapezoid") return Scheme::Trapezoidal;
  if (name == "hermite" || name == "hermite-simpson") {
    return Scheme::HermiteSimpson;
  }
  throw ConfigError("unknown scheme '" + name +
                    "' (euler, trapezoidal, hermite)");
}

/// Optimized node states and controls on a uniform time grid.
struct PlannedTrajectory {
  Eigen::MatrixXd states;    // N x n
  Eigen::MatrixXd controls;  // N x m
  double dt = 0.0;           // time between nodes [s]
  Scheme scheme = Scheme::Trapezoidal;

  int nodes() const { return static_cast<int>(states.rows()); }
  double total_time() const { return (nodes() - 1) * dt; }

  /// Linear interpolation between nodes; t is clamped to [0, T].
  Eigen::VectorXd state_at(double t) const { return interpolate(states, t); }
  Eigen::VectorXd control_at(double t) const {
    return interpolate(controls, t);
  }

  void save_csv(const std::string& path) const {
    csv::Table table;
    table.header.push_back("t");
    for (int i = 0; i < states.cols(); ++i) {
      table.header.push_back("x_" + std::to_string(i));
    }
    for (int j = 0; j < controls.cols(); ++j) {
      table.header.push_back("u_" + std::to_string(j));
    }
    for (int k = 0; k < nodes(); ++k) {
      std::vector<std::string> row;
      row.push_back(csv::format_double(k * dt));
      for (int i = 0; i < states.cols(); ++i) {
        row.push_back(csv::format_double(states(k, i)));
      }
      for (int j = 0; j < controls.cols(); ++j) {
        row.push_back(csv::format_double(controls(k, j)));
      }
      table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
  }

  static PlannedTrajectory load_csv(const std::string& path, int state_dim,
                                    int control_dim, Scheme scheme) {
    const csv::Table table = csv::read_file(path);
    const int rows = static_cast<int>(table.rows.size());
    if (rows < 2) throw ConfigError("trajectory csv '" + path + "': too few rows");
    if (static_cast<int>(table.header.size()) != 1 + state_dim + control_dim) {
      throw ConfigError("trajectory csv '" + path + "': column count mismatch");
    }
    PlannedTrajectory traj;
    traj.scheme = scheme;
    traj.states.resize(rows, state_dim);
    traj.controls.resize(rows, control_dim);
    for (int k = 0; k < rows; ++k) {
      const auto& r = table.rows[k];
      for (int i = 0; i < state_dim; ++i) traj.states(k, i) = std::stod(r[1 + i]);
      for (int j = 0; j < control_dim; ++j) {
        traj.controls(k, j) = std::stod(r[1 + state_dim + j]);
      }
    }
    traj.dt = std::stod(table.rows[1][0]) - std::stod(table.rows[0][0]);
    return traj;
  }

 private:
  Eigen::VectorXd interpolate(const Eigen::MatrixXd& values, double t) const {
    const int last = nodes() - 1;
    const double s = std::clamp(t / dt, 0.0, static_cast<double>(last));
    const int k = std::min(static_cast<int>(s), last - 1);
    const double frac = s - k;
    return (1.0 - frac) * values.row(k).transpose() +
           frac * values.row(k + 1).transpose();
  }
};

}  // namespace dirtran

#endif  // DIRTRAN_TRAJECTORY_HPP
