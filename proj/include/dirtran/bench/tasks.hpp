#ifndef DIRTRAN_BENCH_TASKS_HPP
#define DIRTRAN_BENCH_TASKS_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dirtran/models/ballbot.hpp"
#include "dirtran/models/double_integrator.hpp"
#include "dirtran/models/quadrotor.hpp"
#include "dirtran/nlp/problem.hpp"
#include "dirtran/task.hpp"
#include "dirtran/tvlqr.hpp"
#include "dirtran/util/config.hpp"

namespace dirtran {

/// Model factory with optional parameter overrides (absolute values).
inline std::shared_ptr<SystemModel> make_model(
    const std::string& name,
    const std::map<std::string, double>& overrides = {}) {
  std::shared_ptr<SystemModel> model;
  if (name == "ballbot") {
    auto params = Ballbot::default_parameters();
    for (const auto& [k, v] : overrides) {
      if (!params.count(k)) {
        throw ConfigError("ballbot has no parameter '" + k + "'");
      }
      params[k] = v;
    }
    model = std::make_shared<Ballbot>(params);
  } else if (name == "quadrotor") {
    auto params = Quadrotor::default_parameters();
    for (const auto& [k, v] : overrides) {
      if (!params.count(k)) {
        throw ConfigError("quadrotor has no parameter '" + k + "'");
      }
      params[k] = v;
    }
    model = std::make_shared<Quadrotor>(params);
  } else if (name == "double_integrator") {
    if (!overrides.empty()) {
      throw ConfigError("double_integrator has no parameters");
    }
    model = std::make_shared<DoubleIntegrator>();
  } else {
    throw ConfigError("unknown model '" + name +
                      "' (ballbot, quadrotor, double_integrator)");
  }
  return model;
}

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {
      "goto", "one-obstacle", "two-obstacle", "two-obstacle-bounds",
      "quadrotor-cylinder"};
  return names;
}

namespace detail {

inline TaskSpec ballbot_base(
    const std::map<std::string, double>& param_overrides) {
  TaskSpec task;
  task.model = make_model("ballbot", param_overrides);
  task.x1 = Eigen::VectorXd::Zero(10);
  task.xg = Eigen::VectorXd::Zero(10);
  task.xg[6] = 8.0;   // theta_x -> x = 1 m
  task.xg[8] = 24.0;  // theta_y -> y = 3 m
  task.q_weights.resize(10);
  task.q_weights << 10, 1, 10, 1, 10, 1, 0, 0.1, 0, 0.1;
  task.r_weights = Eigen::VectorXd::Ones(3);
  task.obstacle_margin = 0.2;
  task.t_min = 1.0;
  task.t_max = 3.5;
  task.nodes = 100;
  return task;
}

}  // namespace detail

/// The benchmark task set. Obstacle geometry makes the difficulty ordering
/// goto < one-obstacle < two-obstacle (< two-obstacle-bounds).
inline TaskSpec task_library(
    const std::string& name,
    const std::map<std::string, double>& param_overrides = {}) {
  if (name == "goto") {
    TaskSpec task = detail::ballbot_base(param_overrides);
    task.name = name;
    return task;
  }
  if (name == "one-obstacle") {
    TaskSpec task = detail::ballbot_base(param_overrides);
    task.name = name;
    // Slightly off the straight chord: blocks the direct path without
    // making the instance exactly mirror-symmetric.
    task.obstacles = {{0.55, 1.4, 0.3}};
    return task;
  }
  if (name == "two-obstacle") {
    TaskSpec task = detail::ballbot_base(param_overrides);
    task.name = name;
    // One circle on each side of the chord forces a slalom; the corridor
    // between the inflated circles stays comfortably passable.
    task.obstacles = {{0.25, 1.05, 0.25}, {0.85, 2.35, 0.25}};
    return task;
  }
  if (name == "two-obstacle-bounds") {
    TaskSpec task = detail::ballbot_base(param_overrides);
    task.name = name;
    task.obstacles = {{0.25, 1.05, 0.25}, {0.85, 2.35, 0.25}};
    task.control_lower = Eigen::VectorXd::Constant(3, -5.0);
    task.control_upper = Eigen::VectorXd::Constant(3, 5.0);
    task.state_lower = Eigen::VectorXd::Constant(10, -kInfinity);
    task.state_upper = Eigen::VectorXd::Constant(10, kInfinity);
    task.state_lower[0] = -0.3;  // torso roll
    task.state_upper[0] = 0.3;
    task.state_lower[2] = -0.3;  // torso pitch
    task.state_upper[2] = 0.3;
    return task;
  }
  if (name == "quadrotor-cylinder") {
    TaskSpec task;
    task.name = name;
    task.model = make_model("quadrotor", param_overrides);
    task.x1 = Eigen::VectorXd::Zero(12);
    task.xg = Eigen::VectorXd::Zero(12);
    task.xg.head<3>() << 5.0, 5.0, 5.0;
    task.q_weights.resize(12);
    task.q_weights << 0.01, 0.01, 0.01, 1, 1, 1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1;
    task.r_weights = Eigen::VectorXd::Constant(4, 0.01);
    if (!std::getenv("DIRTRAN_QUAD_NO_CTRL_BOUNDS")) {
    // Rotors cannot reverse; the positive floor also keeps solver iterates
    // away from the uncontrollable zero-thrust configuration.
    task.control_lower = Eigen::VectorXd::Constant(4, 0.05);
    task.control_upper = Eigen::VectorXd::Constant(4, 5.0);
    }
    // Moderate tilt envelope, well clear of the Euler-angle singularity.
    task.state_lower = Eigen::VectorXd::Constant(12, -kInfinity);
    task.state_upper = Eigen::VectorXd::Constant(12, kInfinity);
    for (int i : {3, 4}) {
      task.state_lower[i] = -0.6;
      task.state_upper[i] = 0.6;
    }
    task.obstacles = {{2.5, 2.5, 1.0}};
    task.obstacle_margin = 0.2;
    task.t_min = 4.0;
    task.t_max = 7.0;
    task.nodes = 75;
    return task;
  }
  std::string known;
  for (const auto& n : task_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown task '" + name + "' (available: " + known + ")");
}

/// Per-task stabilizer weights (documented defaults; the benchmark robot
/// gets a stiffer attitude weighting).
inline LqrWeights default_lqr_weights(const TaskSpec& task) {
  const int n = task.model->state_dim();
  const int m = task.model->control_dim();
  LqrWeights w;
  w.q = Eigen::MatrixXd::Identity(n, n);
  if (task.model->name() == "ballbot") {
    w.q(0, 0) = w.q(2, 2) = w.q(4, 4) = 10.0;
  }
  w.r = 0.1 * Eigen::MatrixXd::Identity(m, m);
  w.q_terminal = 10.0 * w.q;
  return w;
}

/// Parse a plain-text task file; see the README for the schema.
inline TaskSpec load_task_file(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::parse_file(path);
  std::map<std::string, double> overrides;
  for (const std::string& key : kv.keys()) {
    if (key.rfind("param.", 0) == 0) {
      overrides[key.substr(6)] = kv.number(key);
    }
  }
  TaskSpec task;
  if (kv.has("task")) {
    task = task_library(kv.get("task"), overrides);
  } else {
    task.model = make_model(kv.get("model"), overrides);
    task.name = kv.get_or("name", "custom");
  }
  const int n = task.model->state_dim();
  const int m = task.model->control_dim();

  auto parse_vector = [&](const std::string& key, int dim) {
    const auto items = kv.list(key);
    if (static_cast<int>(items.size()) != dim) {
      throw ConfigError("task file: '" + key + "' needs " +
                        std::to_string(dim) + " entries");
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      v[i] = KeyValueFile::to_number(items[i], key);
    }
    return v;
  };

  if (kv.has("x1")) task.x1 = parse_vector("x1", n);
  if (kv.has("xg")) task.xg = parse_vector("xg", n);
  if (kv.has("q")) task.q_weights = parse_vector("q", n);
  if (kv.has("r")) task.r_weights = parse_vector("r", m);
  if (kv.has("state_lower")) task.state_lower = parse_vector("state_lower", n);
  if (kv.has("state_upper")) task.state_upper = parse_vector("state_upper", n);
  if (kv.has("control_lower")) {
    task.control_lower = parse_vector("control_lower", m);
  }
  if (kv.has("control_upper")) {
    task.control_upper = parse_vector("control_upper", m);
  }
  if (kv.has("margin")) task.obstacle_margin = kv.number("margin");
  if (kv.has("t_min")) task.t_min = kv.number("t_min");
  if (kv.has("t_max")) task.t_max = kv.number("t_max");
  if (kv.has("nodes")) task.nodes = kv.integer("nodes");
  const auto obstacle_lines = kv.all("obstacle");
  if (!obstacle_lines.empty()) {
    task.obstacles.clear();
    for (const std::string& line : obstacle_lines) {
      const auto items = KeyValueFile::split_list(line);
      if (items.size() != 3) {
        throw ConfigError("task file: obstacle needs 'cx,cy,radius'");
      }
      task.obstacles.push_back({KeyValueFile::to_number(items[0], "obstacle"),
                                KeyValueFile::to_number(items[1], "obstacle"),
                                KeyValueFile::to_number(items[2], "obstacle")});
    }
  }
  task.validate();
  return task;
}

}  // namespace dirtran

#endif  // DIRTRAN_BENCH_TASKS_HPP
