#ifndef DIRTRAN_MODELS_BALLBOT_HPP
#define DIRTRAN_MODELS_BALLBOT_HPP

#include <cmath>
#include <memory>

#include "dirtran/model.hpp"

namespace dirtran {

/// Ball-balancing robot: a torso riding on an actuated ball. Two rigid
/// bodies, three virtual torques (roll plane, pitch plane, yaw), rolling
/// without slip, wheel dynamics neglected.
///
/// State (10): [phi_r, phi_r_dot, phi_p, phi_p_dot, phi_y, phi_y_dot,
///              theta_x, theta_x_dot, theta_y, theta_y_dot]
/// where phi_* are torso roll/pitch/yaw angles and theta_x/theta_y are the
/// ball rotation angles; the planar position is (r*theta_x, r*theta_y).
/// Controls (3): [tau_roll, tau_pitch, tau_yaw].
///
/// The two vertical planes are modeled as identical decoupled
/// pendulum-on-ball systems derived from the planar Lagrangian with
/// generalized coordinates (theta, phi):
///
///   [ a_bb      b*cos(phi) ] [ theta_ddot ]   [  tau + b*sin(phi)*phi_dot^2 ]
///   [ b*cos(phi)  a_tt     ] [ phi_ddot   ] = [ -tau + g_t*sin(phi)         ]
///
/// with a_bb = (m_ball + m_torso) r^2 + I_ball, b = m_torso r l,
/// a_tt = m_torso l^2 + I_torso, g_t = m_torso g l. The pitch plane drives
/// theta_x, the roll plane drives theta_y ("positive tilt leans toward the
/// positive axis"). Yaw is a decoupled rotor: phi_y_ddot = tau_yaw / I_yaw.
class Ballbot : public SystemModel {
 public:
  static std::map<std::string, double> default_parameters() {
    return {
        {"ball_mass", 3.0},        {"ball_radius", 0.125},
        {"ball_inertia", 0.03125},  // 2/3 m r^2, spherical shell
        {"torso_mass", 9.0},       {"torso_com_height", 0.4},
        {"torso_tilt_inertia", 0.8}, {"torso_yaw_inertia", 0.1},
        {"gravity", 9.81},
    };
  }

  explicit Ballbot(std::map<std::string, double> params = default_parameters())
      : SystemModel("ballbot", 10, 3, params,
                    {"torso roll [rad]", "torso roll rate [rad/s]",
                     "torso pitch [rad]", "torso pitch rate [rad/s]",
                     "torso yaw [rad]", "torso yaw rate [rad/s]",
                     "ball angle x [rad]", "ball rate x [rad/s]",
                     "ball angle y [rad]", "ball rate y [rad/s]"},
                    {"tau roll [N*m]", "tau pitch [N*m]", "tau yaw [N*m]"}) {
    const double mb = parameter("ball_mass");
    const double r = parameter("ball_radius");
    const double mt = parameter("torso_mass");
    const double l = parameter("torso_com_height");
    a_bb_ = (mb + mt) * r * r + parameter("ball_inertia");
    a_tt_ = mt * l * l + parameter("torso_tilt_inertia");
    b_ = mt * r * l;
    g_t_ = mt * parameter("gravity") * l;
    inv_yaw_inertia_ = 1.0 / parameter("torso_yaw_inertia");
  }

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const override {
    // Pitch plane moves theta_x, roll plane moves theta_y.
    double theta_x_dd, phi_p_dd, theta_y_dd, phi_r_dd;
    plane(x[2], x[3], u[1], theta_x_dd, phi_p_dd);
    plane(x[0], x[1], u[0], theta_y_dd, phi_r_dd);
    Eigen::VectorXd dx(10);
    dx[0] = x[1];
    dx[1] = phi_r_dd;
    dx[2] = x[3];
    dx[3] = phi_p_dd;
    dx[4] = x[5];
    dx[5] = u[2] * inv_yaw_inertia_;
    dx[6] = x[7];
    dx[7] = theta_x_dd;
    dx[8] = x[9];
    dx[9] = theta_y_dd;
    return dx;
  }

  std::optional<PlanarMap> planar_map() const override {
    const double r = parameter("ball_radius");
    return PlanarMap{6, r, 8, r};
  }

  std::vector<int> forced_zero_weight_indices() const override {
    return {6, 8};  // ball angles
  }

  std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>& scale) const override {
    return std::make_shared<Ballbot>(scaled_parameters(scale));
  }

 private:
  void plane(double phi, double phi_dot, double tau, double& theta_dd,
             double& phi_dd) const {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double m01 = b_ * c;
    const double det = a_bb_ * a_tt_ - m01 * m01;  // > 0 for these parameters
    const double r0 = tau + b_ * s * phi_dot * phi_dot;
    const double r1 = -tau + g_t_ * s;
    theta_dd = (a_tt_ * r0 - m01 * r1) / det;
    phi_dd = (a_bb_ * r1 - m01 * r0) / det;
  }

  double a_bb_, a_tt_, b_, g_t_, inv_yaw_inertia_;
};

}  // namespace dirtran

#endif  // DIRTRAN_MODELS_BALLBOT_HPP
