#ifndef DIRTRAN_MODELS_QUADROTOR_HPP
#define DIRTRAN_MODELS_QUADROTOR_HPP

#include <cmath>
#include <memory>

#include "dirtran/model.hpp"

namespace dirtran {

/// Rigid-body quadrotor with individual rotor thrusts, plus configuration.
///
/// State (12): [px, py, pz, roll, pitch, yaw, vx, vy, vz, wx, wy, wz]
/// (ZYX Euler angles, world-frame velocity, body-frame angular rate).
/// Controls (4): rotor thrusts [N]; rotor 1 on +x, 2 on +y, 3 on -x, 4 on -y.
class Quadrotor : public SystemModel {
 public:
  static std::map<std::string, double> default_parameters() {
    return {
        {"mass", 0.5},      {"arm_length", 0.17},
        // Slightly different roll/pitch inertias keep mirrored detours from
        // being exactly cost-equivalent.
        {"inertia_x", 2.3e-3}, {"inertia_y", 2.5e-3}, {"inertia_z", 4.0e-3},
        {"yaw_torque_coeff", 0.016},
        {"gravity", 9.81},
    };
  }

  explicit Quadrotor(
      std::map<std::string, double> params = default_parameters())
      : SystemModel("quadrotor", 12, 4, params,
                    {"px [m]", "py [m]", "pz [m]", "roll [rad]", "pitch [rad]",
                     "yaw [rad]", "vx [m/s]", "vy [m/s]", "vz [m/s]",
                     "wx [rad/s]", "wy [rad/s]", "wz [rad/s]"},
                    {"f1 [N]", "f2 [N]", "f3 [N]", "f4 [N]"}) {
    mass_ = parameter("mass");
    arm_ = parameter("arm_length");
    jx_ = parameter("inertia_x");
    jy_ = parameter("inertia_y");
    jz_ = parameter("inertia_z");
    kt_ = parameter("yaw_torque_coeff");
    g_ = parameter("gravity");
  }

  /// Total thrust that exactly cancels gravity.
  double hover_thrust() const { return mass_ * g_; }

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const override {
    const double cr = std::cos(x[3]), sr = std::sin(x[3]);
    const double cp = std::cos(x[4]), sp = std::sin(x[4]);
    const double cy = std::cos(x[5]), sy = std::sin(x[5]);
    const double tp = sp / cp;

    const double force = u.sum();
    // Body z-axis in world coordinates (third column of R = Rz*Ry*Rx).
    const double r3x = cy * sp * cr + sy * sr;
    const double r3y = sy * sp * cr - cy * sr;
    const double r3z = cp * cr;

    const double wx = x[9], wy = x[10], wz = x[11];
    const double tau_x = arm_ * (u[1] - u[3]);
    const double tau_y = arm_ * (u[2] - u[0]);
    const double tau_z = kt_ * (u[0] - u[1] + u[2] - u[3]);

    Eigen::VectorXd dx(12);
    dx[0] = x[6];
    dx[1] = x[7];
    dx[2] = x[8];
    dx[3] = wx + sr * tp * wy + cr * tp * wz;
    dx[4] = cr * wy - sr * wz;
    dx[5] = (sr * wy + cr * wz) / cp;
    dx[6] = force * r3x / mass_;
    dx[7] = force * r3y / mass_;
    dx[8] = force * r3z / mass_ - g_;
    dx[9] = (tau_x - (jz_ - jy_) * wy * wz) / jx_;
    dx[10] = (tau_y - (jx_ - jz_) * wx * wz) / jy_;
    dx[11] = (tau_z - (jy_ - jx_) * wx * wy) / jz_;
    return dx;
  }

  bool has_analytic_jacobians() const override { return true; }

  void analytic_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          Eigen::MatrixXd& A,
                          Eigen::MatrixXd& B) const override {
    const double cr = std::cos(x[3]), sr = std::sin(x[3]);
    const double cp = std::cos(x[4]), sp = std::sin(x[4]);
    const double cy = std::cos(x[5]), sy = std::sin(x[5]);
    const double tp = sp / cp;
    const double sec2p = 1.0 / (cp * cp);
    const double wx = x[9], wy = x[10], wz = x[11];
    const double force = u.sum();

    A.setZero();
    B.setZero();

    // Position rows select velocity states.
    A(0, 6) = 1.0;
    A(1, 7) = 1.0;
    A(2, 8) = 1.0;

    // Euler-rate mapping.
    A(3, 3) = cr * tp * wy - sr * tp * wz;
    A(3, 4) = (sr * wy + cr * wz) * sec2p;
    A(3, 9) = 1.0;
    A(3, 10) = sr * tp;
    A(3, 11) = cr * tp;
    A(4, 3) = -sr * wy - cr * wz;
    A(4, 10) = cr;
    A(4, 11) = -sr;
    A(5, 3) = (cr * wy - sr * wz) / cp;
    A(5, 4) = (sr * wy + cr * wz) * tp / cp;
    A(5, 10) = sr / cp;
    A(5, 11) = cr / cp;

    // Translational acceleration: (force/m) * d(r3)/d(angles).
    const double fm = force / mass_;
    A(6, 3) = fm * (-cy * sp * sr + sy * cr);
    A(6, 4) = fm * (cy * cp * cr);
    A(6, 5) = fm * (-sy * sp * cr + cy * sr);
    A(7, 3) = fm * (-sy * sp * sr - cy * cr);
    A(7, 4) = fm * (sy * cp * cr);
    A(7, 5) = fm * (cy * sp * cr + sy * sr);
    A(8, 3) = fm * (-cp * sr);
    A(8, 4) = fm * (-sp * cr);

    const double r3x = cy * sp * cr + sy * sr;
    const double r3y = sy * sp * cr - cy * sr;
    const double r3z = cp * cr;
    for (int j = 0; j < 4; ++j) {
      B(6, j) = r3x / mass_;
      B(7, j) = r3y / mass_;
      B(8, j) = r3z / mass_;
    }

    // Angular acceleration: gyroscopic coupling.
    A(9, 10) = -(jz_ - jy_) * wz / jx_;
    A(9, 11) = -(jz_ - jy_) * wy / jx_;
    A(10, 9) = -(jx_ - jz_) * wz / jy_;
    A(10, 11) = -(jx_ - jz_) * wx / jy_;
    A(11, 9) = -(jy_ - jx_) * wy / jz_;
    A(11, 10) = -(jy_ - jx_) * wx / jz_;

    B(9, 1) = arm_ / jx_;
    B(9, 3) = -arm_ / jx_;
    B(10, 0) = -arm_ / jy_;
    B(10, 2) = arm_ / jy_;
    B(11, 0) = kt_ / jz_;
    B(11, 1) = -kt_ / jz_;
    B(11, 2) = kt_ / jz_;
    B(11, 3) = -kt_ / jz_;
  }

  std::optional<PlanarMap> planar_map() const override {
    return PlanarMap{0, 1.0, 1, 1.0};
  }

  std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>& scale) const override {
    return std::make_shared<Quadrotor>(scaled_parameters(scale));
  }

 private:
  double mass_, arm_, jx_, jy_, jz_, kt_, g_;
};

}  // namespace dirtran

#endif  // DIRTRAN_MODELS_QUADROTOR_HPP
