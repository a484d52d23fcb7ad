#ifndef DIRTRAN_MODELS_DOUBLE_INTEGRATOR_HPP
#define DIRTRAN_MODELS_DOUBLE_INTEGRATOR_HPP

#include <memory>

#include "dirtran/model.hpp"

namespace dirtran {

/// 1-D double integrator: x = [position, velocity], u = [acceleration].
/// The analytic oracle system for solver and Riccati tests.
class DoubleIntegrator : public SystemModel {
 public:
  DoubleIntegrator()
      : SystemModel("double_integrator", 2, 1, {},
                    {"position [m]", "velocity [m/s]"},
                    {"acceleration [m/s^2]"}) {}

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const override {
    Eigen::VectorXd dx(2);
    dx[0] = x[1];
    dx[1] = u[0];
    return dx;
  }

  bool has_analytic_jacobians() const override { return true; }
  void analytic_jacobians(const Eigen::VectorXd&, const Eigen::VectorXd&,
                          Eigen::MatrixXd& A,
                          Eigen::MatrixXd& B) const override {
    A.setZero();
    A(0, 1) = 1.0;
    B.setZero();
    B(1, 0) = 1.0;
  }

  std::shared_ptr<SystemModel> with_scaled_parameters(
      const std::map<std::string, double>& scale) const override {
    if (!scale.empty()) {
      throw ContractViolation("double_integrator has no parameters to scale");
    }
    return std::make_shared<DoubleIntegrator>();
  }
};

}  // namespace dirtran

#endif  // DIRTRAN_MODELS_DOUBLE_INTEGRATOR_HPP
