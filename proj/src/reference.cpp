#include "latmpc/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latmpc {

double desired_yaw_rate(double delta_d, double u, double wheelbase, double k_usd,
                        double mu_y, double g) {
  if (!(u > 0.0)) throw std::domain_error("desired_yaw_rate: u must be > 0");
  const double r_b = u * delta_d / (wheelbase + k_usd * u * u);
  const double r_max = mu_y * g / u;
  const double sign = delta_d > 0.0 ? 1.0 : (delta_d < 0.0 ? -1.0 : 0.0);
  return sign * std::min(std::abs(r_b), r_max);
}

Eigen::VectorXd desired_state_general(double u, double r_d, double r_eff) {
  if (!(u > 0.0)) throw std::domain_error("desired_state_general: u must be > 0");
  Eigen::VectorXd x_d = Eigen::VectorXd::Zero(8);
  x_d(1) = r_d;
  x_d.tail(4).setConstant(u / r_eff);
  return x_d;
}

SteeringTarget checkpoint_steering(const Checkpoint& local_cp, double v_y, double u,
                                   double delta_max) {
  if (!(local_cp.x > 0.0))
    throw std::domain_error("checkpoint_steering: checkpoint must be ahead (x_d > 0)");
  if (!(u > 0.0)) throw std::domain_error("checkpoint_steering: u must be > 0");
  const double psi_d = std::atan(local_cp.y / local_cp.x);
  const double delta_d = std::clamp(psi_d + v_y / u, -delta_max, delta_max);
  return {psi_d, delta_d};
}

Eigen::VectorXd desired_state_vhs(double y_d, double r_d) {
  Eigen::VectorXd x_d = Eigen::VectorXd::Zero(5);
  x_d(0) = y_d;
  x_d(2) = r_d;
  return x_d;
}

}  // namespace latmpc
