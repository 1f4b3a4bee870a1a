#pragma once

#include <Eigen/Dense>

#include "latmpc/tire.hpp"

namespace latmpc {

/// A coordinate to track. In the steering computation the fields are offsets
/// in the vehicle frame (x ahead, y lateral); scenario files store the same
/// struct in world coordinates.
struct Checkpoint {
  double x;
  double y;
};

/// Bicycle-model yaw-rate response capped at the friction limit:
/// r_b = u * delta_d / (l + k_usd * u^2), r_max = mu_y * g / u,
/// r_d = sign(delta_d) * min(|r_b|, r_max).
double desired_yaw_rate(double delta_d, double u, double wheelbase, double k_usd,
                        double mu_y, double g = kGravity);

/// [0, r_d, 0, 0, u/r_eff x4] for the 8-state general EV model.
Eigen::VectorXd desired_state_general(double u, double r_d, double r_eff);

struct SteeringTarget {
  double psi_d;    // desired heading [rad]
  double delta_d;  // desired steering [rad], clamped to +-delta_max
};

/// Heading toward a local-frame checkpoint, psi_d = atan(y_d / x_d), and the
/// sideslip-compensated steering delta_d = psi_d + v_y / u.
SteeringTarget checkpoint_steering(const Checkpoint& local_cp, double v_y, double u,
                                   double delta_max);

/// [y_d, 0, r_d, 0, 0] for the 5-state VHS model.
Eigen::VectorXd desired_state_vhs(double y_d, double r_d);

}  // namespace latmpc
