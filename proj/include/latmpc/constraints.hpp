#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "latmpc/vehicle.hpp"

namespace latmpc {

/// Linear inequality rows for one horizon step, split into a block over the
/// model states (softened with a shared slack in the MPC) and a block over
/// the input deltas (always hard).
struct ConstraintSet {
  Eigen::MatrixXd g_x;        // state rows x n_x
  Eigen::VectorXd x_lower;
  Eigen::VectorXd x_upper;
  std::vector<bool> x_soft;   // per state row

  Eigen::MatrixXd g_u;        // input rows x 8
  Eigen::VectorXd u_lower;
  Eigen::VectorXd u_upper;

  double slack_weight = 0.1;  // sigma

  int state_rows() const { return static_cast<int>(g_x.rows()); }
  int input_rows() const { return static_cast<int>(g_u.rows()); }
  void merge(const ConstraintSet& other);
  void validate() const;  // lower <= upper row-wise, flag count matches
};

/// Rollover-index coefficients (C1, C2) with RI = C1 * phi + C2 * phidot.
std::pair<double, double> rollover_coeffs(const GeneralEvParams& p);

/// Wheel-speed corridor u/r_eff +- lambda_max * max(u/r_eff, omega), sorted.
std::pair<double, double> slip_speed_bounds(double u, double omega, double r_eff,
                                            double lambda_max);

/// General EV state rows: rollover index, yaw rate, four wheel-speed
/// corridors, rear slip. All soft.
ConstraintSet state_rows(const GeneralEvParams& p, double u,
                         const std::array<double, 4>& omega);

/// VHS state rows: yaw rate and rear slip only. All soft.
ConstraintSet state_rows(const VhsParams& p, double u);

/// Input-delta rows per wheel: torque band, friction-capacity band
/// (the force capacity enters as a torque via r_eff * f_p), steering band.
/// Rows of disabled actuators collapse to [0, 0].
/// Throws std::domain_error when (f_z0, f_y0) lies outside the friction
/// ellipse.
ConstraintSet input_rows(const DriverCommand& w0, const std::array<double, 4>& f_z0,
                         const std::array<double, 4>& f_y0, const GeneralEvParams& p,
                         const ActuatorConfig& t_w);
ConstraintSet input_rows(const DriverCommand& w0, const std::array<double, 4>& f_z0,
                         const std::array<double, 4>& f_y0, const VhsParams& p,
                         const ActuatorConfig& t_w);

}  // namespace latmpc
