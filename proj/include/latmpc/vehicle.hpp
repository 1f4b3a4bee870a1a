#pragma once

#include <Eigen/Dense>
#include <array>

#include "latmpc/tire.hpp"

namespace latmpc {

// Wheel order everywhere: 1 front-left, 2 front-right, 3 rear-left, 4 rear-right.
// Axes: x forward, y left, z up; positive yaw is counter-clockwise from above.
//
// Road banking sign follows the assembled model's forcing column: positive
// phi_r accelerates the body toward +y, i.e. the +y (left) side of the road
// is the low side. The lane change to y = -3 in the overtake scenarios is a
// move to the right.

enum class ModelKind { GeneralEv, Vhs };

struct GeneralEvParams {
  double m;          // total mass [kg]
  double m_s;        // sprung mass [kg]
  double m_u;        // unsprung mass [kg]
  double l_f, l_r;   // CoG to axles [m]
  double t_f, t_r;   // track widths [m]
  double h_s;        // CoG to roll center [m]
  double h_u;        // unsprung mass CoG height [m]
  double h_cg;       // CoG height [m]
  double i_xx;       // roll inertia [kg m^2]
  double i_zz;       // yaw inertia [kg m^2]
  double k_phi;      // roll stiffness [N m/rad]
  double c_phi;      // roll damping [N m s/rad]
  double r_eff;      // effective wheel radius [m]
  double i_w;        // wheel spin inertia [kg m^2]
  TireParams tire;
  double q_max, q_min;    // wheel torque limits [N m]
  double delta_max;       // steering limit [rad]
  double k_usd;           // desired understeer coefficient
  double ri_c;            // critical rollover index
  double alpha_r_max;     // rear slip bound [rad]
  double lambda_max;      // max slip ratio

  AxleGeometry geometry() const { return {l_f, l_r}; }
  double h_roll_center() const { return h_cg - h_s; }  // h_R
  void validate() const;
};

struct VhsParams {
  double m;         // total mass [kg]
  double m_s;       // sprung mass [kg]
  double m_f;       // front axle mass [kg], consistency value m * l_r / l
  double l_f, l_r;  // CoG to axles [m]
  double i_xx;      // roll inertia [kg m^2]
  double i_zz;      // yaw inertia [kg m^2]
  double h_s;       // CoG to roll center [m]
  double k_s;       // suspension spring stiffness [N/m]
  double b_s;       // suspension damper coefficient [N s/m]
  double l_s;       // suspension spring lever arm [m]
  double t_f, t_r;  // track widths [m]
  double r_eff;     // effective wheel radius [m]
  TireParams tire;
  double delta_max;       // steering limit [rad]
  double q_max, q_min;    // wheel torque limits [N m]
  double k_usd;           // understeer coefficient for the reference chain
  double alpha_r_max;     // rear slip bound [rad]
  double phi_r = 0.0;     // road banking [rad], set per scenario

  AxleGeometry geometry() const { return {l_f, l_r}; }
  void validate() const;
};

/// Per-wheel binary actuator availability flags.
struct ActuatorConfig {
  std::array<bool, 4> torque{true, true, true, true};
  std::array<bool, 4> steering{true, true, true, true};

  /// Rear-drive, front-steer racing layout.
  static ActuatorConfig vhs() { return {{false, false, true, true}, {true, true, false, false}}; }
  /// All-wheel torque, no steering actuation.
  static ActuatorConfig torque_vectoring() {
    return {{true, true, true, true}, {false, false, false, false}};
  }

  /// 8x8 diagonal mask over the interleaved [dQ1, dd1, ..., dQ4, dd4] layout.
  Eigen::MatrixXd mask() const;
};

/// Driver command W: absolute wheel torques and steering angles.
struct DriverCommand {
  std::array<double, 4> torque{0, 0, 0, 0};   // Q_i [N m]
  std::array<double, 4> steering{0, 0, 0, 0}; // delta_i [rad]

  Eigen::Matrix<double, 8, 1> stacked() const;  // [Q1, d1, Q2, d2, Q3, d3, Q4, d4]
};

/// Control correction U: per-wheel torque and steering deltas on top of the
/// driver command, interleaved like DriverCommand::stacked().
using ControlDelta = Eigen::Matrix<double, 8, 1>;

/// Continuous-time affine model  xdot = A x + E W + B U + D + C_phi * phi_r.
struct VehicleModel {
  Eigen::MatrixXd a;       // n_x x n_x
  Eigen::MatrixXd b;       // n_x x 8, actuator-masked
  Eigen::MatrixXd e;       // n_x x 8
  Eigen::VectorXd d;       // n_x
  Eigen::VectorXd c_phi;   // n_x, zero for the general EV
  int n_x = 0;
  int n_u = 8;
  std::array<TireLinearization, 4> linearizations{};
};

/// Stacked tire-force affine maps: forces = b1 * x_body + b2 * W + d1 with
/// per-wheel 2-row blocks [f_x; f_y]. n_body selects the body-state layout
/// (4 for the general EV, 5 for the VHS model where state 1 is y).
struct TireAffineMaps {
  Eigen::MatrixXd b1;  // 8 x n_body
  Eigen::MatrixXd b2;  // 8 x 8 block diagonal
  Eigen::VectorXd d1;  // 8
};
TireAffineMaps tire_affine_maps(const std::array<TireLinearization, 4>& lin, double u,
                                const AxleGeometry& geom, double r_eff, int n_body);

/// Block-diagonal planar rotations mapping tire-frame forces to corner forces.
Eigen::MatrixXd wheel_rotation_map(const std::array<double, 4>& steering);

/// 3x8 map from stacked corner forces to CoG forces [F_X, F_Y, M_Z].
Eigen::MatrixXd cog_map(double t_f, double t_r, double l_f, double l_r);

struct BodyMatrices {
  Eigen::MatrixXd a_f;
  Eigen::MatrixXd b_f;     // columns act on [F_X, F_Y, M_Z]
  Eigen::VectorXd c_phi;   // banking forcing column (VHS only)
};

/// Body dynamics over [v, r, phi, phidot].
/// Throws std::domain_error when m * I_xx - m_s^2 h_s^2 <= 0.
BodyMatrices body_matrices_general(const GeneralEvParams& p, double u);

/// Body dynamics over [y, v_y, r, phi, phidot] with the banking column.
/// Matrix entries follow the published model verbatim.
BodyMatrices body_matrices_vhs(const VhsParams& p, double u);

/// Wheel spin dynamics: with the linear longitudinal tire map the driver
/// torque cancels and omega_dot_i = dQ_i / I_w.
struct WheelDynamics {
  Eigen::MatrixXd a_w;  // 4x4 zero
  Eigen::MatrixXd e_w;  // 4x8 zero
  Eigen::MatrixXd b_w;  // 4x8, 1/I_w on enabled torque-delta channels
  Eigen::VectorXd d_w;  // 4 zero
};
WheelDynamics wheel_dynamics(const GeneralEvParams& p, const ActuatorConfig& t_w);

/// 8-state general EV model [v, r, phi, phidot, w1..w4].
VehicleModel assemble_general(const GeneralEvParams& p, double u,
                              const std::array<TireLinearization, 4>& lin,
                              const DriverCommand& w0, const ActuatorConfig& t_w);

/// 5-state VHS model [y, v_y, r, phi, phidot] with the banking column kept as
/// a separate affine channel.
VehicleModel assemble_vhs(const VhsParams& p, double u,
                          const std::array<TireLinearization, 4>& lin,
                          const DriverCommand& w0, const ActuatorConfig& t_w);

/// Per-wheel vertical loads: static axle share plus roll-moment transfer
/// (k_roll * (phi + phi_r) + c_roll * phidot) / t_axle, floored at zero.
/// A positive transfer loads the right-hand wheels; phi_r enters with the
/// banking convention above (+phi_r = left side low), so positive banking
/// shifts load onto the left wheels.
std::array<double, 4> normal_loads(const GeneralEvParams& p, double phi, double phi_dot,
                                   double phi_r);
std::array<double, 4> normal_loads(const VhsParams& p, double phi, double phi_dot,
                                   double phi_r);

/// Same, without the wheel-lift floor. The four entries always sum to m * g.
std::array<double, 4> normal_loads_raw(const GeneralEvParams& p, double phi, double phi_dot,
                                       double phi_r);
std::array<double, 4> normal_loads_raw(const VhsParams& p, double phi, double phi_dot,
                                       double phi_r);

}  // namespace latmpc
