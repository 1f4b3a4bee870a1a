#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "latmpc/mpc.hpp"

namespace latmpc {

using VehicleParams = std::variant<GeneralEvParams, VhsParams>;

struct Scenario {
  std::string name = "scenario";
  ModelKind kind = ModelKind::GeneralEv;
  double u = 20.0;        // constant longitudinal speed [m/s]
  int steps = 1;          // M
  double t_s = 0.1;       // plant/controller sample time [s]
  Eigen::VectorXd x0;     // initial model state
  // general EV driver
  double delta_d = 0.0;
  DriverCommand driver;
  // VHS driver
  std::vector<Checkpoint> checkpoints;  // world frame
  double phi_r = 0.0;
  double prediction_error_gain = 1.0;   // measurement gain on the controller path
  std::uint64_t seed = 0;
  int substeps = 0;          // plant RK4 substeps per T_s; 0 picks ~2 ms steps
  bool linear_plant = false; // verification hook: freeze plant tires to the
                             // controller's per-step linearization

  void validate() const;
};

struct SimStep {
  double time = 0.0;
  Eigen::VectorXd state;           // model state at the start of the step
  double x_world = 0.0;            // VHS pose
  double psi = 0.0;
  DriverCommand applied;           // driver command plus the applied delta
  ControlDelta delta = ControlDelta::Zero();
  std::array<double, 4> alpha{};   // plant slip angles
  std::array<double, 4> f_z{};     // plant normal loads (floored)
  double ri = 0.0;                 // rollover index (general EV)
  QpStatus status = QpStatus::Solved;
  double solve_ms = 0.0;
};

struct SimTrace {
  Scenario scenario;
  ModelKind kind = ModelKind::GeneralEv;
  std::vector<SimStep> rows;
};

/// Classical RK4 over one interval, optionally split into substeps.
template <typename F>
Eigen::VectorXd rk4_step(F&& deriv, const Eigen::VectorXd& x, double t_s, int substeps = 1) {
  Eigen::VectorXd state = x;
  const double h = t_s / substeps;
  for (int s = 0; s < substeps; ++s) {
    const Eigen::VectorXd k1 = deriv(state);
    const Eigen::VectorXd k2 = deriv(state + 0.5 * h * k1);
    const Eigen::VectorXd k3 = deriv(state + 0.5 * h * k2);
    const Eigen::VectorXd k4 = deriv(state + h * k3);
    state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return state;
}

/// Nonlinear plant derivative for the 8-state general EV model. The force
/// pathway matches the assembled model, with the full Dugoff lateral force
/// in place of its linearization and f_x = Q_applied / r_eff.
Eigen::VectorXd plant_derivatives(const Eigen::VectorXd& state, const DriverCommand& applied,
                                  const ControlDelta& delta, const GeneralEvParams& p,
                                  double u, double phi_r,
                                  const std::optional<std::array<TireLinearization, 4>>&
                                      linear_tires = std::nullopt);

/// VHS plant over [v_y, r, phi, phidot, x_w, psi, y_w]: the body block plus
/// bookkeeping kinematics. x advances at u and the heading integrates r for
/// the checkpoint frame transform; y integrates v_y exactly as in the model.
Eigen::VectorXd plant_derivatives(const Eigen::VectorXd& state, const DriverCommand& applied,
                                  const VhsParams& p, double u, double phi_r,
                                  const std::optional<std::array<TireLinearization, 4>>&
                                      linear_tires = std::nullopt);

/// Closed loop: measure (scaled by the prediction-error gain), step the MPC,
/// apply the first delta, integrate the plant, log. Deterministic for a fixed
/// scenario and seed. Infeasible solves are logged and applied as zero delta;
/// a max-iteration solve applies the returned iterate with its status logged.
SimTrace run_scenario(const Scenario& s, const VehicleParams& params, const MpcConfig& cfg,
                      const ActuatorConfig& actuators);

struct MetricsReport {
  double max_lateral_error = 0.0;
  double mean_lateral_error = 0.0;
  double max_abs_slip = 0.0;
  double max_abs_ri = 0.0;
  double mean_left_load = 0.0;
  double mean_right_load = 0.0;
  double mean_solve_ms = 0.0;
  double p95_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  int solver_failures = 0;
  int state_violations = 0;       // trace rows breaching a state bound
  double max_state_violation = 0.0;

  std::string to_text() const;
};

/// Lateral error is measured against the piecewise-linear line through the
/// scenario checkpoints (VHS); zero for the general EV.
MetricsReport metrics(const SimTrace& trace, const VehicleParams& params);

/// Fixed column order:
/// time, states..., q1..q4, d1..d4, dq1..dq4, dd1..dd4, alpha1..4, fz1..4,
/// ri, status, solve_ms. VHS traces prepend x_world and psi to the states.
void write_csv(const SimTrace& trace, std::ostream& os);

}  // namespace latmpc
