#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "latmpc/constraints.hpp"
#include "latmpc/qp.hpp"
#include "latmpc/reference.hpp"
#include "latmpc/vehicle.hpp"

namespace latmpc {

/// Exact zero-order-hold discretization of the affine model; the offset and
/// banking channels are treated as inputs held constant over the step.
struct DiscreteModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd e;
  Eigen::VectorXd d;
  Eigen::VectorXd c_phi;
  double t_s = 0.0;
  int n_x = 0;
  int n_u = 8;
};
DiscreteModel discretize(const VehicleModel& model, double t_s);

struct MpcConfig {
  int horizon = 10;              // N
  double t_s = 0.1;              // sample time [s]
  Eigen::VectorXd state_weights; // diagonal Q, length n_x
  Eigen::VectorXd input_weights; // diagonal R, length 8
  double slack_weight = 0.1;     // sigma
  ModelKind kind = ModelKind::GeneralEv;
  SolverSettings solver;

  void validate(int n_x) const;
};

/// A built CFTOC instance together with the bookkeeping needed to map the
/// solver's decision vector back to input deltas and predicted states.
struct CftocQp {
  QuadraticProgram qp;
  int horizon = 0;
  int n_x = 0;
  std::vector<int> channels;   // enabled input channels (indices into 0..7)
  bool condensed = true;

  // condensed form: stacked predictions X = pred_const + pred_map * U_active
  Eigen::MatrixXd pred_map;
  Eigen::VectorXd pred_const;

  /// First-move delta, expanded to the full 8-channel layout.
  ControlDelta first_input(const Eigen::VectorXd& z) const;
  /// All N input deltas (N x 8).
  Eigen::MatrixXd input_sequence(const Eigen::VectorXd& z) const;
  /// Predicted states (N x n_x) for steps 1..N.
  Eigen::MatrixXd predicted_states(const Eigen::VectorXd& z) const;
  double slack(const Eigen::VectorXd& z) const;
};

/// Condensed (substitution) form: decision variables are the N active input
/// deltas plus one shared slack; states are eliminated through the affine
/// prediction. Soft state rows split into slack-relaxed one-sided pairs;
/// input rows are hard.
CftocQp build_cftoc(const DiscreteModel& model, const Eigen::VectorXd& x0,
                    const DriverCommand& w0, double phi_r, const Eigen::VectorXd& x_desired,
                    const ConstraintSet& cs, const MpcConfig& cfg);

/// Equivalent sparse form with the predicted states kept as decision
/// variables and the dynamics as equality rows. Used as the internal
/// consistency oracle for the condensed builder.
CftocQp build_cftoc_sparse(const DiscreteModel& model, const Eigen::VectorXd& x0,
                           const DriverCommand& w0, double phi_r,
                           const Eigen::VectorXd& x_desired, const ConstraintSet& cs,
                           const MpcConfig& cfg);

struct MpcStepResult {
  ControlDelta u_apply = ControlDelta::Zero();
  Eigen::MatrixXd predicted_states;
  QpSolution qp_solution;
  std::vector<int> active_constraints;  // QP rows at their bounds
  double slack = 0.0;
  double r_desired = 0.0;
  double delta_desired = 0.0;
};

/// General EV driver input: base command plus the steering-wheel request that
/// shapes the desired yaw rate.
struct EvDriverInput {
  DriverCommand w0;
  double delta_d = 0.0;
};

/// VHS driver input: the active checkpoint in the vehicle frame plus its
/// world-frame lateral coordinate (the position target).
struct VhsDriverInput {
  DriverCommand w0;
  Checkpoint local_cp{1.0, 0.0};
  double y_world = 0.0;
};

/// Receding-horizon controller. Each step relinearizes the tires at the
/// measured operating point, assembles and discretizes the model, rebuilds
/// the constraint set, and solves the condensed QP warm-started from the
/// previous solution shifted by one step.
class MpcController {
 public:
  MpcController(GeneralEvParams params, MpcConfig cfg, ActuatorConfig actuators, double u);
  MpcController(VhsParams params, MpcConfig cfg, ActuatorConfig actuators, double u);

  MpcStepResult step(const Eigen::VectorXd& measurement, const EvDriverInput& driver);
  MpcStepResult step(const Eigen::VectorXd& measurement, const VhsDriverInput& driver);

  const MpcConfig& config() const { return cfg_; }
  double speed() const { return u_; }
  void set_speed(double u) { u_ = u; }

 private:
  MpcStepResult run(const Eigen::VectorXd& measurement, const DriverCommand& w0,
                    const Eigen::VectorXd& x_desired);

  std::variant<GeneralEvParams, VhsParams> params_;
  MpcConfig cfg_;
  ActuatorConfig actuators_;
  double u_ = 1.0;
  QpSolver solver_;
  std::optional<QpSolution> prev_solution_;
  int prev_vars_per_step_ = 0;
};

}  // namespace latmpc
