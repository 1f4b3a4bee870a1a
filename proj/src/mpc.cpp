#include "latmpc/mpc.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace latmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActiveTol = 1e-6;

// Offset + banking folded into one constant-over-the-step input channel.
Eigen::VectorXd affine_input(const DiscreteModel& m, const DriverCommand& w0, double phi_r) {
  return m.e * w0.stacked() + m.d + m.c_phi * phi_r;
}

std::vector<int> enabled_channels(const ConstraintSet& cs) {
  // A channel is part of the decision vector when any input row touches it
  // with a usable band; rows of disabled actuators are [0, 0] and the
  // channel is pinned to zero by construction instead.
  std::vector<int> channels;
  for (int ch = 0; ch < 8; ++ch) {
    bool used = false;
    for (int r = 0; r < cs.input_rows() && !used; ++r)
      if (cs.g_u(r, ch) != 0.0 && !(cs.u_lower(r) == 0.0 && cs.u_upper(r) == 0.0))
        used = true;
    if (used) channels.push_back(ch);
  }
  return channels;
}

}  // namespace

DiscreteModel discretize(const VehicleModel& model, double t_s) {
  if (!(t_s > 0.0)) throw std::domain_error("discretize: t_s must be > 0");
  const int n = model.n_x;
  const int n_aug = 8 + 8 + 1 + 1;  // B, E, D, C_phi columns as held inputs
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + n_aug, n + n_aug);
  big.topLeftCorner(n, n) = model.a;
  big.block(0, n, n, 8) = model.b;
  big.block(0, n + 8, n, 8) = model.e;
  big.block(0, n + 16, n, 1) = model.d;
  big.block(0, n + 17, n, 1) = model.c_phi;

  const Eigen::MatrixXd phi = (big * t_s).exp();

  DiscreteModel d;
  d.a = phi.topLeftCorner(n, n);
  d.b = phi.block(0, n, n, 8);
  d.e = phi.block(0, n + 8, n, 8);
  d.d = phi.block(0, n + 16, n, 1);
  d.c_phi = phi.block(0, n + 17, n, 1);
  d.t_s = t_s;
  d.n_x = n;
  return d;
}

void MpcConfig::validate(int n_x) const {
  if (horizon < 1) throw std::invalid_argument("mpc: horizon must be >= 1");
  if (!(t_s > 0.0)) throw std::invalid_argument("mpc: t_s must be > 0");
  if (state_weights.size() != n_x) throw std::invalid_argument("mpc: state weight size mismatch");
  if (input_weights.size() != 8) throw std::invalid_argument("mpc: input weight size mismatch");
  if ((state_weights.array() < 0.0).any() || (input_weights.array() < 0.0).any())
    throw std::invalid_argument("mpc: weights must be >= 0");
  if (!(slack_weight > 0.0)) throw std::invalid_argument("mpc: slack weight must be > 0");
}

ControlDelta CftocQp::first_input(const Eigen::VectorXd& z) const {
  ControlDelta u = ControlDelta::Zero();
  const int nact = static_cast<int>(channels.size());
  const int offset = condensed ? 0 : horizon * n_x;
  for (int c = 0; c < nact; ++c) u(channels[c]) = z(offset + c);
  return u;
}

Eigen::MatrixXd CftocQp::input_sequence(const Eigen::VectorXd& z) const {
  const int nact = static_cast<int>(channels.size());
  const int offset = condensed ? 0 : horizon * n_x;
  Eigen::MatrixXd seq = Eigen::MatrixXd::Zero(horizon, 8);
  for (int k = 0; k < horizon; ++k)
    for (int c = 0; c < nact; ++c) seq(k, channels[c]) = z(offset + k * nact + c);
  return seq;
}

Eigen::MatrixXd CftocQp::predicted_states(const Eigen::VectorXd& z) const {
  const int nact = static_cast<int>(channels.size());
  Eigen::MatrixXd states(horizon, n_x);
  if (condensed) {
    const Eigen::VectorXd stacked = pred_const + pred_map * z.head(horizon * nact);
    for (int k = 0; k < horizon; ++k) states.row(k) = stacked.segment(k * n_x, n_x);
  } else {
    for (int k = 0; k < horizon; ++k) states.row(k) = z.segment(k * n_x, n_x);
  }
  return states;
}

double CftocQp::slack(const Eigen::VectorXd& z) const { return z(z.size() - 1); }

namespace {

struct InputRowSelection {
  std::vector<int> rows;  // rows of cs.g_u that survive channel elimination
};

InputRowSelection select_input_rows(const ConstraintSet& cs, const std::vector<int>& channels) {
  InputRowSelection sel;
  for (int r = 0; r < cs.input_rows(); ++r) {
    bool touches = false;
    for (int c : channels)
      if (cs.g_u(r, c) != 0.0) touches = true;
    if (touches) {
      sel.rows.push_back(r);
    } else {
      // dropped row must admit zero, otherwise the program is malformed
      if (cs.u_lower(r) > 0.0 || cs.u_upper(r) < 0.0)
        throw std::invalid_argument("build_cftoc: pinned input row excludes zero");
    }
  }
  return sel;
}

Eigen::SparseMatrix<double> to_sparse(const Eigen::MatrixXd& m, double prune = 0.0) {
  Eigen::SparseMatrix<double> s(m.rows(), m.cols());
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > prune) trips.emplace_back(i, j, m(i, j));
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

}  // namespace

CftocQp build_cftoc(const DiscreteModel& model, const Eigen::VectorXd& x0,
                    const DriverCommand& w0, double phi_r, const Eigen::VectorXd& x_desired,
                    const ConstraintSet& cs, const MpcConfig& cfg) {
  const int n_x = model.n_x;
  cfg.validate(n_x);
  cs.validate();
  if (x0.size() != n_x || x_desired.size() != n_x)
    throw std::invalid_argument("build_cftoc: state dimension mismatch");
  const int big_n = cfg.horizon;

  CftocQp out;
  out.horizon = big_n;
  out.n_x = n_x;
  out.channels = enabled_channels(cs);
  out.condensed = true;
  const int nact = static_cast<int>(out.channels.size());
  const int n_z = big_n * nact + 1;  // inputs + shared slack

  Eigen::MatrixXd b_act(n_x, nact);
  for (int c = 0; c < nact; ++c) b_act.col(c) = model.b.col(out.channels[c]);
  const Eigen::VectorXd c_aff = affine_input(model, w0, phi_r);

  // prediction x_{k+1} = A^{k+1} x0 + sum_j A^{k-j} (B u_j + c)
  out.pred_map = Eigen::MatrixXd::Zero(big_n * n_x, big_n * nact);
  out.pred_const = Eigen::VectorXd::Zero(big_n * n_x);
  Eigen::VectorXd free_resp = x0;
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(n_x);
  for (int k = 0; k < big_n; ++k) {
    accum = model.a * accum + c_aff;
    free_resp = model.a * free_resp;
    out.pred_const.segment(k * n_x, n_x) = free_resp + accum;
    // block row k: [A^k B, A^{k-1} B, ..., B]
    if (k == 0) {
      out.pred_map.block(0, 0, n_x, nact) = b_act;
    } else {
      out.pred_map.block(k * n_x, 0, n_x, (k + 1) * nact).leftCols(k * nact) =
          model.a * out.pred_map.block((k - 1) * n_x, 0, n_x, k * nact);
      out.pred_map.block(k * n_x, k * nact, n_x, nact) = b_act;
    }
  }

  // cost: sum (x_k - x_d)' Q (x_k - x_d) + u' R u + sigma s^2
  Eigen::VectorXd q_stack(big_n * n_x);
  Eigen::VectorXd qw_stack(big_n * n_x);
  for (int k = 0; k < big_n; ++k) {
    q_stack.segment(k * n_x, n_x) = x_desired;
    qw_stack.segment(k * n_x, n_x) = cfg.state_weights;
  }
  Eigen::VectorXd r_act(nact);
  for (int c = 0; c < nact; ++c) r_act(c) = cfg.input_weights(out.channels[c]);

  Eigen::MatrixXd p_dense = Eigen::MatrixXd::Zero(n_z, n_z);
  p_dense.topLeftCorner(big_n * nact, big_n * nact) =
      2.0 * out.pred_map.transpose() * qw_stack.asDiagonal() * out.pred_map;
  for (int k = 0; k < big_n; ++k)
    for (int c = 0; c < nact; ++c) p_dense(k * nact + c, k * nact + c) += 2.0 * r_act(c);
  p_dense(n_z - 1, n_z - 1) = 2.0 * cfg.slack_weight;

  Eigen::VectorXd q_lin = Eigen::VectorXd::Zero(n_z);
  q_lin.head(big_n * nact) =
      2.0 * out.pred_map.transpose() *
      (qw_stack.asDiagonal() * (out.pred_const - q_stack));

  // constraint rows: soft state pairs per step, then hard input rows per
  // step, then the slack nonnegativity row
  const auto sel = select_input_rows(cs, out.channels);
  const int n_soft_rows = cs.state_rows();
  const int m_rows = big_n * 2 * n_soft_rows + big_n * static_cast<int>(sel.rows.size()) + 1;

  Eigen::MatrixXd a_dense = Eigen::MatrixXd::Zero(m_rows, n_z);
  Eigen::VectorXd lower(m_rows), upper(m_rows);
  int row = 0;
  for (int k = 0; k < big_n; ++k) {
    const auto map_k = out.pred_map.block(k * n_x, 0, n_x, big_n * nact);
    const auto const_k = out.pred_const.segment(k * n_x, n_x);
    for (int j = 0; j < n_soft_rows; ++j) {
      const Eigen::RowVectorXd g_in_z = cs.g_x.row(j) * map_k;
      const double g_const = cs.g_x.row(j).dot(const_k);
      // g x_{k+1} - s <= ub
      a_dense.row(row).head(big_n * nact) = g_in_z;
      a_dense(row, n_z - 1) = cs.x_soft[j] ? -1.0 : 0.0;
      lower(row) = -kInf;
      upper(row) = cs.x_upper(j) - g_const;
      ++row;
      // g x_{k+1} + s >= lb
      a_dense.row(row).head(big_n * nact) = g_in_z;
      a_dense(row, n_z - 1) = cs.x_soft[j] ? 1.0 : 0.0;
      lower(row) = cs.x_lower(j) - g_const;
      upper(row) = kInf;
      ++row;
    }
  }
  for (int k = 0; k < big_n; ++k) {
    for (int r : sel.rows) {
      for (int c = 0; c < nact; ++c) a_dense(row, k * nact + c) = cs.g_u(r, out.channels[c]);
      lower(row) = cs.u_lower(r);
      upper(row) = cs.u_upper(r);
      ++row;
    }
  }
  a_dense(row, n_z - 1) = 1.0;
  lower(row) = 0.0;
  upper(row) = kInf;
  ++row;

  out.qp.p = to_sparse(p_dense);
  out.qp.q = q_lin;
  out.qp.a = to_sparse(a_dense);
  out.qp.l = lower;
  out.qp.u = upper;
  return out;
}

CftocQp build_cftoc_sparse(const DiscreteModel& model, const Eigen::VectorXd& x0,
                           const DriverCommand& w0, double phi_r,
                           const Eigen::VectorXd& x_desired, const ConstraintSet& cs,
                           const MpcConfig& cfg) {
  const int n_x = model.n_x;
  cfg.validate(n_x);
  cs.validate();
  if (x0.size() != n_x || x_desired.size() != n_x)
    throw std::invalid_argument("build_cftoc_sparse: state dimension mismatch");
  const int big_n = cfg.horizon;

  CftocQp out;
  out.horizon = big_n;
  out.n_x = n_x;
  out.channels = enabled_channels(cs);
  out.condensed = false;
  const int nact = static_cast<int>(out.channels.size());
  const int n_states = big_n * n_x;
  const int n_z = n_states + big_n * nact + 1;

  Eigen::MatrixXd b_act(n_x, nact);
  for (int c = 0; c < nact; ++c) b_act.col(c) = model.b.col(out.channels[c]);
  const Eigen::VectorXd c_aff = affine_input(model, w0, phi_r);

  Eigen::MatrixXd p_dense = Eigen::MatrixXd::Zero(n_z, n_z);
  Eigen::VectorXd q_lin = Eigen::VectorXd::Zero(n_z);
  for (int k = 0; k < big_n; ++k)
    for (int i = 0; i < n_x; ++i) {
      p_dense(k * n_x + i, k * n_x + i) = 2.0 * cfg.state_weights(i);
      q_lin(k * n_x + i) = -2.0 * cfg.state_weights(i) * x_desired(i);
    }
  Eigen::VectorXd r_act(nact);
  for (int c = 0; c < nact; ++c) r_act(c) = cfg.input_weights(out.channels[c]);
  for (int k = 0; k < big_n; ++k)
    for (int c = 0; c < nact; ++c)
      p_dense(n_states + k * nact + c, n_states + k * nact + c) = 2.0 * r_act(c);
  p_dense(n_z - 1, n_z - 1) = 2.0 * cfg.slack_weight;

  const auto sel = select_input_rows(cs, out.channels);
  const int n_soft_rows = cs.state_rows();
  const int m_rows = big_n * n_x + big_n * 2 * n_soft_rows +
                     big_n * static_cast<int>(sel.rows.size()) + 1;

  Eigen::MatrixXd a_dense = Eigen::MatrixXd::Zero(m_rows, n_z);
  Eigen::VectorXd lower(m_rows), upper(m_rows);
  int row = 0;
  // dynamics equalities: x_{k+1} - A x_k - B u_k = c (+ A x0 for k = 0)
  for (int k = 0; k < big_n; ++k) {
    for (int i = 0; i < n_x; ++i) a_dense(row + i, k * n_x + i) = 1.0;
    if (k > 0)
      a_dense.block(row, (k - 1) * n_x, n_x, n_x) = -model.a;
    a_dense.block(row, n_states + k * nact, n_x, nact) = -b_act;
    Eigen::VectorXd rhs = c_aff;
    if (k == 0) rhs += model.a * x0;
    lower.segment(row, n_x) = rhs;
    upper.segment(row, n_x) = rhs;
    row += n_x;
  }
  for (int k = 0; k < big_n; ++k) {
    for (int j = 0; j < n_soft_rows; ++j) {
      a_dense.row(row).segment(k * n_x, n_x) = cs.g_x.row(j);
      a_dense(row, n_z - 1) = cs.x_soft[j] ? -1.0 : 0.0;
      lower(row) = -kInf;
      upper(row) = cs.x_upper(j);
      ++row;
      a_dense.row(row).segment(k * n_x, n_x) = cs.g_x.row(j);
      a_dense(row, n_z - 1) = cs.x_soft[j] ? 1.0 : 0.0;
      lower(row) = cs.x_lower(j);
      upper(row) = kInf;
      ++row;
    }
  }
  for (int k = 0; k < big_n; ++k) {
    for (int r : sel.rows) {
      for (int c = 0; c < nact; ++c)
        a_dense(row, n_states + k * nact + c) = cs.g_u(r, out.channels[c]);
      lower(row) = cs.u_lower(r);
      upper(row) = cs.u_upper(r);
      ++row;
    }
  }
  a_dense(row, n_z - 1) = 1.0;
  lower(row) = 0.0;
  upper(row) = kInf;

  out.qp.p = to_sparse(p_dense);
  out.qp.q = q_lin;
  out.qp.a = to_sparse(a_dense);
  out.qp.l = lower;
  out.qp.u = upper;
  return out;
}

namespace {

void check_controller_inputs(const MpcConfig& cfg, const ActuatorConfig& actuators, double u) {
  if (!(u > 0.0)) throw std::domain_error("mpc: u must be > 0");
  for (int i = 0; i < 4; ++i) {
    if (actuators.torque[i] && !(cfg.input_weights(2 * i) > 0.0))
      throw std::invalid_argument("mpc: enabled torque channel needs R > 0");
    if (actuators.steering[i] && !(cfg.input_weights(2 * i + 1) > 0.0))
      throw std::invalid_argument("mpc: enabled steering channel needs R > 0");
  }
}

}  // namespace

MpcController::MpcController(GeneralEvParams params, MpcConfig cfg, ActuatorConfig actuators,
                             double u)
    : params_(std::move(params)), cfg_(std::move(cfg)), actuators_(actuators), u_(u) {
  std::get<GeneralEvParams>(params_).validate();
  cfg_.validate(8);
  cfg_.kind = ModelKind::GeneralEv;
  solver_.settings() = cfg_.solver;
  check_controller_inputs(cfg_, actuators_, u_);
}

MpcController::MpcController(VhsParams params, MpcConfig cfg, ActuatorConfig actuators,
                             double u)
    : params_(std::move(params)), cfg_(std::move(cfg)), actuators_(actuators), u_(u) {
  std::get<VhsParams>(params_).validate();
  cfg_.validate(5);
  cfg_.kind = ModelKind::Vhs;
  solver_.settings() = cfg_.solver;
  check_controller_inputs(cfg_, actuators_, u_);
}

MpcStepResult MpcController::step(const Eigen::VectorXd& measurement,
                                  const EvDriverInput& driver) {
  const auto& p = std::get<GeneralEvParams>(params_);
  const double r_d = desired_yaw_rate(driver.delta_d, u_, p.geometry().wheelbase(), p.k_usd,
                                      p.tire.mu_y);
  auto result = run(measurement, driver.w0, desired_state_general(u_, r_d, p.r_eff));
  result.r_desired = r_d;
  result.delta_desired = driver.delta_d;
  return result;
}

MpcStepResult MpcController::step(const Eigen::VectorXd& measurement,
                                  const VhsDriverInput& driver) {
  const auto& p = std::get<VhsParams>(params_);
  const auto target = checkpoint_steering(driver.local_cp, measurement(1), u_, p.delta_max);
  const double r_d = desired_yaw_rate(target.delta_d, u_, p.geometry().wheelbase(), p.k_usd,
                                      p.tire.mu_y);
  auto result = run(measurement, driver.w0, desired_state_vhs(driver.y_world, r_d));
  result.r_desired = r_d;
  result.delta_desired = target.delta_d;
  return result;
}

MpcStepResult MpcController::run(const Eigen::VectorXd& measurement, const DriverCommand& w0,
                                 const Eigen::VectorXd& x_desired) {
  if (!measurement.allFinite())
    throw std::invalid_argument("mpc: measurement contains NaN or Inf");

  const bool is_ev = std::holds_alternative<GeneralEvParams>(params_);
  const int n_x = is_ev ? 8 : 5;
  if (measurement.size() != n_x) throw std::invalid_argument("mpc: measurement size mismatch");

  const double v = is_ev ? measurement(0) : measurement(1);
  const double r = is_ev ? measurement(1) : measurement(2);
  const double phi = is_ev ? measurement(2) : measurement(3);
  const double phi_dot = is_ev ? measurement(3) : measurement(4);

  const AxleGeometry geom = is_ev ? std::get<GeneralEvParams>(params_).geometry()
                                  : std::get<VhsParams>(params_).geometry();
  const TireParams& tire = is_ev ? std::get<GeneralEvParams>(params_).tire
                                 : std::get<VhsParams>(params_).tire;
  const double phi_r = is_ev ? 0.0 : std::get<VhsParams>(params_).phi_r;

  std::array<TireLinearization, 4> lin;
  std::array<double, 4> f_z{};
  std::array<double, 4> f_y0{};
  if (is_ev)
    f_z = normal_loads(std::get<GeneralEvParams>(params_), phi, phi_dot, phi_r);
  else
    f_z = normal_loads(std::get<VhsParams>(params_), phi, phi_dot, phi_r);
  for (int i = 0; i < 4; ++i) {
    const double alpha = slip_angle(i + 1, w0.steering[i], v, r, u_, geom);
    lin[i] = linearize_tire({alpha, f_z[i]}, tire);
    f_y0[i] = lin[i].f_y;
  }

  VehicleModel model;
  ConstraintSet cs;
  if (is_ev) {
    const auto& p = std::get<GeneralEvParams>(params_);
    model = assemble_general(p, u_, lin, w0, actuators_);
    std::array<double, 4> omega{measurement(4), measurement(5), measurement(6), measurement(7)};
    cs = state_rows(p, u_, omega);
    cs.merge(input_rows(w0, f_z, f_y0, p, actuators_));
  } else {
    const auto& p = std::get<VhsParams>(params_);
    model = assemble_vhs(p, u_, lin, w0, actuators_);
    cs = state_rows(p, u_);
    cs.merge(input_rows(w0, f_z, f_y0, p, actuators_));
  }
  cs.slack_weight = cfg_.slack_weight;

  const DiscreteModel disc = discretize(model, cfg_.t_s);
  const CftocQp cftoc = build_cftoc(disc, measurement, w0, phi_r, x_desired, cs, cfg_);

  // warm start: previous input sequence shifted one step, last block repeated
  const int nact = static_cast<int>(cftoc.channels.size());
  const QpSolution* warm = nullptr;
  QpSolution shifted;
  if (prev_solution_ && prev_vars_per_step_ == nact &&
      prev_solution_->z.size() == cftoc.qp.vars() &&
      prev_solution_->y_dual.size() == cftoc.qp.rows()) {
    shifted = *prev_solution_;
    const int n_u_total = cfg_.horizon * nact;
    // the final block keeps the previous last move (copied above)
    shifted.z.head(n_u_total - nact) = prev_solution_->z.segment(nact, n_u_total - nact);
    warm = &shifted;
  }

  MpcStepResult out;
  out.qp_solution = solver_.solve(cftoc.qp, warm);
  prev_solution_ = out.qp_solution;
  prev_vars_per_step_ = nact;

  out.u_apply = cftoc.first_input(out.qp_solution.z);
  // hard input bands hold exactly: project away solver tolerance
  for (int ch = 0; ch < 8; ++ch) {
    double lo = -kInf, hi = kInf;
    for (int r0 = 0; r0 < cs.input_rows(); ++r0) {
      if (cs.g_u(r0, ch) == 1.0) {
        lo = std::max(lo, cs.u_lower(r0));
        hi = std::min(hi, cs.u_upper(r0));
      }
    }
    if (lo <= hi) out.u_apply(ch) = std::clamp(out.u_apply(ch), lo, hi);
  }

  out.predicted_states = cftoc.predicted_states(out.qp_solution.z);
  out.slack = cftoc.slack(out.qp_solution.z);
  const Eigen::VectorXd az = cftoc.qp.a * out.qp_solution.z;
  for (int i = 0; i < cftoc.qp.rows(); ++i) {
    const bool at_low = cftoc.qp.l(i) != -kInf && az(i) <= cftoc.qp.l(i) + kActiveTol;
    const bool at_up = cftoc.qp.u(i) != kInf && az(i) >= cftoc.qp.u(i) - kActiveTol;
    if (at_low || at_up) out.active_constraints.push_back(i);
  }
  return out;
}

}  // namespace latmpc
