#include "latmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace latmpc {

namespace {

int auto_substeps(double t_s, int configured) {
  if (configured > 0) return configured;
  return std::max(1, static_cast<int>(std::lround(t_s / 0.002)));
}

double tire_lateral(const TireParams& tire, double alpha, double f_z,
                    const std::optional<std::array<TireLinearization, 4>>& lin, int wheel) {
  if (lin) return (*lin)[wheel].force_at(alpha);
  return lateral_force({alpha, f_z}, tire);
}

// Corner-force aggregation shared by both plants: per-wheel tire forces
// rotated by the applied steering and mapped to [F_X, F_Y, M_Z].
Eigen::Vector3d cog_forces(const DriverCommand& applied, const std::array<double, 4>& alpha,
                           const std::array<double, 4>& f_z, const TireParams& tire,
                           double r_eff, const Eigen::MatrixXd& l_c,
                           const std::optional<std::array<TireLinearization, 4>>& lin) {
  Eigen::Matrix<double, 8, 1> forces;
  for (int i = 0; i < 4; ++i) {
    const double f_x = applied.torque[i] / r_eff;
    const double f_y = tire_lateral(tire, alpha[i], f_z[i], lin, i);
    const double c = std::cos(applied.steering[i]);
    const double s = std::sin(applied.steering[i]);
    forces(2 * i) = c * f_x - s * f_y;
    forces(2 * i + 1) = s * f_x + c * f_y;
  }
  return l_c * forces;
}

}  // namespace

void Scenario::validate() const {
  if (steps < 1) throw std::invalid_argument("scenario: steps must be >= 1");
  if (!(t_s > 0.0)) throw std::invalid_argument("scenario: t_s must be > 0");
  if (!(u > 0.0)) throw std::invalid_argument("scenario: u must be > 0");
  if (!(prediction_error_gain > 0.0 && prediction_error_gain <= 2.0))
    throw std::invalid_argument("scenario: prediction_error_gain out of (0, 2]");
  const int want = kind == ModelKind::GeneralEv ? 8 : 5;
  if (x0.size() != want) throw std::invalid_argument("scenario: x0 size mismatch");
  if (kind == ModelKind::Vhs && checkpoints.empty())
    throw std::invalid_argument("scenario: VHS run needs at least one checkpoint");
}

Eigen::VectorXd plant_derivatives(const Eigen::VectorXd& state, const DriverCommand& applied,
                                  const ControlDelta& delta, const GeneralEvParams& p,
                                  double u, double phi_r,
                                  const std::optional<std::array<TireLinearization, 4>>& lin) {
  const double v = state(0), r = state(1), phi = state(2), phi_dot = state(3);
  const auto f_z = normal_loads(p, phi, phi_dot, phi_r);
  std::array<double, 4> alpha{};
  for (int i = 0; i < 4; ++i)
    alpha[i] = slip_angle(i + 1, applied.steering[i], v, r, u, p.geometry());

  const BodyMatrices bm = body_matrices_general(p, u);
  const Eigen::MatrixXd l_c = cog_map(p.t_f, p.t_r, p.l_f, p.l_r);
  const Eigen::Vector3d f = cog_forces(applied, alpha, f_z, p.tire, p.r_eff, l_c, lin);

  Eigen::VectorXd dot(8);
  dot.head(4) = bm.a_f * state.head(4) + bm.b_f * f;
  for (int i = 0; i < 4; ++i) dot(4 + i) = delta(2 * i) / p.i_w;
  return dot;
}

Eigen::VectorXd plant_derivatives(const Eigen::VectorXd& state, const DriverCommand& applied,
                                  const VhsParams& p, double u, double phi_r,
                                  const std::optional<std::array<TireLinearization, 4>>& lin) {
  const double v_y = state(0), r = state(1), phi = state(2), phi_dot = state(3);
  const auto f_z = normal_loads(p, phi, phi_dot, phi_r);
  std::array<double, 4> alpha{};
  for (int i = 0; i < 4; ++i)
    alpha[i] = slip_angle(i + 1, applied.steering[i], v_y, r, u, p.geometry());

  const BodyMatrices bm = body_matrices_vhs(p, u);
  const Eigen::MatrixXd l_c = cog_map(p.t_f, p.t_r, p.l_f, p.l_r);
  const Eigen::Vector3d f = cog_forces(applied, alpha, f_z, p.tire, p.r_eff, l_c, lin);

  // body block of the 5-state model without its y row
  Eigen::VectorXd x5 = Eigen::VectorXd::Zero(5);
  x5.tail(4) << v_y, r, phi, phi_dot;
  const Eigen::VectorXd body_dot =
      bm.a_f * x5 + bm.b_f * f + bm.c_phi * phi_r;

  Eigen::VectorXd dot(7);
  dot(0) = body_dot(1);  // v_y
  dot(1) = body_dot(2);  // r
  dot(2) = body_dot(3);  // phi
  dot(3) = body_dot(4);  // phi_dot
  dot(4) = u;            // x advances at the run speed
  dot(5) = r;            // heading, used for the checkpoint transform
  dot(6) = body_dot(0);  // y integrates v_y, as in the model
  return dot;
}

namespace {

struct CheckpointTracker {
  const std::vector<Checkpoint>& cps;
  size_t idx = 0;

  const Checkpoint& advance(double x_world) {
    while (idx + 1 < cps.size() && x_world >= cps[idx].x) ++idx;
    return cps[idx];
  }
};

DriverCommand apply_delta(const DriverCommand& w0, const ControlDelta& delta) {
  DriverCommand out = w0;
  for (int i = 0; i < 4; ++i) {
    out.torque[i] += delta(2 * i);
    out.steering[i] += delta(2 * i + 1);
  }
  return out;
}

bool usable(QpStatus s) { return s == QpStatus::Solved || s == QpStatus::MaxIter; }

}  // namespace

SimTrace run_scenario(const Scenario& s, const VehicleParams& params, const MpcConfig& cfg,
                      const ActuatorConfig& actuators) {
  s.validate();
  if (std::abs(cfg.t_s - s.t_s) > 1e-12)
    throw std::invalid_argument("run_scenario: controller and plant sample times differ");
  SimTrace trace;
  trace.scenario = s;
  trace.kind = s.kind;
  trace.rows.reserve(s.steps);
  const int substeps = auto_substeps(s.t_s, s.substeps);

  if (s.kind == ModelKind::GeneralEv) {
    const auto& p = std::get<GeneralEvParams>(params);
    MpcController controller(p, cfg, actuators, s.u);
    const auto [c1, c2] = rollover_coeffs(p);

    Eigen::VectorXd state = s.x0;
    for (int k = 0; k < s.steps; ++k) {
      const Eigen::VectorXd measurement = s.prediction_error_gain * state;
      MpcStepResult res = controller.step(measurement, EvDriverInput{s.driver, s.delta_d});
      ControlDelta delta =
          usable(res.qp_solution.status) ? res.u_apply : ControlDelta::Zero();
      const DriverCommand applied = apply_delta(s.driver, delta);

      SimStep row;
      row.time = k * s.t_s;
      row.state = state;
      row.applied = applied;
      row.delta = delta;
      row.f_z = normal_loads(p, state(2), state(3), s.phi_r);
      for (int i = 0; i < 4; ++i)
        row.alpha[i] = slip_angle(i + 1, applied.steering[i], state(0), state(1), s.u,
                                  p.geometry());
      row.ri = c1 * state(2) + c2 * state(3);
      row.status = res.qp_solution.status;
      row.solve_ms = res.qp_solution.solve_time_s * 1e3;
      trace.rows.push_back(std::move(row));

      std::optional<std::array<TireLinearization, 4>> frozen;
      if (s.linear_plant) {
        // same operating point the controller linearized at this step
        auto& lin = frozen.emplace();
        const auto f_z = normal_loads(p, measurement(2), measurement(3), s.phi_r);
        for (int i = 0; i < 4; ++i) {
          const double a = slip_angle(i + 1, s.driver.steering[i], measurement(0),
                                      measurement(1), s.u, p.geometry());
          lin[i] = linearize_tire({a, f_z[i]}, p.tire);
        }
      }
      state = rk4_step(
          [&](const Eigen::VectorXd& x) {
            return plant_derivatives(x, applied, delta, p, s.u, s.phi_r, frozen);
          },
          state, s.t_s, substeps);
    }
  } else {
    const auto& p0 = std::get<VhsParams>(params);
    VhsParams p = p0;
    p.phi_r = s.phi_r;
    MpcController controller(p, cfg, actuators, s.u);

    // plant state: [v_y, r, phi, phidot, x_w, psi, y_w]
    Eigen::VectorXd plant = Eigen::VectorXd::Zero(7);
    plant.head(4) = s.x0.tail(4);
    plant(6) = s.x0(0);
    CheckpointTracker tracker{s.checkpoints};

    for (int k = 0; k < s.steps; ++k) {
      const double x_w = plant(4), psi = plant(5), y_w = plant(6);
      Eigen::VectorXd measurement(5);
      measurement << y_w, plant(0), plant(1), plant(2), plant(3);
      measurement *= s.prediction_error_gain;

      const Checkpoint& cp = tracker.advance(x_w);
      const double dx = cp.x - x_w, dy = cp.y - y_w;
      Checkpoint local{std::max(1.0, std::cos(psi) * dx + std::sin(psi) * dy),
                       -std::sin(psi) * dx + std::cos(psi) * dy};
      MpcStepResult res =
          controller.step(measurement, VhsDriverInput{s.driver, local, cp.y});
      ControlDelta delta =
          usable(res.qp_solution.status) ? res.u_apply : ControlDelta::Zero();
      const DriverCommand applied = apply_delta(s.driver, delta);

      SimStep row;
      row.time = k * s.t_s;
      row.state = Eigen::VectorXd(5);
      row.state << y_w, plant(0), plant(1), plant(2), plant(3);
      row.x_world = x_w;
      row.psi = psi;
      row.applied = applied;
      row.delta = delta;
      row.f_z = normal_loads(p, plant(2), plant(3), s.phi_r);
      for (int i = 0; i < 4; ++i)
        row.alpha[i] = slip_angle(i + 1, applied.steering[i], plant(0), plant(1), s.u,
                                  p.geometry());
      row.status = res.qp_solution.status;
      row.solve_ms = res.qp_solution.solve_time_s * 1e3;
      trace.rows.push_back(std::move(row));

      plant = rk4_step(
          [&](const Eigen::VectorXd& x) {
            return plant_derivatives(x, applied, p, s.u, s.phi_r, std::nullopt);
          },
          plant, s.t_s, substeps);
    }
  }
  return trace;
}

namespace {

double reference_y(const Scenario& s, double x) {
  // piecewise-linear line through the start point and the checkpoints
  double x_prev = 0.0;
  double y_prev = s.x0.size() > 0 && s.kind == ModelKind::Vhs ? s.x0(0) : 0.0;
  for (const auto& cp : s.checkpoints) {
    if (x <= cp.x) {
      const double w = cp.x == x_prev ? 1.0 : (x - x_prev) / (cp.x - x_prev);
      return y_prev + w * (cp.y - y_prev);
    }
    x_prev = cp.x;
    y_prev = cp.y;
  }
  return y_prev;
}

}  // namespace

MetricsReport metrics(const SimTrace& trace, const VehicleParams& params) {
  MetricsReport rep;
  if (trace.rows.empty()) return rep;

  std::vector<double> solve_times;
  solve_times.reserve(trace.rows.size());
  double lat_sum = 0.0, left_sum = 0.0, right_sum = 0.0;

  for (const auto& row : trace.rows) {
    if (trace.kind == ModelKind::Vhs) {
      const double err = std::abs(row.state(0) - reference_y(trace.scenario, row.x_world));
      rep.max_lateral_error = std::max(rep.max_lateral_error, err);
      lat_sum += err;
    }
    for (double a : row.alpha) rep.max_abs_slip = std::max(rep.max_abs_slip, std::abs(a));
    rep.max_abs_ri = std::max(rep.max_abs_ri, std::abs(row.ri));
    left_sum += 0.5 * (row.f_z[0] + row.f_z[2]);
    right_sum += 0.5 * (row.f_z[1] + row.f_z[3]);
    solve_times.push_back(row.solve_ms);
    if (row.status != QpStatus::Solved) ++rep.solver_failures;
  }
  const double n = static_cast<double>(trace.rows.size());
  rep.mean_lateral_error = lat_sum / n;
  rep.mean_left_load = left_sum / n;
  rep.mean_right_load = right_sum / n;

  std::sort(solve_times.begin(), solve_times.end());
  rep.max_solve_ms = solve_times.back();
  rep.mean_solve_ms = 0.0;
  for (double t : solve_times) rep.mean_solve_ms += t;
  rep.mean_solve_ms /= n;
  rep.p95_solve_ms = solve_times[static_cast<size_t>(0.95 * (solve_times.size() - 1))];

  // state-bound audit on the logged trajectory
  const double u = trace.scenario.u;
  for (const auto& row : trace.rows) {
    auto check = [&](double value, double lo, double hi) {
      const double excess = std::max(value - hi, lo - value);
      if (excess > 1e-9) {
        ++rep.state_violations;
        rep.max_state_violation = std::max(rep.max_state_violation, excess);
      }
    };
    if (trace.kind == ModelKind::GeneralEv) {
      const auto& p = std::get<GeneralEvParams>(params);
      const auto [c1, c2] = rollover_coeffs(p);
      const double r_max = p.tire.mu_y * kGravity / u;
      check(c1 * row.state(2) + c2 * row.state(3), -p.ri_c, p.ri_c);
      check(row.state(1), -r_max, r_max);
      for (int i = 0; i < 4; ++i) {
        const auto [lo, hi] = slip_speed_bounds(u, row.state(4 + i), p.r_eff, p.lambda_max);
        check(row.state(4 + i), lo, hi);
      }
      check(row.state(0) / u + p.l_r / u * row.state(1), -p.alpha_r_max, p.alpha_r_max);
    } else {
      const auto& p = std::get<VhsParams>(params);
      const double r_max = p.tire.mu_y * kGravity / u;
      check(row.state(2), -r_max, r_max);
      check(row.state(1) / u + p.l_r / u * row.state(2), -p.alpha_r_max, p.alpha_r_max);
    }
  }
  return rep;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "max_lateral_error_m " << max_lateral_error << '\n'
     << "mean_lateral_error_m " << mean_lateral_error << '\n'
     << "max_abs_slip_rad " << max_abs_slip << '\n'
     << "max_abs_rollover_index " << max_abs_ri << '\n'
     << "mean_left_load_n " << mean_left_load << '\n'
     << "mean_right_load_n " << mean_right_load << '\n'
     << "mean_solve_ms " << mean_solve_ms << '\n'
     << "p95_solve_ms " << p95_solve_ms << '\n'
     << "max_solve_ms " << max_solve_ms << '\n'
     << "solver_failures " << solver_failures << '\n'
     << "state_violations " << state_violations << '\n'
     << "max_state_violation " << max_state_violation << '\n';
  return os.str();
}

void write_csv(const SimTrace& trace, std::ostream& os) {
  const bool vhs = trace.kind == ModelKind::Vhs;
  os << "time,";
  if (vhs)
    os << "x,psi,y,vy,r,phi,phidot,";
  else
    os << "v,r,phi,phidot,w1,w2,w3,w4,";
  os << "q1,d1,q2,d2,q3,d3,q4,d4,dq1,dd1,dq2,dd2,dq3,dd3,dq4,dd4,"
     << "alpha1,alpha2,alpha3,alpha4,fz1,fz2,fz3,fz4,ri,status,solve_ms\n";

  char buf[32];
  const auto put = [&](double v, char sep) {
    snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << sep;
  };
  for (const auto& row : trace.rows) {
    put(row.time, ',');
    if (vhs) {
      put(row.x_world, ',');
      put(row.psi, ',');
    }
    for (int i = 0; i < row.state.size(); ++i) put(row.state(i), ',');
    for (int i = 0; i < 4; ++i) {
      put(row.applied.torque[i], ',');
      put(row.applied.steering[i], ',');
    }
    for (int i = 0; i < 8; ++i) put(row.delta(i), ',');
    for (int i = 0; i < 4; ++i) put(row.alpha[i], ',');
    for (int i = 0; i < 4; ++i) put(row.f_z[i], ',');
    put(row.ri, ',');
    os << to_string(row.status) << ',';
    snprintf(buf, sizeof(buf), "%.17g", row.solve_ms);
    os << buf << '\n';
  }
}

}  // namespace latmpc
