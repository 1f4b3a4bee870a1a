#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latmpc/config.hpp"
#include "latmpc/sim.hpp"

namespace py = pybind11;
using namespace latmpc;

namespace {

TireParams make_dugoff(double c_alpha, double c_sigma, double mu_x, double mu_y) {
  TireParams p{c_alpha, c_sigma, mu_x, mu_y, TireModelKind::Dugoff, std::nullopt};
  p.validate();
  return p;
}

TireParams make_pacejka(double c_alpha, double c_sigma, double mu_x, double mu_y, double b,
                        double c, double e) {
  TireParams p{c_alpha, c_sigma, mu_x, mu_y, TireModelKind::Pacejka, PacejkaCoeffs{b, c, e}};
  p.validate();
  return p;
}

py::dict solution_to_dict(const QpSolution& sol) {
  py::dict out;
  out["z"] = sol.z;
  out["y_dual"] = sol.y_dual;
  out["status"] = std::string(to_string(sol.status));
  out["iterations"] = sol.iterations;
  out["primal_residual"] = sol.primal_residual;
  out["dual_residual"] = sol.dual_residual;
  out["solve_time_s"] = sol.solve_time_s;
  return out;
}

py::dict solve_qp_dense(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                        const Eigen::MatrixXd& a, const Eigen::VectorXd& l,
                        const Eigen::VectorXd& u, double eps, int max_iter, bool polish) {
  QuadraticProgram qp;
  qp.p = p.sparseView();
  qp.p.makeCompressed();
  qp.a = a.sparseView();
  qp.a.makeCompressed();
  if (a.size() == 0) qp.a.resize(0, q.size());  // unconstrained shorthand
  qp.q = q;
  qp.l = l;
  qp.u = u;
  SolverSettings settings;
  settings.eps_abs = eps;
  settings.eps_rel = eps;
  settings.max_iter = max_iter;
  settings.polish = polish;
  return solution_to_dict(solve_qp(qp, settings));
}

py::dict trace_to_dict(const SimTrace& trace, const VehicleParams& params) {
  const auto m = static_cast<long>(trace.rows.size());
  const int n_x = trace.kind == ModelKind::GeneralEv ? 8 : 5;
  Eigen::VectorXd time(m), ri(m), solve_ms(m), x_world(m), psi(m);
  Eigen::MatrixXd states(m, n_x), alpha(m, 4), f_z(m, 4), applied(m, 8), delta(m, 8);
  std::vector<std::string> status;
  status.reserve(trace.rows.size());
  for (long k = 0; k < m; ++k) {
    const auto& row = trace.rows[static_cast<size_t>(k)];
    time(k) = row.time;
    states.row(k) = row.state;
    x_world(k) = row.x_world;
    psi(k) = row.psi;
    for (int i = 0; i < 4; ++i) {
      alpha(k, i) = row.alpha[i];
      f_z(k, i) = row.f_z[i];
      applied(k, 2 * i) = row.applied.torque[i];
      applied(k, 2 * i + 1) = row.applied.steering[i];
    }
    delta.row(k) = row.delta;
    ri(k) = row.ri;
    solve_ms(k) = row.solve_ms;
    status.emplace_back(to_string(row.status));
  }

  const auto rep = metrics(trace, params);
  py::dict met;
  met["max_lateral_error"] = rep.max_lateral_error;
  met["mean_lateral_error"] = rep.mean_lateral_error;
  met["max_abs_slip"] = rep.max_abs_slip;
  met["max_abs_ri"] = rep.max_abs_ri;
  met["mean_left_load"] = rep.mean_left_load;
  met["mean_right_load"] = rep.mean_right_load;
  met["mean_solve_ms"] = rep.mean_solve_ms;
  met["p95_solve_ms"] = rep.p95_solve_ms;
  met["max_solve_ms"] = rep.max_solve_ms;
  met["solver_failures"] = rep.solver_failures;

  py::dict out;
  out["time"] = time;
  out["states"] = states;
  out["x_world"] = x_world;
  out["psi"] = psi;
  out["applied"] = applied;
  out["delta"] = delta;
  out["alpha"] = alpha;
  out["f_z"] = f_z;
  out["ri"] = ri;
  out["solve_ms"] = solve_ms;
  out["status"] = status;
  out["metrics"] = met;
  return out;
}

py::dict run_files(const std::string& params_path, const std::string& scenario_path,
                   const std::vector<std::string>& overrides) {
  Config pcfg = Config::load(params_path);
  Config scfg = Config::load(scenario_path);
  for (const auto& o : overrides) scfg.apply_override(o);
  const VehicleParams params = load_vehicle_params(pcfg);
  const Scenario scenario = load_scenario(scfg);
  const MpcConfig mpc = load_mpc_config(scfg, scenario.kind);
  const ActuatorConfig actuators = load_actuators(scfg, scenario.kind);
  return trace_to_dict(run_scenario(scenario, params, mpc, actuators), params);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lateral-stability MPC toolkit: tire models, vehicle models, QP solver, simulator";

  py::class_<TireParams>(m, "TireParams")
      .def_readonly("c_alpha", &TireParams::c_alpha)
      .def_readonly("c_sigma", &TireParams::c_sigma)
      .def_readonly("mu_x", &TireParams::mu_x)
      .def_readonly("mu_y", &TireParams::mu_y);
  m.def("dugoff_tire", &make_dugoff, py::arg("c_alpha"), py::arg("c_sigma"),
        py::arg("mu_x") = 1.0, py::arg("mu_y") = 1.0);
  m.def("pacejka_tire", &make_pacejka, py::arg("c_alpha"), py::arg("c_sigma"),
        py::arg("mu_x") = 1.0, py::arg("mu_y") = 1.0, py::arg("b") = 10.0, py::arg("c") = 1.9,
        py::arg("e") = 0.97);

  m.def(
      "slip_angle",
      [](int wheel, double steering, double v, double r, double u, double l_f, double l_r) {
        return slip_angle(wheel, steering, v, r, u, {l_f, l_r});
      },
      py::arg("wheel"), py::arg("steering"), py::arg("v"), py::arg("r"), py::arg("u"),
      py::arg("l_f"), py::arg("l_r"));
  m.def(
      "lateral_force",
      [](double alpha, double f_z, const TireParams& p, double sigma_x) {
        return lateral_force({alpha, f_z, sigma_x}, p);
      },
      py::arg("alpha"), py::arg("f_z"), py::arg("tire"), py::arg("sigma_x") = 0.0);
  m.def(
      "linearize_tire",
      [](double alpha, double f_z, const TireParams& p) {
        const auto lin = linearize_tire({alpha, f_z}, p);
        return py::make_tuple(lin.f_y, lin.c_alpha, lin.alpha);
      },
      py::arg("alpha"), py::arg("f_z"), py::arg("tire"),
      "Returns (f_y, c_alpha, alpha) of the tangent affine model");
  m.def("peak_longitudinal_force", &peak_longitudinal_force, py::arg("f_z0"), py::arg("f_y0"),
        py::arg("tire"));
  m.def("effective_radius", &effective_radius, py::arg("r_stat"), py::arg("r_w"));

  m.def("desired_yaw_rate", &desired_yaw_rate, py::arg("delta_d"), py::arg("u"),
        py::arg("wheelbase"), py::arg("k_usd"), py::arg("mu_y"), py::arg("g") = kGravity);
  m.def(
      "checkpoint_steering",
      [](double x_d, double y_d, double v_y, double u, double delta_max) {
        const auto t = checkpoint_steering({x_d, y_d}, v_y, u, delta_max);
        return py::make_tuple(t.psi_d, t.delta_d);
      },
      py::arg("x_d"), py::arg("y_d"), py::arg("v_y"), py::arg("u"), py::arg("delta_max"),
      "Returns (psi_d, delta_d)");
  m.def("desired_state_general", &desired_state_general, py::arg("u"), py::arg("r_d"),
        py::arg("r_eff"));
  m.def("desired_state_vhs", &desired_state_vhs, py::arg("y_d"), py::arg("r_d"));

  m.def("solve_qp", &solve_qp_dense, py::arg("p"), py::arg("q"), py::arg("a"), py::arg("l"),
        py::arg("u"), py::arg("eps") = 1e-6, py::arg("max_iter") = 50000,
        py::arg("polish") = true,
        "Solve min 1/2 z'Pz + q'z s.t. l <= Az <= u; returns a result dict");

  m.def("run_scenario", &run_files, py::arg("params_file"), py::arg("scenario_file"),
        py::arg("overrides") = std::vector<std::string>{},
        "Run a closed-loop scenario from config files; returns trace arrays and metrics");
}
