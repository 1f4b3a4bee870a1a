// Command line front end: closed-loop simulation runs, a solver benchmark,
// and a linearization / model inspector for offline checks.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "latmpc/config.hpp"
#include "latmpc/sim.hpp"

namespace fs = std::filesystem;
using namespace latmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct LoadedScenario {
  Scenario scenario;
  MpcConfig mpc;
  ActuatorConfig actuators;
};

LoadedScenario load_scenario_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  Config cfg = Config::load(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  LoadedScenario out;
  out.scenario = load_scenario(cfg);
  out.mpc = load_mpc_config(cfg, out.scenario.kind);
  out.actuators = load_actuators(cfg, out.scenario.kind);
  return out;
}

VehicleParams load_params_file(const std::string& path,
                               const std::vector<std::string>& overrides) {
  Config cfg = Config::load(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return load_vehicle_params(cfg);
}

void print_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      snprintf(buf, sizeof(buf), "%.12g", m(i, j));
      os << buf << (j + 1 < m.cols() ? " " : "");
    }
    os << '\n';
  }
}

int run_simulate(const std::string& params_path, const std::vector<std::string>& scenario_paths,
                 const std::string& out_dir, const std::vector<std::string>& overrides,
                 bool parallel) {
  // route each override to the file that owns its section
  std::vector<std::string> vehicle_overrides, scenario_overrides;
  for (const auto& o : overrides) {
    if (o.rfind("vehicle.", 0) == 0 || o.rfind("tire.", 0) == 0)
      vehicle_overrides.push_back(o);
    else
      scenario_overrides.push_back(o);
  }
  const VehicleParams params = load_params_file(params_path, vehicle_overrides);

  std::vector<LoadedScenario> runs;
  for (const auto& path : scenario_paths)
    runs.push_back(load_scenario_file(path, scenario_overrides));
  fs::create_directories(out_dir);

  std::vector<SimTrace> traces(runs.size());
  const auto execute = [&](size_t i) {
    traces[i] = run_scenario(runs[i].scenario, params, runs[i].mpc, runs[i].actuators);
  };
  if (parallel && runs.size() > 1) {
    std::vector<std::thread> workers;
    for (size_t i = 0; i < runs.size(); ++i) workers.emplace_back(execute, i);
    for (auto& w : workers) w.join();
  } else {
    for (size_t i = 0; i < runs.size(); ++i) execute(i);
  }

  for (size_t i = 0; i < runs.size(); ++i) {
    const auto& name = runs[i].scenario.name;
    const fs::path csv_path = fs::path(out_dir) / (name + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) {
      std::cerr << "cannot write " << csv_path << '\n';
      return kExitRuntime;
    }
    write_csv(traces[i], csv);

    const auto rep = metrics(traces[i], params);
    std::ofstream met(fs::path(out_dir) / (name + "_metrics.txt"));
    met << rep.to_text();
    std::cout << name << ": " << traces[i].rows.size() << " steps, mean solve "
              << rep.mean_solve_ms << " ms, max |alpha| " << rep.max_abs_slip << " rad\n";
    if (rep.solver_failures > 0)
      std::cout << "  note: " << rep.solver_failures << " steps with degraded solves\n";
  }
  return kExitOk;
}

int run_benchmark(const std::string& params_path, const std::string& scenario_path, int reps,
                  const std::vector<std::string>& overrides) {
  const VehicleParams params = load_params_file(params_path, {});
  LoadedScenario run = load_scenario_file(scenario_path, overrides);
  run.scenario.steps = reps;
  const auto trace = run_scenario(run.scenario, params, run.mpc, run.actuators);
  const auto rep = metrics(trace, params);
  std::cout << "scenario " << run.scenario.name << '\n'
            << "steps " << trace.rows.size() << '\n'
            << "mean_solve_ms " << rep.mean_solve_ms << '\n'
            << "p95_solve_ms " << rep.p95_solve_ms << '\n'
            << "max_solve_ms " << rep.max_solve_ms << '\n';
  return kExitOk;
}

int run_inspect(const std::string& params_path, const std::vector<double>& state_in,
                const std::vector<double>& steering_in, double u, double phi_r,
                const std::string& out_path) {
  const VehicleParams params = load_params_file(params_path, {});
  const bool is_ev = std::holds_alternative<GeneralEvParams>(params);
  const int n_x = is_ev ? 8 : 5;

  Eigen::VectorXd state = Eigen::VectorXd::Zero(n_x);
  for (size_t i = 0; i < state_in.size() && i < static_cast<size_t>(n_x); ++i)
    state(static_cast<long>(i)) = state_in[i];
  DriverCommand w0;
  for (size_t i = 0; i < steering_in.size() && i < 4; ++i) w0.steering[i] = steering_in[i];

  const double v = is_ev ? state(0) : state(1);
  const double r = is_ev ? state(1) : state(2);
  const double phi = is_ev ? state(2) : state(3);
  const double phi_dot = is_ev ? state(3) : state(4);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "cannot write " << out_path << '\n';
      return kExitRuntime;
    }
    os = &file;
  }

  const auto report = [&](const auto& p, const VehicleModel& model,
                          const std::array<TireLinearization, 4>& lin) {
    (void)p;
    for (int i = 0; i < 4; ++i)
      *os << "wheel " << i + 1 << ": alpha " << lin[i].alpha << " f_y " << lin[i].f_y
          << " c_alpha " << lin[i].c_alpha << '\n';
    print_matrix(*os, "A", model.a);
    print_matrix(*os, "B", model.b);
    print_matrix(*os, "E", model.e);
    print_matrix(*os, "D", model.d);
    print_matrix(*os, "C_phi", model.c_phi);
  };

  if (is_ev) {
    const auto& p = std::get<GeneralEvParams>(params);
    const auto f_z = normal_loads(p, phi, phi_dot, phi_r);
    std::array<TireLinearization, 4> lin;
    for (int i = 0; i < 4; ++i) {
      const double a = slip_angle(i + 1, w0.steering[i], v, r, u, p.geometry());
      lin[i] = linearize_tire({a, f_z[i]}, p.tire);
    }
    report(p, assemble_general(p, u, lin, w0, ActuatorConfig::torque_vectoring()), lin);
  } else {
    auto p = std::get<VhsParams>(params);
    p.phi_r = phi_r;
    const auto f_z = normal_loads(p, phi, phi_dot, phi_r);
    std::array<TireLinearization, 4> lin;
    for (int i = 0; i < 4; ++i) {
      const double a = slip_angle(i + 1, w0.steering[i], v, r, u, p.geometry());
      lin[i] = linearize_tire({a, f_z[i]}, p.tire);
    }
    report(p, assemble_vhs(p, u, lin, w0, ActuatorConfig::vhs()), lin);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle lateral-stability MPC toolkit"};
  app.require_subcommand(1);

  std::string params_path, out_dir = "out", out_path;
  std::vector<std::string> scenario_paths, overrides;
  std::vector<double> state_in, steering_in;
  double u = 20.0, phi_r = 0.0;
  int reps = 500;
  bool parallel = false;

  auto* sim = app.add_subcommand("simulate", "Run closed-loop scenarios and write traces");
  sim->add_option("--params", params_path, "vehicle parameter file")->required();
  sim->add_option("--scenario", scenario_paths, "scenario file (repeatable)")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--set", overrides, "override section.key=value (repeatable)");
  sim->add_flag("--parallel", parallel, "run scenarios concurrently");

  auto* bench = app.add_subcommand("benchmark", "Closed-loop solver timing");
  bench->add_option("--params", params_path, "vehicle parameter file")->required();
  bench->add_option("--scenario", scenario_paths, "scenario file")->required();
  bench->add_option("--reps", reps, "number of closed-loop steps");
  bench->add_option("--set", overrides, "override section.key=value (repeatable)");

  auto* inspect = app.add_subcommand("inspect", "Print tire linearizations and model matrices");
  inspect->add_option("--params", params_path, "vehicle parameter file")->required();
  inspect->add_option("--state", state_in, "model state values");
  inspect->add_option("--steering", steering_in, "per-wheel steering angles");
  inspect->add_option("--u", u, "longitudinal speed");
  inspect->add_option("--phi-r", phi_r, "road banking angle");
  inspect->add_option("--out", out_path, "write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(params_path, scenario_paths, out_dir, overrides, parallel);
    if (bench->parsed()) {
      if (scenario_paths.size() != 1) {
        std::cerr << "benchmark expects exactly one scenario\n";
        return kExitConfig;
      }
      return run_benchmark(params_path, scenario_paths[0], reps, overrides);
    }
    if (inspect->parsed()) return run_inspect(params_path, state_in, steering_in, u, phi_r, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
