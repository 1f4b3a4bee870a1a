#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>
#include <sstream>

#include "latmpc/mpc.hpp"
#include "latmpc/sim.hpp"
#include "test_fixtures.hpp"

using namespace latmpc;

namespace {

// minimal affine model with n_x states and the usual 8 input channels
VehicleModel toy_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::VectorXd& d = {}) {
  VehicleModel m;
  m.n_x = static_cast<int>(a.rows());
  m.a = a;
  m.b = Eigen::MatrixXd::Zero(m.n_x, 8);
  m.b.leftCols(b.cols()) = b;
  m.e = Eigen::MatrixXd::Zero(m.n_x, 8);
  m.d = d.size() ? d : Eigen::VectorXd::Zero(m.n_x);
  m.c_phi = Eigen::VectorXd::Zero(m.n_x);
  return m;
}

ConstraintSet box_inputs(int n_x, const std::vector<int>& channels, double bound) {
  ConstraintSet cs;
  cs.g_x.resize(0, n_x);
  cs.x_lower.resize(0);
  cs.x_upper.resize(0);
  cs.g_u = Eigen::MatrixXd::Zero(static_cast<int>(channels.size()), 8);
  cs.u_lower = Eigen::VectorXd::Constant(static_cast<long>(channels.size()), -bound);
  cs.u_upper = Eigen::VectorXd::Constant(static_cast<long>(channels.size()), bound);
  for (size_t i = 0; i < channels.size(); ++i) cs.g_u(static_cast<int>(i), channels[i]) = 1.0;
  return cs;
}

MpcConfig toy_config(int n_x, int horizon, double q, double r, double t_s = 0.1) {
  MpcConfig cfg;
  cfg.horizon = horizon;
  cfg.t_s = t_s;
  cfg.state_weights = Eigen::VectorXd::Constant(n_x, q);
  cfg.input_weights = Eigen::VectorXd::Constant(8, r);
  cfg.slack_weight = 1.0;
  cfg.solver.eps_abs = 1e-9;
  cfg.solver.eps_rel = 1e-9;
  cfg.solver.max_iter = 200000;
  cfg.solver.polish = true;
  return cfg;
}

}  // namespace

TEST_CASE("zero-order hold discretization") {
  SUBCASE("pure integrator") {
    const auto m = toy_model(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2));
    const auto d = discretize(m, 0.25);
    CHECK(d.a.isIdentity(1e-14));
    CHECK((d.b.leftCols(2) - 0.25 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <=
          1e-14);
  }

  SUBCASE("scalar exponential") {
    const auto m = toy_model(Eigen::MatrixXd::Constant(1, 1, -1.0),
                             Eigen::MatrixXd::Constant(1, 1, 1.0));
    const auto d = discretize(m, 0.1);
    CHECK(d.a(0, 0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
    CHECK(d.a(0, 0) == doctest::Approx(0.904837).epsilon(1e-6));
  }

  SUBCASE("matches a 1000-substep RK4 reference on the assembled model") {
    const GeneralEvParams p = test_ev_params();
    std::array<TireLinearization, 4> lin;
    for (auto& l : lin) l = {150.0, 45000.0, 0.01};
    DriverCommand w0;
    w0.torque = {0.0, 0.0, 100.0, 100.0};
    w0.steering = {0.02, 0.02, 0.0, 0.0};
    const auto model = assemble_general(p, 22.222, lin, w0, ActuatorConfig{});
    const auto d = discretize(model, 0.1);

    Eigen::VectorXd x0(8);
    x0 << 0.3, 0.05, 0.01, -0.02, 53.0, 53.5, 52.8, 53.1;
    ControlDelta delta = ControlDelta::Zero();
    delta(0) = 40.0;
    delta(3) = 0.01;

    const Eigen::VectorXd zoh = d.a * x0 + d.b * delta + d.e * w0.stacked() + d.d;
    const Eigen::VectorXd fine = rk4_step(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return model.a * x + model.b * delta + model.e * w0.stacked() + model.d;
        },
        x0, 0.1, 1000);
    CHECK((zoh - fine).lpNorm<Eigen::Infinity>() <= 1e-9);
  }

  SUBCASE("rejects a nonpositive step") {
    const auto m = toy_model(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1));
    CHECK_THROWS_AS(discretize(m, 0.0), std::domain_error);
  }
}

TEST_CASE("condensed CFTOC, one-step scalar") {
  // x1 = a x0 + b u, cost (x1 - xd)^2 + u^2, unconstrained:
  // u* = b (xd - a x0) / (b^2 + 1)
  const double a = 0.9, b = 0.5, x0v = 2.0, xd = 1.0;
  DiscreteModel dm;
  dm.n_x = 1;
  dm.a = Eigen::MatrixXd::Constant(1, 1, a);
  dm.b = Eigen::MatrixXd::Zero(1, 8);
  dm.b(0, 0) = b;
  dm.e = Eigen::MatrixXd::Zero(1, 8);
  dm.d = Eigen::VectorXd::Zero(1);
  dm.c_phi = Eigen::VectorXd::Zero(1);
  dm.t_s = 0.1;

  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, x0v);
  Eigen::VectorXd x_d = Eigen::VectorXd::Constant(1, xd);
  const auto cs = box_inputs(1, {0}, 1e9);
  const auto cfg = toy_config(1, 1, 1.0, 1.0);

  const auto cftoc = build_cftoc(dm, x0, DriverCommand{}, 0.0, x_d, cs, cfg);
  const auto sol = solve_qp(cftoc.qp, cfg.solver);
  REQUIRE(sol.status == QpStatus::Solved);
  const double expected = b * (xd - a * x0v) / (b * b + 1.0);
  CHECK(cftoc.first_input(sol.z)(0) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(cftoc.predicted_states(sol.z)(0, 0) ==
        doctest::Approx(a * x0v + b * expected).epsilon(1e-7));
}

TEST_CASE("zero state weights give zero input") {
  DiscreteModel dm;
  dm.n_x = 2;
  dm.a = Eigen::MatrixXd::Identity(2, 2) * 0.8;
  dm.b = Eigen::MatrixXd::Zero(2, 8);
  dm.b(0, 0) = 1.0;
  dm.b(1, 1) = 0.7;
  dm.e = Eigen::MatrixXd::Zero(2, 8);
  dm.d = Eigen::VectorXd::Zero(2);
  dm.c_phi = Eigen::VectorXd::Zero(2);
  dm.t_s = 0.1;

  const auto cs = box_inputs(2, {0, 1}, 5.0);
  const auto cfg = toy_config(2, 4, 0.0, 1.0);
  const auto cftoc = build_cftoc(dm, Eigen::VectorXd::Ones(2), DriverCommand{}, 0.0,
                                 Eigen::VectorXd::Zero(2), cs, cfg);
  const auto sol = solve_qp(cftoc.qp, cfg.solver);
  REQUIRE(sol.status == QpStatus::Solved);
  CHECK(cftoc.first_input(sol.z).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("condensed cost matrix is symmetric PSD") {
  const GeneralEvParams p = test_ev_params();
  std::array<TireLinearization, 4> lin;
  for (auto& l : lin) l = {0.0, 47275.0, 0.0};
  DriverCommand w0;
  w0.torque = {0.0, 0.0, 100.0, 100.0};
  const auto model = assemble_general(p, 22.222, lin, w0, ActuatorConfig::torque_vectoring());
  const auto dm = discretize(model, 0.1);

  auto cs = state_rows(p, 22.222, {53, 53, 53, 53});
  cs.merge(input_rows(w0, {4561, 4561, 4561, 4561}, {0, 0, 0, 0}, p,
                      ActuatorConfig::torque_vectoring()));

  MpcConfig cfg = toy_config(8, 10, 1.0, 1e-4);
  cfg.state_weights << 1, 100, 10, 10, 0.01, 0.01, 0.01, 0.01;
  const auto cftoc = build_cftoc(dm, Eigen::VectorXd::Zero(8), w0, 0.0,
                                 desired_state_general(22.222, 0.0166, p.r_eff), cs, cfg);

  const Eigen::MatrixXd p_dense(cftoc.qp.p);
  CHECK((p_dense - p_dense.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p_dense)
                                  .eigenvalues();
  CHECK(eig.minCoeff() >= -1e-9);
}

TEST_CASE("condensed and sparse formulations agree") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const int n_x = 2 + static_cast<int>(rng() % 3);
    const int horizon = 2 + static_cast<int>(rng() % 9);  // N <= 10

    Eigen::MatrixXd a(n_x, n_x);
    for (int i = 0; i < n_x; ++i)
      for (int j = 0; j < n_x; ++j) a(i, j) = unit(rng);
    a *= 0.9 / std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());

    const int n_ch = 1 + static_cast<int>(rng() % 3);
    std::vector<int> channels;
    for (int c = 0; c < n_ch; ++c) channels.push_back(2 * c + static_cast<int>(rng() % 2));
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_x, 8);
    for (int c : channels)
      for (int i = 0; i < n_x; ++i) b(i, c) = unit(rng);

    DiscreteModel dm;
    dm.n_x = n_x;
    dm.a = a;
    dm.b = b;
    dm.e = Eigen::MatrixXd::Zero(n_x, 8);
    for (int i = 0; i < n_x; ++i) dm.e(i, 0) = 0.1 * unit(rng);
    dm.d = 0.1 * Eigen::VectorXd::NullaryExpr(n_x, [&](int) { return unit(rng); });
    dm.c_phi = Eigen::VectorXd::Zero(n_x);
    dm.t_s = 0.1;

    ConstraintSet cs;
    cs.g_x = Eigen::MatrixXd::Zero(1, n_x);
    for (int j = 0; j < n_x; ++j) cs.g_x(0, j) = unit(rng);
    cs.x_lower = Eigen::VectorXd::Constant(1, -0.4 - std::abs(unit(rng)));
    cs.x_upper = Eigen::VectorXd::Constant(1, 0.4 + std::abs(unit(rng)));
    cs.x_soft = {true};
    cs.g_u = Eigen::MatrixXd::Zero(static_cast<int>(channels.size()), 8);
    cs.u_lower.resize(static_cast<long>(channels.size()));
    cs.u_upper.resize(static_cast<long>(channels.size()));
    for (size_t i = 0; i < channels.size(); ++i) {
      cs.g_u(static_cast<int>(i), channels[i]) = 1.0;
      const double bound = 0.2 + std::abs(unit(rng));
      cs.u_lower(static_cast<long>(i)) = -bound;
      cs.u_upper(static_cast<long>(i)) = bound;
    }

    MpcConfig cfg = toy_config(n_x, horizon, 0.0, 0.0);
    for (int i = 0; i < n_x; ++i) cfg.state_weights(i) = 0.2 + std::abs(unit(rng));
    cfg.input_weights.setConstant(0.5);
    cfg.slack_weight = 10.0;

    Eigen::VectorXd x0 = 0.5 * Eigen::VectorXd::NullaryExpr(n_x, [&](int) { return unit(rng); });
    Eigen::VectorXd x_d = 0.5 * Eigen::VectorXd::NullaryExpr(n_x, [&](int) { return unit(rng); });
    DriverCommand w0;
    w0.torque[0] = unit(rng);

    const auto cond = build_cftoc(dm, x0, w0, 0.0, x_d, cs, cfg);
    const auto sparse = build_cftoc_sparse(dm, x0, w0, 0.0, x_d, cs, cfg);
    const auto sol_c = solve_qp(cond.qp, cfg.solver);
    const auto sol_s = solve_qp(sparse.qp, cfg.solver);
    REQUIRE(sol_c.status == QpStatus::Solved);
    REQUIRE(sol_s.status == QpStatus::Solved);
    const ControlDelta u_c = cond.first_input(sol_c.z);
    const ControlDelta u_s = sparse.first_input(sol_s.z);
    CHECK((u_c - u_s).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("controller QP round-trips through the triplet format") {
  const VhsParams p = test_vhs_params();
  std::array<TireLinearization, 4> lin;
  for (auto& l : lin) l = {50.0, 7950.0, 0.006};
  DriverCommand w0;
  const auto model = assemble_vhs(p, 50.0, lin, w0, ActuatorConfig::vhs());
  const auto dm = discretize(model, 0.05);

  auto cs = state_rows(p, 50.0);
  cs.merge(input_rows(w0, {1970, 1970, 1970, 1970}, {50, 50, 50, 50}, p,
                      ActuatorConfig::vhs()));
  MpcConfig cfg = toy_config(5, 8, 1.0, 0.5, 0.05);
  cfg.state_weights << 10, 1, 50, 20, 20;

  Eigen::VectorXd x0(5);
  x0 << 0.2, -0.4, 0.02, 0.001, -0.01;
  const auto cftoc = build_cftoc(dm, x0, w0, 0.0, desired_state_vhs(-3.0, -0.001), cs, cfg);

  std::stringstream ss;
  dump_qp(cftoc.qp, ss);
  const auto back = load_qp(ss);
  const auto sol_a = solve_qp(cftoc.qp, cfg.solver);
  const auto sol_b = solve_qp(back, cfg.solver);
  REQUIRE(sol_a.status == QpStatus::Solved);
  REQUIRE(sol_b.status == QpStatus::Solved);
  CHECK(sol_a.z == sol_b.z);  // identical inputs, identical arithmetic
}

TEST_CASE("controller step") {
  const GeneralEvParams p = test_ev_params();
  MpcConfig cfg;
  cfg.horizon = 10;
  cfg.t_s = 0.1;
  cfg.state_weights.resize(8);
  cfg.state_weights << 1, 100, 10, 10, 0.01, 0.01, 0.01, 0.01;
  cfg.input_weights.resize(8);
  for (int i = 0; i < 4; ++i) {
    cfg.input_weights(2 * i) = 1e-4;
    cfg.input_weights(2 * i + 1) = 10.0;
  }
  cfg.slack_weight = 0.1;

  SUBCASE("already at the target does nothing") {
    MpcController mpc(p, cfg, ActuatorConfig::torque_vectoring(), 22.222);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    x0.tail(4).setConstant(22.222 / p.r_eff);
    const auto res = mpc.step(x0, EvDriverInput{DriverCommand{}, 0.0});
    CHECK(res.qp_solution.status == QpStatus::Solved);
    CHECK(res.u_apply.lpNorm<Eigen::Infinity>() <= 1e-6);
  }

  SUBCASE("step steer produces a left-right torque differential") {
    MpcController mpc(p, cfg, ActuatorConfig::torque_vectoring(), 22.222222);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    x0.tail(4).setConstant(53.0);
    DriverCommand w0;
    w0.torque = {0.0, 0.0, 100.0, 100.0};
    const auto res = mpc.step(x0, EvDriverInput{w0, 0.15});
    REQUIRE(res.qp_solution.status == QpStatus::Solved);
    CHECK(res.r_desired == doctest::Approx(0.016628).epsilon(1e-3));
    // positive yaw request: right wheels push harder than left
    CHECK(res.u_apply(2) - res.u_apply(0) > 1e-3);
    CHECK(res.u_apply(6) - res.u_apply(4) > 1e-3);
    // steering stays masked
    for (int i = 0; i < 4; ++i) CHECK(res.u_apply(2 * i + 1) == 0.0);
  }

  SUBCASE("identical controllers stay bitwise identical across steps") {
    MpcController a(p, cfg, ActuatorConfig::torque_vectoring(), 22.222);
    MpcController b(p, cfg, ActuatorConfig::torque_vectoring(), 22.222);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
    x.tail(4).setConstant(53.0);
    DriverCommand w0;
    w0.torque = {0.0, 0.0, 100.0, 100.0};
    for (int k = 0; k < 3; ++k) {
      const auto ra = a.step(x, EvDriverInput{w0, 0.15});
      const auto rb = b.step(x, EvDriverInput{w0, 0.15});
      CHECK(ra.u_apply == rb.u_apply);
      x(1) += 0.01;  // move the measurement between steps
    }
  }

  SUBCASE("hard input bands hold exactly") {
    MpcController mpc(p, cfg, ActuatorConfig::torque_vectoring(), 22.222);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    x0.tail(4).setConstant(53.0);
    DriverCommand w0;
    w0.torque = {0.0, 0.0, 100.0, 100.0};
    const auto res = mpc.step(x0, EvDriverInput{w0, 0.5});
    for (int i = 0; i < 4; ++i) {
      CHECK(res.u_apply(2 * i) >= p.q_min - w0.torque[i]);
      CHECK(res.u_apply(2 * i) <= p.q_max - w0.torque[i]);
    }
  }

  SUBCASE("NaN measurement is rejected") {
    MpcController mpc(p, cfg, ActuatorConfig::torque_vectoring(), 22.222);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    x0(3) = std::nan("");
    CHECK_THROWS_AS(mpc.step(x0, EvDriverInput{DriverCommand{}, 0.0}), std::invalid_argument);
  }
}

TEST_CASE("VHS controller step") {
  const VhsParams p = test_vhs_params();
  MpcConfig cfg;
  cfg.horizon = 20;
  cfg.t_s = 0.05;
  cfg.state_weights.resize(5);
  cfg.state_weights << 10, 1, 50, 20, 20;
  cfg.input_weights.resize(8);
  for (int i = 0; i < 4; ++i) {
    cfg.input_weights(2 * i) = 1e-4;
    cfg.input_weights(2 * i + 1) = 10.0;
  }
  cfg.slack_weight = 1e5;

  MpcController mpc(p, cfg, ActuatorConfig::vhs(), 50.0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  VhsDriverInput driver;
  driver.local_cp = {150.0, -3.0};
  driver.y_world = -3.0;
  const auto res = mpc.step(x0, driver);
  REQUIRE(res.qp_solution.status == QpStatus::Solved);
  // masked channels stay zero, enabled ones respect the bands
  CHECK(res.u_apply(0) == 0.0);
  CHECK(res.u_apply(2) == 0.0);
  CHECK(res.u_apply(5) == 0.0);
  CHECK(res.u_apply(7) == 0.0);
  CHECK(std::abs(res.u_apply(1)) <= p.delta_max + 1e-12);
  CHECK(std::abs(res.u_apply(3)) <= p.delta_max + 1e-12);
  // the plan moves the lateral position toward the checkpoint
  const int last = res.predicted_states.rows() - 1;
  CHECK(res.predicted_states(last, 0) < res.predicted_states(0, 0));
  CHECK(res.predicted_states(last, 0) < -0.05);
}
