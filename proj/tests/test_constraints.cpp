#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "latmpc/constraints.hpp"
#include "test_fixtures.hpp"

using namespace latmpc;

TEST_CASE("rollover coefficients") {
  const GeneralEvParams p = test_ev_params();
  const auto [c1, c2] = rollover_coeffs(p);

  // scripted arithmetic check with h_R = h_cg - h_s = 0.15
  const double lever = 1590.0 * 0.15 + 270.0 * 0.2;
  const double ratio = 1.0 + lever / (1590.0 * 0.57);
  CHECK(c2 == doctest::Approx(2.0 * 6364.0 * ratio / (1860.0 * 9.81 * 1.575)).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(0.5858).epsilon(1e-4));
  CHECK(c1 ==
        doctest::Approx(2.0 / (1860.0 * 9.81 * 1.575) * (189506.0 * ratio - lever * 9.81))
            .epsilon(1e-12));

  SUBCASE("index is linear") {
    const double phi = 0.03, phi_dot = 0.2;
    const double ri = c1 * phi + c2 * phi_dot;
    CHECK(c1 * 2.0 * phi + c2 * 2.0 * phi_dot == doctest::Approx(2.0 * ri));
    CHECK(c1 * 0.0 + c2 * 0.0 == 0.0);
  }
}

TEST_CASE("slip speed bounds") {
  const auto [lo, hi] = slip_speed_bounds(22.222, 56.55, 0.393, 0.1);
  CHECK(lo == doctest::Approx(50.90).epsilon(1e-3));
  CHECK(hi == doctest::Approx(62.21).epsilon(1e-3));

  SUBCASE("degenerate band") {
    const auto [l0, h0] = slip_speed_bounds(22.222, 56.55, 0.393, 0.0);
    CHECK(l0 == doctest::Approx(22.222 / 0.393));
    CHECK(h0 == doctest::Approx(22.222 / 0.393));
  }

  SUBCASE("fast wheel widens the band") {
    const auto [l1, h1] = slip_speed_bounds(20.0, 80.0, 0.4, 0.1);
    CHECK(h1 == doctest::Approx(50.0 + 8.0));
    CHECK(l1 == doctest::Approx(50.0 - 8.0));
  }

  SUBCASE("band always brackets the nominal speed") {
    for (double w : {0.0, 30.0, 50.0, 56.0, 70.0, 120.0}) {
      const auto [l1, h1] = slip_speed_bounds(22.222, w, 0.393, 0.1);
      CHECK(l1 <= 22.222 / 0.393);
      CHECK(h1 >= 22.222 / 0.393);
      CHECK(l1 <= h1);
    }
  }
}

TEST_CASE("general EV state rows") {
  const GeneralEvParams p = test_ev_params();
  const auto cs = state_rows(p, 22.222, {53.0, 53.0, 53.0, 53.0});
  CHECK(cs.state_rows() == 7);
  CHECK_NOTHROW(cs.validate());

  // rollover rows bounded by the critical index
  CHECK(cs.x_lower(0) == -0.7);
  CHECK(cs.x_upper(0) == 0.7);
  // yaw rate row at mu g / u
  CHECK(cs.x_upper(1) == doctest::Approx(9.81 / 22.222));
  // rear slip row acts on (v, r) as (1/u, l_r/u)
  CHECK(cs.g_x(6, 0) == doctest::Approx(1.0 / 22.222));
  CHECK(cs.g_x(6, 1) == doctest::Approx(1.77 / 22.222));
  CHECK(cs.x_upper(6) == doctest::Approx(0.10471975511965977));
  for (bool soft : cs.x_soft) CHECK(soft);
  for (int i = 0; i < cs.state_rows(); ++i) CHECK(cs.x_lower(i) <= cs.x_upper(i));
}

TEST_CASE("VHS state rows") {
  const VhsParams p = test_vhs_params();
  const auto cs = state_rows(p, 50.0);
  CHECK(cs.state_rows() == 2);
  CHECK(cs.x_upper(0) == doctest::Approx(9.81 / 50.0));
  CHECK(cs.x_upper(1) == doctest::Approx(0.10471975511965977));
  CHECK(cs.g_x(1, 1) == doctest::Approx(1.0 / 50.0));
  CHECK(cs.g_x(1, 2) == doctest::Approx(1.3152 / 50.0));
  CHECK(cs.g_x(1, 0) == 0.0);
}

TEST_CASE("input rows") {
  const GeneralEvParams p = test_ev_params();
  DriverCommand w0;
  w0.torque = {0.0, 0.0, 100.0, 100.0};
  const std::array<double, 4> f_z{4561.65, 4561.65, 4561.65, 4561.65};
  const std::array<double, 4> f_y{0.0, 0.0, 0.0, 0.0};

  SUBCASE("torque band trails the driver command") {
    const auto cs = input_rows(w0, f_z, f_y, p, ActuatorConfig{});
    CHECK(cs.input_rows() == 12);
    // rear-left wheel: Q(0) = 100, limits +-1600
    CHECK(cs.u_lower(6) == doctest::Approx(-1700.0));
    CHECK(cs.u_upper(6) == doctest::Approx(1500.0));
  }

  SUBCASE("friction band converts capacity to torque") {
    const auto cs = input_rows(w0, f_z, f_y, p, ActuatorConfig{});
    const double cap = 0.393 * 4561.65;  // unconstrained ellipse at f_y = 0
    CHECK(cs.u_upper(1) == doctest::Approx(cap));
    CHECK(cs.u_lower(1) == doctest::Approx(-cap));
    CHECK(cs.u_upper(7) == doctest::Approx(cap - 100.0));
  }

  SUBCASE("steering band") {
    VhsParams dallara = test_vhs_params();
    DriverCommand zero;
    const auto cs = input_rows(zero, f_z, f_y, dallara, ActuatorConfig::vhs());
    CHECK(cs.u_lower(2) == doctest::Approx(-0.1));
    CHECK(cs.u_upper(2) == doctest::Approx(0.1));
  }

  SUBCASE("disabled actuators collapse to zero") {
    const auto cs = input_rows(w0, f_z, f_y, p, ActuatorConfig::torque_vectoring());
    for (int i = 0; i < 4; ++i) {
      CHECK(cs.u_lower(3 * i + 2) == 0.0);
      CHECK(cs.u_upper(3 * i + 2) == 0.0);
    }
  }

  SUBCASE("all-disabled admits only zero") {
    ActuatorConfig none{{false, false, false, false}, {false, false, false, false}};
    DriverCommand zero;
    const auto cs = input_rows(zero, f_z, f_y, p, none);
    for (int i = 0; i < cs.input_rows(); ++i) {
      CHECK(cs.u_lower(i) == 0.0);
      CHECK(cs.u_upper(i) == 0.0);
    }
  }

  SUBCASE("zero delta feasible under a legal driver command") {
    const auto cs = input_rows(w0, f_z, f_y, p, ActuatorConfig{});
    for (int i = 0; i < cs.input_rows(); ++i) {
      CHECK(cs.u_lower(i) <= 0.0);
      CHECK(cs.u_upper(i) >= 0.0);
    }
  }

  SUBCASE("saturated tire rejects the ellipse") {
    const std::array<double, 4> f_y_bad{5000.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(input_rows(w0, f_z, f_y_bad, p, ActuatorConfig{}), std::domain_error);
  }

  SUBCASE("lifted wheel pins its torque delta") {
    DriverCommand zero;
    const std::array<double, 4> lifted{0.0, 4561.65, 4561.65, 4561.65};
    const auto cs = input_rows(zero, lifted, f_y, p, ActuatorConfig{});
    CHECK(cs.u_lower(1) == 0.0);  // friction row of wheel 1
    CHECK(cs.u_upper(1) == 0.0);
    CHECK(cs.u_upper(4) > 0.0);   // the others keep capacity
  }

  SUBCASE("row-wise ordering always holds") {
    const auto cs = input_rows(w0, f_z, f_y, p, ActuatorConfig::vhs());
    CHECK_NOTHROW(cs.validate());
  }
}

TEST_CASE("constraint set merge") {
  const GeneralEvParams p = test_ev_params();
  auto cs = state_rows(p, 22.222, {53.0, 53.0, 53.0, 53.0});
  DriverCommand w0;
  cs.merge(input_rows(w0, {4000, 4000, 4000, 4000}, {0, 0, 0, 0}, p, ActuatorConfig{}));
  CHECK(cs.state_rows() == 7);
  CHECK(cs.input_rows() == 12);
  CHECK_NOTHROW(cs.validate());
}
