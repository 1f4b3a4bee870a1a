#pragma once

#include "latmpc/vehicle.hpp"

// Table-valued parameter sets used across the suites.

inline latmpc::GeneralEvParams test_ev_params() {
  latmpc::GeneralEvParams p;
  p.m_s = 1590.0;
  p.m_u = 270.0;
  p.m = 1860.0;
  p.l_f = 1.18;
  p.l_r = 1.77;
  p.t_f = p.t_r = 1.575;
  p.h_s = 0.57;
  p.h_u = 0.2;
  p.h_cg = 0.72;
  p.i_xx = 894.4;
  p.i_zz = 2687.1;
  p.k_phi = 189506.0;
  p.c_phi = 6364.0;
  p.r_eff = 0.393;
  p.i_w = 1.1;
  p.tire = {47275.0, 80000.0, 1.0, 1.0, latmpc::TireModelKind::Dugoff, std::nullopt};
  p.q_max = 1600.0;
  p.q_min = -1600.0;
  p.delta_max = 1.0;
  p.k_usd = 0.4;
  p.ri_c = 0.7;
  p.alpha_r_max = 0.10471975511965977;
  p.lambda_max = 0.1;
  return p;
}

inline latmpc::VhsParams test_vhs_params() {
  latmpc::VhsParams p;
  p.m = 803.182;
  p.m_s = 672.2;
  p.m_f = 355.45;
  p.l_f = 1.6566;
  p.l_r = 1.3152;
  p.i_xx = 200.0;
  p.i_zz = 1200.0;
  p.h_s = 0.1;
  p.k_s = 10000.0;
  p.b_s = 1000.0;
  p.l_s = 1.0;
  p.t_f = p.t_r = 1.581;
  p.r_eff = 0.29;
  p.tire = {8000.0, 10000.0, 1.0, 1.0, latmpc::TireModelKind::Dugoff, std::nullopt};
  p.delta_max = 0.1;
  p.q_max = 2000.0;
  p.q_min = -2000.0;
  p.k_usd = 0.4;
  p.alpha_r_max = 0.10471975511965977;
  return p;
}
