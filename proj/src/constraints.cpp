#include "latmpc/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latmpc {

void ConstraintSet::merge(const ConstraintSet& other) {
  const auto vcat = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
  };
  if (other.g_x.rows() > 0) {
    if (g_x.rows() == 0) {
      g_x = other.g_x;
      x_lower = other.x_lower;
      x_upper = other.x_upper;
      x_soft = other.x_soft;
    } else {
      if (g_x.cols() != other.g_x.cols())
        throw std::invalid_argument("ConstraintSet::merge: state column mismatch");
      Eigen::MatrixXd g(g_x.rows() + other.g_x.rows(), g_x.cols());
      g << g_x, other.g_x;
      g_x = g;
      x_lower = vcat(x_lower, other.x_lower);
      x_upper = vcat(x_upper, other.x_upper);
      x_soft.insert(x_soft.end(), other.x_soft.begin(), other.x_soft.end());
    }
  }
  if (other.g_u.rows() > 0) {
    if (g_u.rows() == 0) {
      g_u = other.g_u;
      u_lower = other.u_lower;
      u_upper = other.u_upper;
    } else {
      Eigen::MatrixXd g(g_u.rows() + other.g_u.rows(), 8);
      g << g_u, other.g_u;
      g_u = g;
      u_lower = vcat(u_lower, other.u_lower);
      u_upper = vcat(u_upper, other.u_upper);
    }
  }
}

void ConstraintSet::validate() const {
  if (static_cast<int>(x_soft.size()) != state_rows())
    throw std::invalid_argument("ConstraintSet: soft flag count mismatch");
  for (int i = 0; i < state_rows(); ++i)
    if (!(x_lower(i) <= x_upper(i)))
      throw std::invalid_argument("ConstraintSet: state row with lower > upper");
  for (int i = 0; i < input_rows(); ++i)
    if (!(u_lower(i) <= u_upper(i)))
      throw std::invalid_argument("ConstraintSet: input row with lower > upper");
}

std::pair<double, double> rollover_coeffs(const GeneralEvParams& p) {
  const double t = p.t_f;  // track width T
  const double lever = p.m_s * p.h_roll_center() + p.m_u * p.h_u;
  const double ratio = 1.0 + lever / (p.m_s * p.h_s);
  const double c1 = 2.0 / (p.m * kGravity * t) * (p.k_phi * ratio - lever * kGravity);
  const double c2 = 2.0 * p.c_phi / (p.m * kGravity * t) * ratio;
  return {c1, c2};
}

std::pair<double, double> slip_speed_bounds(double u, double omega, double r_eff,
                                            double lambda_max) {
  if (!(u > 0.0)) throw std::domain_error("slip_speed_bounds: u must be > 0");
  const double nominal = u / r_eff;
  const double band = lambda_max * std::max(nominal, omega);
  return {nominal - band, nominal + band};
}

ConstraintSet state_rows(const GeneralEvParams& p, double u,
                         const std::array<double, 4>& omega) {
  ConstraintSet cs;
  cs.g_x = Eigen::MatrixXd::Zero(7, 8);
  cs.x_lower = Eigen::VectorXd::Zero(7);
  cs.x_upper = Eigen::VectorXd::Zero(7);

  const auto [c1, c2] = rollover_coeffs(p);
  cs.g_x(0, 2) = c1;
  cs.g_x(0, 3) = c2;
  cs.x_lower(0) = -p.ri_c;
  cs.x_upper(0) = p.ri_c;

  const double r_max = p.tire.mu_y * kGravity / u;
  cs.g_x(1, 1) = 1.0;
  cs.x_lower(1) = -r_max;
  cs.x_upper(1) = r_max;

  for (int i = 0; i < 4; ++i) {
    const auto [lo, hi] = slip_speed_bounds(u, omega[i], p.r_eff, p.lambda_max);
    cs.g_x(2 + i, 4 + i) = 1.0;
    cs.x_lower(2 + i) = lo;
    cs.x_upper(2 + i) = hi;
  }

  cs.g_x(6, 0) = 1.0 / u;
  cs.g_x(6, 1) = p.l_r / u;
  cs.x_lower(6) = -p.alpha_r_max;
  cs.x_upper(6) = p.alpha_r_max;

  cs.x_soft.assign(7, true);
  return cs;
}

ConstraintSet state_rows(const VhsParams& p, double u) {
  if (!(u > 0.0)) throw std::domain_error("state_rows: u must be > 0");
  ConstraintSet cs;
  cs.g_x = Eigen::MatrixXd::Zero(2, 5);
  cs.x_lower = Eigen::VectorXd::Zero(2);
  cs.x_upper = Eigen::VectorXd::Zero(2);

  const double r_max = p.tire.mu_y * kGravity / u;
  cs.g_x(0, 2) = 1.0;
  cs.x_lower(0) = -r_max;
  cs.x_upper(0) = r_max;

  cs.g_x(1, 1) = 1.0 / u;
  cs.g_x(1, 2) = p.l_r / u;
  cs.x_lower(1) = -p.alpha_r_max;
  cs.x_upper(1) = p.alpha_r_max;

  cs.x_soft.assign(2, true);
  return cs;
}

namespace {

ConstraintSet input_rows_impl(const DriverCommand& w0, const std::array<double, 4>& f_z0,
                              const std::array<double, 4>& f_y0, const TireParams& tire,
                              double q_min, double q_max, double delta_max, double r_eff,
                              const ActuatorConfig& t_w) {
  ConstraintSet cs;
  cs.g_u = Eigen::MatrixXd::Zero(12, 8);
  cs.u_lower = Eigen::VectorXd::Zero(12);
  cs.u_upper = Eigen::VectorXd::Zero(12);

  for (int i = 0; i < 4; ++i) {
    const int row_q = 3 * i;
    const int row_f = 3 * i + 1;
    const int row_d = 3 * i + 2;
    cs.g_u(row_q, 2 * i) = 1.0;
    cs.g_u(row_f, 2 * i) = 1.0;
    cs.g_u(row_d, 2 * i + 1) = 1.0;

    if (t_w.torque[i]) {
      cs.u_lower(row_q) = q_min - w0.torque[i];
      cs.u_upper(row_q) = q_max - w0.torque[i];
      // The published capacity rows mix force and torque units; the force
      // capacity enters here as a torque through the effective radius.
      const double cap = r_eff * peak_longitudinal_force(f_z0[i], f_y0[i], tire);
      cs.u_lower(row_f) = -cap - w0.torque[i];
      cs.u_upper(row_f) = cap - w0.torque[i];
    }
    if (t_w.steering[i]) {
      cs.u_lower(row_d) = -delta_max - w0.steering[i];
      cs.u_upper(row_d) = delta_max - w0.steering[i];
    }
  }
  return cs;
}

}  // namespace

ConstraintSet input_rows(const DriverCommand& w0, const std::array<double, 4>& f_z0,
                         const std::array<double, 4>& f_y0, const GeneralEvParams& p,
                         const ActuatorConfig& t_w) {
  return input_rows_impl(w0, f_z0, f_y0, p.tire, p.q_min, p.q_max, p.delta_max, p.r_eff, t_w);
}

ConstraintSet input_rows(const DriverCommand& w0, const std::array<double, 4>& f_z0,
                         const std::array<double, 4>& f_y0, const VhsParams& p,
                         const ActuatorConfig& t_w) {
  return input_rows_impl(w0, f_z0, f_y0, p.tire, p.q_min, p.q_max, p.delta_max, p.r_eff, t_w);
}

}  // namespace latmpc
