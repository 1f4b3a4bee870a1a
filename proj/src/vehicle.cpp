#include "latmpc/vehicle.hpp"

#include <cmath>
#include <stdexcept>

namespace latmpc {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Static axle split plus roll-moment transfer, shared by both models.
std::array<double, 4> loads_from_transfer(double m, double l_f, double l_r, double t_f,
                                          double t_r, double k_axle, double c_axle,
                                          double phi, double phi_dot, double phi_r) {
  const double l = l_f + l_r;
  const double front_static = m * kGravity * l_r / (2.0 * l);
  const double rear_static = m * kGravity * l_f / (2.0 * l);
  // The model's banking sign is opposite to the geometric road roll: +phi_r
  // lowers the +y side, hence phi + phi_r is the suspension deflection angle.
  const double phi_eff = phi + phi_r;
  const double d_front = (k_axle * phi_eff + c_axle * phi_dot) / t_f;
  const double d_rear = (k_axle * phi_eff + c_axle * phi_dot) / t_r;
  return {front_static - d_front, front_static + d_front,
          rear_static - d_rear, rear_static + d_rear};
}

std::array<double, 4> floored(std::array<double, 4> f) {
  for (double& v : f) v = std::max(0.0, v);
  return f;
}

}  // namespace

void GeneralEvParams::validate() const {
  require(m > 0 && m_s > 0 && m_u > 0, "general_ev: masses must be > 0");
  require(std::abs(m - (m_s + m_u)) <= 1e-6 * m, "general_ev: m must equal m_s + m_u");
  require(l_f > 0 && l_r > 0 && t_f > 0 && t_r > 0, "general_ev: lengths must be > 0");
  require(h_s > 0 && h_u > 0 && h_cg > 0, "general_ev: heights must be > 0");
  require(i_xx > 0 && i_zz > 0 && i_w > 0, "general_ev: inertias must be > 0");
  require(k_phi > 0 && c_phi > 0, "general_ev: roll stiffness/damping must be > 0");
  require(r_eff > 0, "general_ev: r_eff must be > 0");
  require(q_min < 0 && 0 < q_max, "general_ev: require q_min < 0 < q_max");
  require(ri_c > 0 && ri_c <= 1, "general_ev: ri_c out of (0, 1]");
  require(delta_max > 0 && alpha_r_max > 0 && lambda_max > 0,
          "general_ev: limits must be > 0");
  tire.validate();
}

void VhsParams::validate() const {
  require(m > 0 && m_s > 0 && m_f > 0, "vhs: masses must be > 0");
  require(l_f > 0 && l_r > 0 && t_f > 0 && t_r > 0, "vhs: lengths must be > 0");
  require(i_xx > 0 && i_zz > 0, "vhs: inertias must be > 0");
  require(h_s > 0 && k_s > 0 && b_s > 0 && l_s > 0, "vhs: suspension values must be > 0");
  require(r_eff > 0, "vhs: r_eff must be > 0");
  require(delta_max > 0 && alpha_r_max > 0, "vhs: limits must be > 0");
  require(q_min < 0 && 0 < q_max, "vhs: require q_min < 0 < q_max");
  require(phi_r >= -0.5 && phi_r <= 0.5, "vhs: phi_r out of [-0.5, 0.5]");
  tire.validate();
}

Eigen::MatrixXd ActuatorConfig::mask() const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 4; ++i) {
    t(2 * i, 2 * i) = torque[i] ? 1.0 : 0.0;
    t(2 * i + 1, 2 * i + 1) = steering[i] ? 1.0 : 0.0;
  }
  return t;
}

Eigen::Matrix<double, 8, 1> DriverCommand::stacked() const {
  Eigen::Matrix<double, 8, 1> w;
  for (int i = 0; i < 4; ++i) {
    w(2 * i) = torque[i];
    w(2 * i + 1) = steering[i];
  }
  return w;
}

TireAffineMaps tire_affine_maps(const std::array<TireLinearization, 4>& lin, double u,
                                const AxleGeometry& geom, double r_eff, int n_body) {
  if (!(u > 0.0)) throw std::domain_error("tire_affine_maps: u must be > 0");
  if (n_body != 4 && n_body != 5)
    throw std::invalid_argument("tire_affine_maps: body state count must be 4 or 5");
  // Column of the lateral velocity state; the 5-state layout leads with y.
  const int col_v = n_body == 5 ? 1 : 0;

  TireAffineMaps maps;
  maps.b1 = Eigen::MatrixXd::Zero(8, n_body);
  maps.b2 = Eigen::MatrixXd::Zero(8, 8);
  maps.d1 = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < 4; ++i) {
    const double a_i = i < 2 ? geom.l_f : -geom.l_r;
    const double c = lin[i].c_alpha;
    maps.b1(2 * i + 1, col_v) = -c / u;
    maps.b1(2 * i + 1, col_v + 1) = -a_i * c / u;
    maps.b2(2 * i, 2 * i) = 1.0 / r_eff;
    maps.b2(2 * i + 1, 2 * i + 1) = c;
    maps.d1(2 * i + 1) = lin[i].offset();
  }
  return maps;
}

Eigen::MatrixXd wheel_rotation_map(const std::array<double, 4>& steering) {
  Eigen::MatrixXd l_w = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 4; ++i) {
    const double c = std::cos(steering[i]);
    const double s = std::sin(steering[i]);
    l_w(2 * i, 2 * i) = c;
    l_w(2 * i, 2 * i + 1) = -s;
    l_w(2 * i + 1, 2 * i) = s;
    l_w(2 * i + 1, 2 * i + 1) = c;
  }
  return l_w;
}

Eigen::MatrixXd cog_map(double t_f, double t_r, double l_f, double l_r) {
  Eigen::MatrixXd l_c(3, 8);
  l_c << 1, 0, 1, 0, 1, 0, 1, 0,
         0, 1, 0, 1, 0, 1, 0, 1,
         -t_f / 2, l_f, t_f / 2, l_f, -t_r / 2, -l_r, t_r / 2, -l_r;
  return l_c;
}

BodyMatrices body_matrices_general(const GeneralEvParams& p, double u) {
  const double den = -p.m_s * p.m_s * p.h_s * p.h_s + p.m * p.i_xx;
  if (!(den > 0.0))
    throw std::domain_error("body_matrices_general: m*I_xx - m_s^2*h_s^2 must be > 0");
  const double roll_restoring = p.k_phi - p.m_s * kGravity * p.h_s;

  BodyMatrices bm;
  bm.a_f = Eigen::MatrixXd::Zero(4, 4);
  bm.a_f(0, 1) = -u;
  bm.a_f(0, 2) = p.m_s * p.h_s * roll_restoring / den;
  bm.a_f(0, 3) = p.m_s * p.h_s * p.c_phi / den;
  bm.a_f(2, 3) = 1.0;
  bm.a_f(3, 2) = -p.m * roll_restoring / den;
  bm.a_f(3, 3) = -p.m * p.c_phi / den;

  bm.b_f = Eigen::MatrixXd::Zero(4, 3);
  bm.b_f(0, 1) = p.i_xx / den;
  bm.b_f(1, 2) = 1.0 / p.i_zz;
  bm.b_f(3, 1) = p.m_s * p.h_s / den;

  bm.c_phi = Eigen::VectorXd::Zero(4);
  return bm;
}

BodyMatrices body_matrices_vhs(const VhsParams& p, double u) {
  const double h2 = p.h_s * p.h_s;
  const double den = p.m * (p.i_xx + h2 * p.m - h2 * p.m_s);
  if (!(den > 0.0))
    throw std::domain_error("body_matrices_vhs: m*(I_xx + h_s^2*(m - m_s)) must be > 0");
  const double ls2 = p.l_s * p.l_s;
  const double g = kGravity;

  BodyMatrices bm;
  bm.a_f = Eigen::MatrixXd::Zero(5, 5);
  bm.a_f(0, 1) = 1.0;
  bm.a_f(1, 2) = -u;
  bm.a_f(1, 3) = (-g * h2 * p.m * p.m_s + 0.5 * p.h_s * p.k_s * ls2 * p.m_s) / den;
  bm.a_f(1, 4) = p.b_s * p.h_s * ls2 * p.m_s / den;
  bm.a_f(3, 4) = 1.0;
  bm.a_f(4, 3) = (g * p.h_s * p.m * p.m - 0.5 * p.k_s * ls2 * p.m) / den;
  bm.a_f(4, 4) = -p.b_s * ls2 * p.m / den;

  bm.b_f = Eigen::MatrixXd::Zero(5, 3);
  bm.b_f(1, 1) = (p.i_xx + p.m * h2) / den;
  bm.b_f(2, 2) = 1.0 / p.i_zz;
  bm.b_f(4, 1) = p.m * p.h_s / (2.0 * den);

  bm.c_phi = Eigen::VectorXd::Zero(5);
  bm.c_phi(1) = (g * p.m * p.m * h2 + g * p.i_xx * p.m) / den;
  bm.c_phi(4) = -g * p.h_s * p.m * p.m / den;
  return bm;
}

WheelDynamics wheel_dynamics(const GeneralEvParams& p, const ActuatorConfig& t_w) {
  if (!(p.i_w > 0.0)) throw std::domain_error("wheel_dynamics: I_w must be > 0");
  WheelDynamics wd;
  wd.a_w = Eigen::MatrixXd::Zero(4, 4);
  wd.e_w = Eigen::MatrixXd::Zero(4, 8);
  wd.b_w = Eigen::MatrixXd::Zero(4, 8);
  for (int i = 0; i < 4; ++i)
    if (t_w.torque[i]) wd.b_w(i, 2 * i) = 1.0 / p.i_w;
  wd.d_w = Eigen::VectorXd::Zero(4);
  return wd;
}

VehicleModel assemble_general(const GeneralEvParams& p, double u,
                              const std::array<TireLinearization, 4>& lin,
                              const DriverCommand& w0, const ActuatorConfig& t_w) {
  const BodyMatrices bm = body_matrices_general(p, u);
  const TireAffineMaps maps = tire_affine_maps(lin, u, p.geometry(), p.r_eff, 4);
  const Eigen::MatrixXd l_c = cog_map(p.t_f, p.t_r, p.l_f, p.l_r);
  const Eigen::MatrixXd l_w = wheel_rotation_map(w0.steering);
  const Eigen::MatrixXd chain = bm.b_f * l_c * l_w;  // 4 x 8

  const Eigen::MatrixXd a_b = bm.a_f + chain * maps.b1;
  const Eigen::MatrixXd e_b = chain * maps.b2;
  const Eigen::MatrixXd b_b = e_b * t_w.mask();
  const Eigen::VectorXd d_b = chain * maps.d1;

  const WheelDynamics wd = wheel_dynamics(p, t_w);

  VehicleModel m;
  m.n_x = 8;
  m.a = Eigen::MatrixXd::Zero(8, 8);
  m.a.topLeftCorner(4, 4) = a_b;
  m.a.bottomRightCorner(4, 4) = wd.a_w;
  m.e = Eigen::MatrixXd::Zero(8, 8);
  m.e.topRows(4) = e_b;
  m.e.bottomRows(4) = wd.e_w;
  m.b = Eigen::MatrixXd::Zero(8, 8);
  m.b.topRows(4) = b_b;
  m.b.bottomRows(4) = wd.b_w;
  m.d = Eigen::VectorXd::Zero(8);
  m.d.head(4) = d_b;
  m.c_phi = Eigen::VectorXd::Zero(8);
  m.linearizations = lin;
  return m;
}

VehicleModel assemble_vhs(const VhsParams& p, double u,
                          const std::array<TireLinearization, 4>& lin,
                          const DriverCommand& w0, const ActuatorConfig& t_w) {
  const BodyMatrices bm = body_matrices_vhs(p, u);
  const TireAffineMaps maps = tire_affine_maps(lin, u, p.geometry(), p.r_eff, 5);
  const Eigen::MatrixXd l_c = cog_map(p.t_f, p.t_r, p.l_f, p.l_r);
  const Eigen::MatrixXd l_w = wheel_rotation_map(w0.steering);
  const Eigen::MatrixXd chain = bm.b_f * l_c * l_w;  // 5 x 8

  VehicleModel m;
  m.n_x = 5;
  m.a = bm.a_f + chain * maps.b1;
  m.e = chain * maps.b2;
  m.b = m.e * t_w.mask();
  m.d = chain * maps.d1;
  m.c_phi = bm.c_phi;
  m.linearizations = lin;
  return m;
}

std::array<double, 4> normal_loads_raw(const GeneralEvParams& p, double phi, double phi_dot,
                                       double phi_r) {
  // k_phi and c_phi cover the whole vehicle; split evenly per axle.
  return loads_from_transfer(p.m, p.l_f, p.l_r, p.t_f, p.t_r, 0.5 * p.k_phi, 0.5 * p.c_phi,
                             phi, phi_dot, phi_r);
}

std::array<double, 4> normal_loads_raw(const VhsParams& p, double phi, double phi_dot,
                                       double phi_r) {
  const double k_axle = 0.5 * p.k_s * p.l_s * p.l_s;
  const double c_axle = 0.5 * p.b_s * p.l_s * p.l_s;
  return loads_from_transfer(p.m, p.l_f, p.l_r, p.t_f, p.t_r, k_axle, c_axle,
                             phi, phi_dot, phi_r);
}

std::array<double, 4> normal_loads(const GeneralEvParams& p, double phi, double phi_dot,
                                   double phi_r) {
  return floored(normal_loads_raw(p, phi, phi_dot, phi_r));
}

std::array<double, 4> normal_loads(const VhsParams& p, double phi, double phi_dot,
                                   double phi_r) {
  return floored(normal_loads_raw(p, phi, phi_dot, phi_r));
}

}  // namespace latmpc
