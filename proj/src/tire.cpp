#include "latmpc/tire.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace latmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dugoff transition variable. Returns +inf when the combined-slip magnitude
// vanishes while the load does not (pure linear region).
double dugoff_lambda(double tan_alpha, double sigma_x, double f_z, const TireParams& p) {
  const double denom = std::hypot(p.c_sigma * sigma_x, p.c_alpha * tan_alpha);
  const double num = p.mu_y * f_z * (1.0 + sigma_x);
  if (denom == 0.0) return num > 0.0 ? kInf : 0.0;
  return num / (2.0 * denom);
}

}  // namespace

void TireParams::validate() const {
  if (!(c_alpha > 0.0)) throw std::invalid_argument("tire: c_alpha must be > 0");
  if (!(c_sigma > 0.0)) throw std::invalid_argument("tire: c_sigma must be > 0");
  if (!(mu_x > 0.0 && mu_x <= 2.0)) throw std::invalid_argument("tire: mu_x out of (0, 2]");
  if (!(mu_y > 0.0 && mu_y <= 2.0)) throw std::invalid_argument("tire: mu_y out of (0, 2]");
  if ((kind == TireModelKind::Pacejka) != pacejka.has_value())
    throw std::invalid_argument("tire: pacejka coefficients must be present iff kind is Pacejka");
}

double slip_angle(int wheel, double steering, double v, double r, double u,
                  const AxleGeometry& geom) {
  if (wheel < 1 || wheel > 4) throw std::invalid_argument("slip_angle: wheel index must be 1..4");
  if (!(u > 0.0)) throw std::domain_error("slip_angle: longitudinal velocity must be > 0");
  const double a_i = wheel <= 2 ? geom.l_f : -geom.l_r;
  return steering - (v + a_i * r) / u;
}

double dugoff_lateral_force(const TireOperatingPoint& op, const TireParams& p) {
  if (op.f_z < 0.0) throw std::domain_error("dugoff_lateral_force: negative normal load");
  const double t = std::tan(op.alpha);
  const double lam = dugoff_lambda(t, op.sigma_x, op.f_z, p);
  const double shape = lam < 1.0 ? (2.0 - lam) * lam : 1.0;
  return p.c_alpha * t / (1.0 + op.sigma_x) * shape;
}

double pacejka_lateral_force(const TireOperatingPoint& op, const TireParams& p) {
  if (!p.pacejka) throw std::invalid_argument("pacejka_lateral_force: coefficients not configured");
  if (op.f_z < 0.0) throw std::domain_error("pacejka_lateral_force: negative normal load");
  const auto& c = *p.pacejka;
  const double d = p.mu_y * op.f_z;
  const double ba = c.b * op.alpha;
  const double phi = ba - c.e * (ba - std::atan(ba));
  return d * std::sin(c.c * std::atan(phi));
}

double lateral_force(const TireOperatingPoint& op, const TireParams& p) {
  return p.kind == TireModelKind::Dugoff ? dugoff_lateral_force(op, p)
                                         : pacejka_lateral_force(op, p);
}

double lateral_force_slope(const TireOperatingPoint& op, const TireParams& p) {
  if (op.f_z < 0.0) throw std::domain_error("lateral_force_slope: negative normal load");
  if (p.kind == TireModelKind::Pacejka) {
    if (!p.pacejka) throw std::invalid_argument("lateral_force_slope: coefficients not configured");
    const auto& c = *p.pacejka;
    const double d = p.mu_y * op.f_z;
    const double ba = c.b * op.alpha;
    const double phi = ba - c.e * (ba - std::atan(ba));
    const double dphi = c.b - c.e * (c.b - c.b / (1.0 + ba * ba));
    return d * std::cos(c.c * std::atan(phi)) * c.c / (1.0 + phi * phi) * dphi;
  }

  const double t = std::tan(op.alpha);
  const double sec2 = 1.0 + t * t;
  const double one_plus_s = 1.0 + op.sigma_x;
  const double lam = dugoff_lambda(t, op.sigma_x, op.f_z, p);
  // Breakpoint lambda == 1 resolves to the saturated branch.
  if (lam > 1.0) return p.c_alpha * sec2 / one_plus_s;
  if (lam == 0.0) return 0.0;  // zero load: force identically zero
  const double denom2 = (p.c_sigma * op.sigma_x) * (p.c_sigma * op.sigma_x) +
                        (p.c_alpha * t) * (p.c_alpha * t);
  const double dlam = -lam * p.c_alpha * p.c_alpha * t * sec2 / denom2;
  return p.c_alpha / one_plus_s *
         (sec2 * (2.0 - lam) * lam + t * (2.0 - 2.0 * lam) * dlam);
}

TireLinearization linearize_tire(const TireOperatingPoint& op, const TireParams& p) {
  return TireLinearization{lateral_force(op, p), lateral_force_slope(op, p), op.alpha};
}

double peak_longitudinal_force(double f_z0, double f_y0, const TireParams& p) {
  if (f_z0 < 0.0) throw std::domain_error("peak_longitudinal_force: negative normal load");
  if (f_z0 == 0.0) {
    if (f_y0 != 0.0) throw std::domain_error("peak_longitudinal_force: outside friction ellipse");
    return 0.0;
  }
  const double usage = f_y0 / (p.mu_y * f_z0);
  if (std::abs(usage) > 1.0 + 1e-9)
    throw std::domain_error("peak_longitudinal_force: outside friction ellipse");
  const double rem = std::max(0.0, 1.0 - usage * usage);
  return p.mu_x * f_z0 * std::sqrt(rem);
}

double effective_radius(double r_stat, double r_w) {
  if (!(r_stat > 0.0) || !(r_w > 0.0) || r_stat > r_w)
    throw std::domain_error("effective_radius: require 0 < r_stat <= r_w");
  const double theta = std::acos(std::min(1.0, r_stat / r_w));
  if (theta < 1e-8) return r_w;  // sinc limit
  return std::sin(theta) * r_w / theta;
}

}  // namespace latmpc
