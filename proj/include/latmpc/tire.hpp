#pragma once

#include <array>
#include <optional>

namespace latmpc {

inline constexpr double kGravity = 9.81;  // m/s^2

/// CoG-to-axle distances shared by the tire kinematics and both vehicle models.
struct AxleGeometry {
  double l_f;  // CoG to front axle [m]
  double l_r;  // CoG to rear axle [m]

  double wheelbase() const { return l_f + l_r; }
};

enum class TireModelKind { Dugoff, Pacejka };

/// Magic-formula shape factors. The peak factor D is not stored: the lateral
/// force is scaled so that its peak equals mu_y * f_z at the given load.
struct PacejkaCoeffs {
  double b = 10.0;
  double c = 1.9;
  double e = 0.97;
};

struct TireParams {
  double c_alpha;  // cornering stiffness [N/rad]
  double c_sigma;  // longitudinal stiffness [N]
  double mu_x;     // longitudinal friction coefficient
  double mu_y;     // lateral friction coefficient
  TireModelKind kind = TireModelKind::Dugoff;
  std::optional<PacejkaCoeffs> pacejka;  // required iff kind == Pacejka

  /// Throws std::invalid_argument on out-of-range values or a missing/extra
  /// Pacejka coefficient set.
  void validate() const;
};

struct TireOperatingPoint {
  double alpha;          // side-slip angle [rad]
  double f_z;            // normal load [N]
  double sigma_x = 0.0;  // longitudinal slip ratio
};

/// Affine tire model f_y(a) = f_y + c_alpha * (a - alpha), tangent to the
/// nonlinear force curve at the operating slip angle.
struct TireLinearization {
  double f_y;      // lateral force at the operating point [N]
  double c_alpha;  // local cornering coefficient [N/rad]
  double alpha;    // operating slip angle [rad]

  double offset() const { return f_y - c_alpha * alpha; }
  double force_at(double a) const { return f_y + c_alpha * (a - alpha); }
};

/// Side-slip angle of one wheel: delta - (v + a_i * r) / u where a_i is +l_f
/// for the front wheels (1, 2) and -l_r for the rear wheels (3, 4).
/// Throws std::domain_error when u <= 0 (model undefined at standstill).
double slip_angle(int wheel, double steering, double v, double r, double u,
                  const AxleGeometry& geom);

/// Dugoff combined-slip lateral force. Saturates at mu_y * f_z.
double dugoff_lateral_force(const TireOperatingPoint& op, const TireParams& p);

/// Four-coefficient magic formula, peak force mu_y * f_z.
double pacejka_lateral_force(const TireOperatingPoint& op, const TireParams& p);

/// Lateral force of the configured model.
double lateral_force(const TireOperatingPoint& op, const TireParams& p);

/// Analytic dF_y/dalpha of the configured model at the operating point. The
/// Dugoff saturation breakpoint takes the one-sided derivative of the
/// saturated branch.
double lateral_force_slope(const TireOperatingPoint& op, const TireParams& p);

/// Tangent affine model at the operating point.
TireLinearization linearize_tire(const TireOperatingPoint& op, const TireParams& p);

/// Friction-ellipse longitudinal force capacity
/// mu_x * f_z0 * sqrt(1 - (f_y0 / (mu_y * f_z0))^2).
/// Throws std::domain_error outside the ellipse.
double peak_longitudinal_force(double f_z0, double f_y0, const TireParams& p);

/// Effective rolling radius from the static (loaded) radius and the
/// unloaded radius: sin(acos(r_stat/r_w)) * r_w / acos(r_stat/r_w).
double effective_radius(double r_stat, double r_w);

}  // namespace latmpc
