#include "tsim/idm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsim {

double idm_desired_gap(double v, double dv, const IdmParams& p) {
  return p.min_spacing + v * p.headway_time +
         v * dv / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
}

double idm_acceleration(double v, double gap, double dv, const IdmParams& p,
                        double gap_factor_applied) {
  if (!std::isfinite(v) || !std::isfinite(gap) || !std::isfinite(dv) ||
      !std::isfinite(gap_factor_applied)) {
    throw std::domain_error("idm_acceleration: non-finite input");
  }
  if (gap <= 0.0) throw std::domain_error("idm_acceleration: gap must be > 0");
  if (v < 0.0) throw std::domain_error("idm_acceleration: v must be >= 0");

  const double free_term = std::pow(v / p.desired_speed, p.accel_exponent);
  const double s_star = gap_factor_applied * idm_desired_gap(v, dv, p);
  const double spacing_term = s_star / gap;
  const double a = p.max_accel * (1.0 - free_term - spacing_term * spacing_term);
  return std::clamp(a, -p.emergency_decel, p.max_accel);
}

double idm_equilibrium_gap(double v, const IdmParams& p) {
  const double free_term = std::pow(v / p.desired_speed, p.accel_exponent);
  return idm_desired_gap(v, 0.0, p) / std::sqrt(1.0 - free_term);
}

}  // namespace tsim
