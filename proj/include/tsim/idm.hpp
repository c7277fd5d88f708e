#pragma once

namespace tsim {

/// Intelligent Driver Model parameters. Defaults are canonical values
/// scaled to low-speed urban traffic (desired speed 3 m/s).
struct IdmParams {
  double desired_speed = 3.0;      // v0, m/s
  double max_accel = 1.5;          // a, m/s^2
  double comfortable_decel = 2.0;  // b, m/s^2
  double headway_time = 1.0;       // T, s
  double min_spacing = 2.0;        // s0, m
  double accel_exponent = 4.0;     // delta
  double emergency_decel = 4.0;    // hard clamp, m/s^2
};

/// Car-following acceleration.
///   a = a_max * (1 - (v/v0)^delta - (s*/gap)^2)
///   s* = gap_factor * (s0 + v*T + v*dv / (2*sqrt(a_max*b)))
/// clamped to [-emergency_decel, max_accel]. `dv` is the closing speed
/// (follower minus leader). Pass a large sentinel gap when there is no
/// leader. Throws std::domain_error on non-finite input, gap <= 0 or v < 0.
double idm_acceleration(double v, double gap, double dv, const IdmParams& p,
                        double gap_factor_applied);

/// Desired dynamic gap s* at the given speed and closing rate (factor 1).
double idm_desired_gap(double v, double dv, const IdmParams& p);

/// Steady-state bumper gap for a follower tracking a leader cruising at
/// speed v (< desired_speed): the gap at which acceleration is exactly 0.
double idm_equilibrium_gap(double v, const IdmParams& p);

}  // namespace tsim
