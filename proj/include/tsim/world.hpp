#pragma once

#include <cstdint>
#include <vector>

#include "tsim/geometry.hpp"
#include "tsim/idm.hpp"
#include "tsim/rng.hpp"

namespace tsim {

enum class DriverStyle { kConservative, kAggressive };

/// Hidden per-driver state. The gap factor is drawn once at spawn and
/// scales the driver's desired IDM gap after the ego has been noticed.
struct DriverProfile {
  DriverStyle style = DriverStyle::kConservative;
  double gap_factor = 1.0;
  bool has_noticed_ego = false;
};

struct VehicleState {
  Vec2 position;
  Vec2 velocity;
};

struct GapInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct GapIntervals {
  GapInterval conservative{0.5, 0.8};
  GapInterval aggressive{0.4, 0.7};
};

struct GeometryConfig {
  double lane_width = 4.0;
  double lower_lane_center_y = 2.0;  // leftbound (-x) traffic
  double upper_lane_center_y = 6.0;  // rightbound (+x) traffic, merge target
  double ego_start_y = -8.0;
  double turn_radius = 6.0;
  double spawn_x_extent = 30.0;

  double road_near_edge_y() const {
    return lower_lane_center_y - lane_width / 2.0;
  }
};

struct NoiseStd {
  double position = 0.1;  // m
  double velocity = 0.1;  // m/s
};

struct EgoController {
  double kp = 2.0;
  double kd = 0.5;
};

struct WorldConfig {
  double p_conservative = 0.5;
  double dt = 0.1;
  int max_steps = 200;
  IdmParams idm;
  GeometryConfig geometry;
  NoiseStd noise_std;  // consumed by the observation layer
  double accel_noise_std = 0.1;
  int max_vehicles_per_lane = 4;
  GapIntervals gap_intervals;
  EgoController ego_controller;
  double safe_distance = 1.0;   // emergency-brake proximity, m
  double ttc_threshold = 1.0;   // emergency-brake time to collision, s
  double speed_clamp = 10.0;    // hard cap on any speed, m/s
  double vehicle_length = 4.0;
  double vehicle_width = 2.0;

  int slot_count() const { return 2 * max_vehicles_per_lane; }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct SurroundingVehicle {
  VehicleState state;
  DriverProfile profile;
  int lane_id = 0;   // 0 = lower (-x), 1 = upper (+x)
  int slot_id = 0;   // stable for the vehicle's lifetime
  std::uint64_t uid = 0;
  bool cruise = false;  // hold speed, bypass IDM (debug/test traffic)
};

struct StepEvents {
  bool collision = false;
  bool goal_reached = false;
  bool timeout = false;

  bool any() const { return collision || goal_reached || timeout; }
};

DriverProfile sample_driver_profile(Rng& rng, double p_conservative,
                                    const GapIntervals& intervals);

struct LaneGeometry {
  double center_y = 0.0;
  double lane_width = 4.0;
  double road_near_edge_y = 0.0;
};

/// Whether this driver cedes the right of way to the ego vehicle.
/// Aggressive drivers never do. Conservative drivers do when the ego
/// laterally intercepts their lane band, or is approaching the lane center
/// faster than 0.5 m/s from inside the intersection.
bool yielding_decision(const DriverProfile& profile, const VehicleState& ego,
                       const LaneGeometry& lane);

/// Ground-truth T-intersection world. Two-lane main road with IDM traffic
/// carrying latent driver styles; the ego vehicle tracks a fixed right-turn
/// path with a longitudinal PD controller plus an emergency-brake check.
class World {
 public:
  explicit World(const WorldConfig& config);

  void reset(Rng& rng);

  /// Advances one tick. Throws ContractError if the episode already ended.
  StepEvents step(double ego_target_speed, Rng& rng);

  const WorldConfig& config() const { return config_; }
  const TurnPath& path() const { return path_; }
  const std::vector<SurroundingVehicle>& surrounding() const {
    return vehicles_;
  }
  VehicleState ego_state() const;
  double ego_path_progress() const { return ego_progress_; }
  double ego_path_speed() const { return ego_speed_; }
  double ego_prev_accel() const { return ego_prev_accel_; }
  int step_count() const { return step_count_; }
  bool terminated() const { return terminated_; }
  StepEvents last_events() const { return last_events_; }

  OrientedRect ego_rect() const;
  OrientedRect vehicle_rect(const SurroundingVehicle& v) const;
  LaneGeometry lane_geometry(int lane_id) const;
  double lane_direction(int lane_id) const { return lane_id == 0 ? -1.0 : 1.0; }

  /// Marks every driver as having noticed the ego once its front bumper
  /// has crossed the intersection entry line. Monotone within an episode.
  void update_notice();

  /// True when any vehicle is within safe_distance of the ego rectangle or
  /// on a projected collision course within ttc_threshold seconds.
  bool safety_check() const;

  /// PD tracking acceleration toward target_speed, overridden with a full
  /// emergency brake while safety_check fires.
  double ego_control_accel(double target_speed) const;

  // Scene editing for tests and scripted scenarios.
  std::vector<SurroundingVehicle>& mutable_surrounding() { return vehicles_; }
  void clear_surrounding() { vehicles_.clear(); }
  int add_vehicle(int lane_id, double x, double speed, DriverProfile profile,
                  bool cruise = false);
  void set_ego(double path_progress, double path_speed);

 private:
  void integrate(double ego_accel, const std::vector<double>& accels);
  void spawn_despawn(Rng& rng);
  void populate_lane(int lane_id, Rng& rng);
  int find_free_slot() const;
  double spawn_gap_threshold(Rng& rng) const;
  const SurroundingVehicle* same_lane_leader(const SurroundingVehicle& v) const;
  double surrounding_accel(const SurroundingVehicle& v) const;

  WorldConfig config_;
  TurnPath path_;
  std::vector<SurroundingVehicle> vehicles_;
  double ego_progress_ = 0.0;
  double ego_speed_ = 0.0;
  double ego_prev_accel_ = 0.0;
  int step_count_ = 0;
  bool terminated_ = false;
  bool notice_latched_ = false;
  StepEvents last_events_;
  std::uint64_t next_uid_ = 1;
  double pending_spawn_threshold_[2] = {0.0, 0.0};
};

}  // namespace tsim
