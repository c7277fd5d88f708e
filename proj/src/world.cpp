#include "tsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsim/error.hpp"

namespace tsim {

namespace {
constexpr double kSentinelGap = 1.0e6;
constexpr double kMinGap = 0.01;
}  // namespace

void WorldConfig::validate() const {
  if (p_conservative < 0.0 || p_conservative > 1.0)
    throw ConfigError("world.p_conservative must be in [0, 1]");
  if (dt <= 0.0) throw ConfigError("world.dt must be > 0");
  if (max_steps <= 0) throw ConfigError("world.max_steps must be > 0");
  if (geometry.lane_width <= 0.0)
    throw ConfigError("world.geometry.lane_width must be > 0");
  if (geometry.turn_radius <= 0.0)
    throw ConfigError("world.geometry.turn_radius must be > 0");
  if (geometry.spawn_x_extent <= 0.0)
    throw ConfigError("world.geometry.spawn_x_extent must be > 0");
  if (geometry.upper_lane_center_y <= geometry.lower_lane_center_y)
    throw ConfigError(
        "world.geometry.upper_lane_center_y must exceed lower_lane_center_y");
  if (geometry.ego_start_y >= geometry.upper_lane_center_y - geometry.turn_radius)
    throw ConfigError("world.geometry.ego_start_y must leave room for the turn");
  if (max_vehicles_per_lane <= 0)
    throw ConfigError("world.max_vehicles_per_lane must be > 0");
  if (gap_intervals.conservative.lo > gap_intervals.conservative.hi ||
      gap_intervals.aggressive.lo > gap_intervals.aggressive.hi)
    throw ConfigError("world.gap_intervals bounds must satisfy lo <= hi");
  if (gap_intervals.conservative.lo <= 0.0 || gap_intervals.aggressive.lo <= 0.0)
    throw ConfigError("world.gap_intervals bounds must be > 0");
  if (accel_noise_std < 0.0)
    throw ConfigError("world.accel_noise_std must be >= 0");
  if (noise_std.position < 0.0 || noise_std.velocity < 0.0)
    throw ConfigError("world.noise_std values must be >= 0");
  if (vehicle_length <= 0.0 || vehicle_width <= 0.0)
    throw ConfigError("world.vehicle_length/width must be > 0");
  if (idm.desired_speed <= 0.0) throw ConfigError("world.idm.desired_speed must be > 0");
  if (idm.max_accel <= 0.0) throw ConfigError("world.idm.max_accel must be > 0");
  if (idm.comfortable_decel <= 0.0)
    throw ConfigError("world.idm.comfortable_decel must be > 0");
}

DriverProfile sample_driver_profile(Rng& rng, double p_conservative,
                                    const GapIntervals& intervals) {
  if (p_conservative < 0.0 || p_conservative > 1.0)
    throw ContractError("sample_driver_profile: p_conservative out of [0,1]");
  DriverProfile profile;
  profile.style = rng.bernoulli(p_conservative) ? DriverStyle::kConservative
                                                : DriverStyle::kAggressive;
  const GapInterval& iv = profile.style == DriverStyle::kConservative
                              ? intervals.conservative
                              : intervals.aggressive;
  profile.gap_factor = rng.uniform(iv.lo, iv.hi);
  profile.has_noticed_ego = false;
  return profile;
}

bool yielding_decision(const DriverProfile& profile, const VehicleState& ego,
                       const LaneGeometry& lane) {
  if (profile.style == DriverStyle::kAggressive) return false;
  const double ego_y = ego.position.y;
  if (std::abs(ego_y - lane.center_y) < lane.lane_width / 2.0) return true;
  const bool approaching = ego.velocity.y > 0.5;
  const bool inside = ego_y >= lane.road_near_edge_y && ego_y < lane.center_y;
  return approaching && inside;
}

World::World(const WorldConfig& config)
    : config_(config),
      path_(config.geometry.ego_start_y, config.geometry.turn_radius,
            config.geometry.upper_lane_center_y) {
  config_.validate();
}

VehicleState World::ego_state() const {
  const auto pose = path_.pose(ego_progress_);
  return {pose.position, pose.tangent * ego_speed_};
}

OrientedRect World::ego_rect() const {
  const auto pose = path_.pose(ego_progress_);
  return {pose.position, pose.tangent, config_.vehicle_length / 2.0,
          config_.vehicle_width / 2.0};
}

OrientedRect World::vehicle_rect(const SurroundingVehicle& v) const {
  return {v.state.position,
          {lane_direction(v.lane_id), 0.0},
          config_.vehicle_length / 2.0,
          config_.vehicle_width / 2.0};
}

LaneGeometry World::lane_geometry(int lane_id) const {
  return {lane_id == 0 ? config_.geometry.lower_lane_center_y
                       : config_.geometry.upper_lane_center_y,
          config_.geometry.lane_width, config_.geometry.road_near_edge_y()};
}

void World::update_notice() {
  if (!notice_latched_) {
    const auto pose = path_.pose(ego_progress_);
    const double front_y =
        pose.position.y + pose.tangent.y * config_.vehicle_length / 2.0;
    if (front_y >= config_.geometry.road_near_edge_y()) notice_latched_ = true;
  }
  if (notice_latched_) {
    for (auto& v : vehicles_) v.profile.has_noticed_ego = true;
  }
}

bool World::safety_check() const {
  const OrientedRect ego = ego_rect();
  const VehicleState ego_vs = ego_state();
  for (const auto& v : vehicles_) {
    const double dist = rect_distance(ego, vehicle_rect(v));
    if (dist < config_.safe_distance) return true;
    const Vec2 rel_pos = v.state.position - ego_vs.position;
    const double range = rel_pos.norm();
    if (range < 1e-9) return true;
    const Vec2 unit = rel_pos * (1.0 / range);
    const Vec2 rel_vel = v.state.velocity - ego_vs.velocity;
    const double closing = -unit.dot(rel_vel);
    if (closing > 1e-9 && dist / closing < config_.ttc_threshold) return true;
  }
  return false;
}

double World::ego_control_accel(double target_speed) const {
  if (safety_check()) return -config_.idm.emergency_decel;
  const double accel = config_.ego_controller.kp * (target_speed - ego_speed_) -
                       config_.ego_controller.kd * ego_prev_accel_;
  return std::clamp(accel, -config_.idm.emergency_decel, config_.idm.max_accel);
}

const SurroundingVehicle* World::same_lane_leader(
    const SurroundingVehicle& v) const {
  const double dir = lane_direction(v.lane_id);
  const double s = dir * v.state.position.x;
  const SurroundingVehicle* leader = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& other : vehicles_) {
    if (&other == &v || other.lane_id != v.lane_id) continue;
    const double so = dir * other.state.position.x;
    if (so > s && so - s < best) {
      best = so - s;
      leader = &other;
    }
  }
  return leader;
}

double World::surrounding_accel(const SurroundingVehicle& v) const {
  const double dir = lane_direction(v.lane_id);
  const double s = dir * v.state.position.x;
  const double speed = v.state.velocity.norm();

  double gap = kSentinelGap;
  double dv = 0.0;
  const SurroundingVehicle* leader = same_lane_leader(v);
  if (leader != nullptr) {
    gap = (dir * leader->state.position.x - s) - config_.vehicle_length;
    dv = speed - leader->state.velocity.norm();
  }

  if (yielding_decision(v.profile, ego_state(), lane_geometry(v.lane_id))) {
    const VehicleState ego = ego_state();
    const auto pose = path_.pose(ego_progress_);
    const double ego_s = dir * ego.position.x;
    const double leader_s =
        leader != nullptr ? dir * leader->state.position.x
                          : std::numeric_limits<double>::infinity();
    // The projected ego replaces the leader when it is ahead and at least
    // as close (ties go to the ego).
    if (ego_s > s && ego_s <= leader_s) {
      const double ego_half_extent =
          std::abs(pose.tangent.x) * config_.vehicle_length / 2.0 +
          std::abs(pose.tangent.y) * config_.vehicle_width / 2.0;
      gap = (ego_s - s) - (config_.vehicle_length / 2.0 + ego_half_extent);
      dv = speed - dir * ego.velocity.x;
    }
  }

  const double factor =
      v.profile.has_noticed_ego ? v.profile.gap_factor : 1.0;
  return idm_acceleration(speed, std::max(gap, kMinGap), dv, config_.idm,
                          factor);
}

void World::integrate(double ego_accel, const std::vector<double>& accels) {
  const double dt = config_.dt;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    auto& v = vehicles_[i];
    const double dir = lane_direction(v.lane_id);
    const double speed = v.state.velocity.norm();
    v.state.position.x += dir * speed * dt;
    const double new_speed =
        std::clamp(speed + accels[i] * dt, 0.0, config_.speed_clamp);
    v.state.velocity = {dir * new_speed, 0.0};
  }
  ego_progress_ += ego_speed_ * dt;
  ego_speed_ = std::clamp(ego_speed_ + ego_accel * dt, 0.0, config_.speed_clamp);
}

int World::find_free_slot() const {
  for (int slot = 0; slot < config_.slot_count(); ++slot) {
    bool taken = false;
    for (const auto& v : vehicles_)
      if (v.slot_id == slot) taken = true;
    if (!taken) return slot;
  }
  return -1;
}

double World::spawn_gap_threshold(Rng& rng) const {
  const double base = idm_desired_gap(config_.idm.desired_speed, 0.0, config_.idm);
  return base * rng.uniform(1.0, 1.5);
}

void World::spawn_despawn(Rng& rng) {
  const double extent = config_.geometry.spawn_x_extent;
  const double margin = config_.vehicle_length;
  std::erase_if(vehicles_, [&](const SurroundingVehicle& v) {
    return lane_direction(v.lane_id) * v.state.position.x > extent + margin;
  });

  for (int lane = 0; lane < 2; ++lane) {
    int count = 0;
    double last_s = std::numeric_limits<double>::infinity();
    for (const auto& v : vehicles_) {
      if (v.lane_id != lane) continue;
      ++count;
      last_s = std::min(last_s, lane_direction(lane) * v.state.position.x);
    }
    if (count >= config_.max_vehicles_per_lane) continue;
    const double gap_to_last =
        std::isinf(last_s) ? kSentinelGap
                           : (last_s - (-extent)) - config_.vehicle_length;
    if (gap_to_last <= pending_spawn_threshold_[lane]) continue;
    const int slot = find_free_slot();
    if (slot < 0) continue;  // defer until a slot frees up

    SurroundingVehicle v;
    const double dir = lane_direction(lane);
    v.lane_id = lane;
    v.slot_id = slot;
    v.uid = next_uid_++;
    v.state.position = {-dir * extent,
                        lane == 0 ? config_.geometry.lower_lane_center_y
                                  : config_.geometry.upper_lane_center_y};
    v.state.velocity = {dir * config_.idm.desired_speed, 0.0};
    v.profile =
        sample_driver_profile(rng, config_.p_conservative, config_.gap_intervals);
    vehicles_.push_back(v);
    pending_spawn_threshold_[lane] = spawn_gap_threshold(rng);
  }
}

void World::populate_lane(int lane_id, Rng& rng) {
  const double extent = config_.geometry.spawn_x_extent;
  const double dir = lane_direction(lane_id);
  const double lane_y = lane_geometry(lane_id).center_y;
  const int count = 1 + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(config_.max_vehicles_per_lane)));
  double s = extent - rng.uniform(0.0, 2.0 * config_.vehicle_length);
  for (int i = 0; i < count; ++i) {
    if (s < -extent) break;
    const int slot = find_free_slot();
    if (slot < 0) break;
    SurroundingVehicle v;
    v.lane_id = lane_id;
    v.slot_id = slot;
    v.uid = next_uid_++;
    v.state.position = {dir * s, lane_y};
    v.state.velocity = {dir * config_.idm.desired_speed, 0.0};
    v.profile =
        sample_driver_profile(rng, config_.p_conservative, config_.gap_intervals);
    vehicles_.push_back(v);
    s -= config_.vehicle_length + spawn_gap_threshold(rng);
  }
}

void World::reset(Rng& rng) {
  vehicles_.clear();
  ego_progress_ = 0.0;
  ego_speed_ = 0.0;
  ego_prev_accel_ = 0.0;
  step_count_ = 0;
  terminated_ = false;
  notice_latched_ = false;
  last_events_ = StepEvents{};
  next_uid_ = 1;
  populate_lane(0, rng);
  populate_lane(1, rng);
  pending_spawn_threshold_[0] = spawn_gap_threshold(rng);
  pending_spawn_threshold_[1] = spawn_gap_threshold(rng);
}

int World::add_vehicle(int lane_id, double x, double speed,
                       DriverProfile profile, bool cruise) {
  const int slot = find_free_slot();
  if (slot < 0) throw ContractError("add_vehicle: no free slot");
  SurroundingVehicle v;
  v.lane_id = lane_id;
  v.slot_id = slot;
  v.uid = next_uid_++;
  v.state.position = {x, lane_geometry(lane_id).center_y};
  v.state.velocity = {lane_direction(lane_id) * speed, 0.0};
  v.profile = profile;
  v.cruise = cruise;
  vehicles_.push_back(v);
  return slot;
}

void World::set_ego(double path_progress, double path_speed) {
  ego_progress_ = path_progress;
  ego_speed_ = path_speed;
}

StepEvents World::step(double ego_target_speed, Rng& rng) {
  if (terminated_)
    throw ContractError("World::step called on a terminated episode");

  update_notice();

  std::vector<double> accels(vehicles_.size(), 0.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (vehicles_[i].cruise) continue;
    double a = surrounding_accel(vehicles_[i]);
    if (config_.accel_noise_std > 0.0)
      a += rng.normal(0.0, config_.accel_noise_std);
    accels[i] = a;
  }

  const double ego_accel = ego_control_accel(ego_target_speed);
  integrate(ego_accel, accels);
  ego_prev_accel_ = ego_accel;

  spawn_despawn(rng);
  ++step_count_;

  StepEvents events;
  const OrientedRect ego = ego_rect();
  for (const auto& v : vehicles_) {
    if (rects_overlap(ego, vehicle_rect(v))) {
      events.collision = true;
      break;
    }
  }
  if (!events.collision && ego_progress_ >= path_.turn_length())
    events.goal_reached = true;
  if (!events.any() && step_count_ >= config_.max_steps) events.timeout = true;

  terminated_ = events.any();
  last_events_ = events;
  return events;
}

}  // namespace tsim
