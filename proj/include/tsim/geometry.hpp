#pragma once

#include <array>
#include <cmath>

namespace tsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

/// Rectangle with arbitrary heading. `axis` is the unit vector along the
/// length direction.
struct OrientedRect {
  Vec2 center;
  Vec2 axis;  // unit length direction
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const;
};

bool rects_overlap(const OrientedRect& a, const OrientedRect& b);

/// Euclidean distance between rectangle boundaries; 0 when overlapping.
double rect_distance(const OrientedRect& a, const OrientedRect& b);

/// Ego right-turn path: a straight run up the minor road, a quarter arc of
/// the given radius, then a straight continuation along the target lane
/// centerline. Arc-length parameterized.
class TurnPath {
 public:
  TurnPath(double start_y, double radius, double target_lane_y);

  /// Pose at arc length s (clamped to s >= 0).
  struct Pose {
    Vec2 position;
    Vec2 tangent;  // unit
  };
  Pose pose(double s) const;

  /// Length of straight + quarter arc; reaching it completes the turn.
  double turn_length() const { return straight_len_ + arc_len_; }
  double straight_length() const { return straight_len_; }

 private:
  double start_y_;
  double radius_;
  double target_y_;
  double straight_len_;
  double arc_len_;
};

}  // namespace tsim
