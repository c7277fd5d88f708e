#include "tsim/geometry.hpp"

#include <algorithm>
#include <limits>

namespace tsim {

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 n{-axis.y, axis.x};
  const Vec2 dl = axis * half_length;
  const Vec2 dw = n * half_width;
  return {center + dl + dw, center + dl - dw, center - dl - dw,
          center - dl + dw};
}

namespace {

struct Interval {
  double lo, hi;
};

Interval project(const std::array<Vec2, 4>& pts, const Vec2& axis) {
  double lo = pts[0].dot(axis), hi = lo;
  for (int i = 1; i < 4; ++i) {
    const double v = pts[i].dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double point_segment_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + ab * t;
  return (p - q).norm();
}

double segment_segment_dist(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                            const Vec2& b1) {
  // Non-intersecting case is all we need; intersection is handled by the
  // overlap test before distances are queried.
  double d = point_segment_dist(a0, b0, b1);
  d = std::min(d, point_segment_dist(a1, b0, b1));
  d = std::min(d, point_segment_dist(b0, a0, a1));
  d = std::min(d, point_segment_dist(b1, a0, a1));
  return d;
}

}  // namespace

bool rects_overlap(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 axes[4] = {a.axis,
                        {-a.axis.y, a.axis.x},
                        b.axis,
                        {-b.axis.y, b.axis.x}};
  for (const Vec2& ax : axes) {
    const Interval ia = project(ca, ax);
    const Interval ib = project(cb, ax);
    if (ia.hi < ib.lo || ib.hi < ia.lo) return false;
  }
  return true;
}

double rect_distance(const OrientedRect& a, const OrientedRect& b) {
  if (rects_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, segment_segment_dist(ca[i], ca[(i + 1) % 4],
                                                 cb[j], cb[(j + 1) % 4]));
    }
  }
  return best;
}

TurnPath::TurnPath(double start_y, double radius, double target_lane_y)
    : start_y_(start_y), radius_(radius), target_y_(target_lane_y) {
  const double arc_start_y = target_lane_y - radius;
  straight_len_ = arc_start_y - start_y;
  arc_len_ = radius * 3.141592653589793238462643383279502884 / 2.0;
}

TurnPath::Pose TurnPath::pose(double s) const {
  s = std::max(s, 0.0);
  if (s <= straight_len_) {
    return {{0.0, start_y_ + s}, {0.0, 1.0}};
  }
  const double sa = s - straight_len_;
  if (sa <= arc_len_) {
    const double phi = sa / radius_;
    const double arc_start_y = target_y_ - radius_;
    return {{radius_ * (1.0 - std::cos(phi)), arc_start_y + radius_ * std::sin(phi)},
            {std::sin(phi), std::cos(phi)}};
  }
  const double tail = sa - arc_len_;
  return {{radius_ + tail, target_y_}, {1.0, 0.0}};
}

}  // namespace tsim
