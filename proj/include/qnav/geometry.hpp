#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>

namespace qnav {

using Vec2 = Eigen::Vector2d;

struct Segment {
  Vec2 a;
  Vec2 b;
};

struct Circle {
  Vec2 center;
  double radius;
};

// Axis-aligned rectangle; doubles as a box obstacle and a spawn/goal region.
struct Aabb {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  double diagonal() const { return (max - min).norm(); }
  Vec2 center() const { return 0.5 * (min + max); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y();
  }
};

inline double cross2(const Vec2& u, const Vec2& v) {
  return u.x() * v.y() - u.y() * v.x();
}

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

inline Vec2 unit_from_angle(double angle) {
  return {std::cos(angle), std::sin(angle)};
}

// Smallest t > 0 with origin + t*dir on the segment; dir must be unit length.
inline std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir,
                                         const Segment& s) {
  const Vec2 edge = s.b - s.a;
  const double denom = cross2(dir, edge);
  if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel
  const Vec2 rel = s.a - origin;
  const double t = cross2(rel, edge) / denom;
  const double u = cross2(rel, dir) / denom;
  if (t <= 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

// Nearer positive root of the ray/circle quadratic.
inline std::optional<double> ray_circle(const Vec2& origin, const Vec2& dir,
                                        const Circle& c) {
  const Vec2 rel = origin - c.center;
  const double b = dir.dot(rel);
  const double disc = b * b - (rel.squaredNorm() - c.radius * c.radius);
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t_near = -b - root;
  if (t_near > 0.0) return t_near;
  const double t_far = -b + root;
  if (t_far > 0.0) return t_far;  // origin inside the disk
  return std::nullopt;
}

// Boxes intersect as the min over their four edges, so a box behaves exactly
// like the equivalent segment set.
std::optional<double> ray_box(const Vec2& origin, const Vec2& dir,
                              const Aabb& box);

double point_segment_distance(const Vec2& p, const Segment& s);

// Distance to the solid disk: 0 inside.
inline double point_circle_distance(const Vec2& p, const Circle& c) {
  return std::max((p - c.center).norm() - c.radius, 0.0);
}

// Distance to the solid box: 0 inside.
inline double point_box_distance(const Vec2& p, const Aabb& box) {
  const double dx =
      std::max({box.min.x() - p.x(), 0.0, p.x() - box.max.x()});
  const double dy =
      std::max({box.min.y() - p.y(), 0.0, p.y() - box.max.y()});
  return std::hypot(dx, dy);
}

// Even-odd rule; points on the boundary are not reliably classified.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> vertices);

// Closed-segment intersection test, touching counts.
bool segments_intersect(const Segment& s1, const Segment& s2);

}  // namespace qnav
