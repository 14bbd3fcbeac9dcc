#include "qnav/geometry.hpp"

#include <algorithm>
#include <array>

namespace qnav {

std::optional<double> ray_box(const Vec2& origin, const Vec2& dir,
                              const Aabb& box) {
  const Vec2 c0 = box.min;
  const Vec2 c1{box.max.x(), box.min.y()};
  const Vec2 c2 = box.max;
  const Vec2 c3{box.min.x(), box.max.y()};
  const std::array<Segment, 4> edges{
      Segment{c0, c1}, Segment{c1, c2}, Segment{c2, c3}, Segment{c3, c0}};
  std::optional<double> best;
  for (const Segment& e : edges) {
    if (auto t = ray_segment(origin, dir, e)) {
      if (!best || *t < *best) best = t;
    }
  }
  return best;
}

double point_segment_distance(const Vec2& p, const Segment& s) {
  const Vec2 edge = s.b - s.a;
  const double len2 = edge.squaredNorm();
  if (len2 == 0.0) return (p - s.a).norm();
  const double u = std::clamp((p - s.a).dot(edge) / len2, 0.0, 1.0);
  return (p - (s.a + u * edge)).norm();
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> vertices) {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& vi = vertices[i];
    const Vec2& vj = vertices[j];
    if ((vi.y() > p.y()) != (vj.y() > p.y()) &&
        p.x() < (vj.x() - vi.x()) * (p.y() - vi.y()) / (vj.y() - vi.y()) +
                    vi.x()) {
      inside = !inside;
    }
  }
  return inside;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

}  // namespace

bool segments_intersect(const Segment& s1, const Segment& s2) {
  const int o1 = orientation(s1.a, s1.b, s2.a);
  const int o2 = orientation(s1.a, s1.b, s2.b);
  const int o3 = orientation(s2.a, s2.b, s1.a);
  const int o4 = orientation(s2.a, s2.b, s1.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s1.a, s1.b, s2.a)) return true;
  if (o2 == 0 && on_segment(s1.a, s1.b, s2.b)) return true;
  if (o3 == 0 && on_segment(s2.a, s2.b, s1.a)) return true;
  if (o4 == 0 && on_segment(s2.a, s2.b, s1.b)) return true;
  return false;
}

}  // namespace qnav
