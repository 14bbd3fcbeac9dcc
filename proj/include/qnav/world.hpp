#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qnav/geometry.hpp"

namespace qnav {

/// Static 2D scene a lidar ray can hit: a closed boundary polygon plus
/// segment, circle and box obstacles. Immutable once constructed and safe to
/// share across threads.
struct World {
  std::string name;
  std::vector<Vec2> boundary;  // closed polygon, implicitly joined last->first
  std::vector<Segment> segments;
  std::vector<Circle> circles;
  std::vector<Aabb> boxes;
  Aabb spawn_region;
  Aabb goal_region;

  std::size_t obstacle_count() const {
    return segments.size() + circles.size() + boxes.size();
  }
  bool validated() const {
    return !boundary.empty() && bound_segs_.size() == boundary.size();
  }
  const std::vector<Segment>& boundary_segments() const { return bound_segs_; }
  Aabb bounding_box() const;
  double diagonal() const { return bounding_box().diagonal(); }

  /// Checks all structural invariants; throws std::invalid_argument naming the
  /// offending element. Must be called after filling the fields by hand;
  /// load_world and builtin_scenario call it themselves.
  void validate();

 private:
  std::vector<Segment> bound_segs_;  // cached by validate()
};

bool operator==(const World& lhs, const World& rhs);

bool inside_bounds(const World& world, const Vec2& p);

/// Distance along the ray from `origin` at `angle` to the nearest boundary or
/// obstacle surface, clipped to max_range. Result is in (0, max_range].
double ray_cast(const World& world, const Vec2& origin, double angle,
                double max_range);

/// Euclidean distance from `point` to the nearest geometry element
/// (boundary walls included); 0 inside a solid obstacle.
double min_obstacle_distance(const World& world, const Vec2& point);

// JSON world files; see README for the schema.
World load_world(const std::string& text);
World load_world_file(const std::filesystem::path& path);
std::string serialize_world(const World& world);

/// The three evaluation arenas: 1 = empty 4 m square, 2 = four box obstacles,
/// 3 = mixed boxes and circles.
World builtin_scenario(int id);

}  // namespace qnav
