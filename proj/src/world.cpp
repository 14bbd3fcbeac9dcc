#include "qnav/world.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qnav {

namespace {

using Json = nlohmann::ordered_json;

std::string element_error(const World& w, const std::string& what) {
  return "world '" + w.name + "': " + what;
}

}  // namespace

Aabb World::bounding_box() const {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const Vec2& v : boundary) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

void World::validate() {
  if (boundary.size() < 3) {
    throw std::invalid_argument(
        element_error(*this, "boundary needs at least 3 vertices, has " +
                                 std::to_string(boundary.size())));
  }
  const std::size_t n = boundary.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& v = boundary[i];
    const Vec2& next = boundary[(i + 1) % n];
    if (!v.allFinite()) {
      throw std::invalid_argument(element_error(
          *this, "boundary vertex " + std::to_string(i) + " is not finite"));
    }
    if (v == next) {
      throw std::invalid_argument(element_error(
          *this, "boundary vertex " + std::to_string((i + 1) % n) +
                     " coincides with vertex " + std::to_string(i) +
                     "; the boundary polygon is not closed"));
    }
  }
  bound_segs_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    bound_segs_.push_back({boundary[i], boundary[(i + 1) % n]});
  }
  // Non-adjacent boundary edges must not cross.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_intersect(bound_segs_[i], bound_segs_[j])) {
        throw std::invalid_argument(element_error(
            *this, "boundary edges " + std::to_string(i) + " and " +
                       std::to_string(j) + " intersect"));
      }
    }
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].a == segments[i].b) {
      throw std::invalid_argument(element_error(
          *this, "segment " + std::to_string(i) + " has zero length"));
    }
  }
  for (std::size_t i = 0; i < circles.size(); ++i) {
    if (!(circles[i].radius > 0.0)) {
      throw std::invalid_argument(element_error(
          *this, "circle " + std::to_string(i) + " has non-positive radius"));
    }
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!(boxes[i].min.x() < boxes[i].max.x()) ||
        !(boxes[i].min.y() < boxes[i].max.y())) {
      throw std::invalid_argument(element_error(
          *this, "box " + std::to_string(i) + " has empty extent"));
    }
  }
  for (const auto& [region, label] :
       {std::pair{&spawn_region, "spawn_region"},
        std::pair{&goal_region, "goal_region"}}) {
    if (region->min.x() > region->max.x() ||
        region->min.y() > region->max.y()) {
      throw std::invalid_argument(
          element_error(*this, std::string(label) + " has min > max"));
    }
    const Vec2 corners[4] = {region->min,
                             {region->max.x(), region->min.y()},
                             region->max,
                             {region->min.x(), region->max.y()}};
    for (const Vec2& c : corners) {
      if (!point_in_polygon(c, boundary)) {
        throw std::invalid_argument(element_error(
            *this, std::string(label) + " corner (" + std::to_string(c.x()) +
                       ", " + std::to_string(c.y()) +
                       ") lies outside the boundary polygon"));
      }
    }
    const Segment edges[4] = {{corners[0], corners[1]},
                              {corners[1], corners[2]},
                              {corners[2], corners[3]},
                              {corners[3], corners[0]}};
    for (const Segment& edge : edges) {
      for (const Segment& wall : bound_segs_) {
        if (segments_intersect(edge, wall)) {
          throw std::invalid_argument(element_error(
              *this, std::string(label) + " crosses the boundary polygon"));
        }
      }
    }
  }
}

bool operator==(const World& lhs, const World& rhs) {
  auto seg_eq = [](const Segment& a, const Segment& b) {
    return a.a == b.a && a.b == b.b;
  };
  auto circle_eq = [](const Circle& a, const Circle& b) {
    return a.center == b.center && a.radius == b.radius;
  };
  auto box_eq = [](const Aabb& a, const Aabb& b) {
    return a.min == b.min && a.max == b.max;
  };
  return lhs.name == rhs.name && lhs.boundary == rhs.boundary &&
         std::ranges::equal(lhs.segments, rhs.segments, seg_eq) &&
         std::ranges::equal(lhs.circles, rhs.circles, circle_eq) &&
         std::ranges::equal(lhs.boxes, rhs.boxes, box_eq) &&
         box_eq(lhs.spawn_region, rhs.spawn_region) &&
         box_eq(lhs.goal_region, rhs.goal_region);
}

bool inside_bounds(const World& world, const Vec2& p) {
  return point_in_polygon(p, world.boundary);
}

double ray_cast(const World& world, const Vec2& origin, double angle,
                double max_range) {
  if (!world.validated()) {
    throw std::logic_error("ray_cast: World::validate() was never called");
  }
  if (!(max_range > 0.0)) {
    throw std::invalid_argument("ray_cast: max_range must be positive");
  }
  if (!inside_bounds(world, origin)) {
    throw std::domain_error("ray_cast: origin is outside the world boundary");
  }
  const Vec2 dir = unit_from_angle(angle);
  double best = max_range;
  auto consider = [&best](const std::optional<double>& t) {
    if (t && *t < best) best = *t;
  };
  for (const Segment& s : world.boundary_segments()) {
    consider(ray_segment(origin, dir, s));
  }
  for (const Segment& s : world.segments) consider(ray_segment(origin, dir, s));
  for (const Circle& c : world.circles) consider(ray_circle(origin, dir, c));
  for (const Aabb& b : world.boxes) consider(ray_box(origin, dir, b));
  return best;
}

double min_obstacle_distance(const World& world, const Vec2& point) {
  if (!world.validated()) {
    throw std::logic_error(
        "min_obstacle_distance: World::validate() was never called");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : world.boundary_segments()) {
    best = std::min(best, point_segment_distance(point, s));
  }
  for (const Segment& s : world.segments) {
    best = std::min(best, point_segment_distance(point, s));
  }
  for (const Circle& c : world.circles) {
    best = std::min(best, point_circle_distance(point, c));
  }
  for (const Aabb& b : world.boxes) {
    best = std::min(best, point_box_distance(point, b));
  }
  return best;
}

namespace {

Vec2 parse_vec2(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw std::runtime_error("world parse error: " + where +
                             " must be a [x, y] number pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Aabb parse_rect(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("world parse error: " + where +
                             " must be [xmin, ymin, xmax, ymax]");
  }
  return {{j[0].get<double>(), j[1].get<double>()},
          {j[2].get<double>(), j[3].get<double>()}};
}

const Json& require_key(const Json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::runtime_error("world parse error: missing key '" + key + "'");
  }
  return *it;
}

Json rect_to_json(const Aabb& r) {
  return Json::array({r.min.x(), r.min.y(), r.max.x(), r.max.y()});
}

}  // namespace

World load_world(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("world parse error: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::runtime_error("world parse error: top level must be an object");
  }
  World w;
  w.name = require_key(j, "name").get<std::string>();
  const Json& bounds = require_key(j, "bounds");
  if (!bounds.is_array()) {
    throw std::runtime_error("world parse error: bounds must be an array");
  }
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    w.boundary.push_back(
        parse_vec2(bounds[i], "bounds[" + std::to_string(i) + "]"));
  }
  if (auto it = j.find("segments"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& s = (*it)[i];
      const std::string where = "segments[" + std::to_string(i) + "]";
      if (!s.is_array() || s.size() != 2) {
        throw std::runtime_error("world parse error: " + where +
                                 " must be [[x1,y1],[x2,y2]]");
      }
      w.segments.push_back(
          {parse_vec2(s[0], where + "[0]"), parse_vec2(s[1], where + "[1]")});
    }
  }
  if (auto it = j.find("circles"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& c = (*it)[i];
      if (!c.is_array() || c.size() != 3) {
        throw std::runtime_error("world parse error: circles[" +
                                 std::to_string(i) + "] must be [cx, cy, r]");
      }
      w.circles.push_back({{c[0].get<double>(), c[1].get<double>()},
                           c[2].get<double>()});
    }
  }
  if (auto it = j.find("boxes"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      w.boxes.push_back(
          parse_rect((*it)[i], "boxes[" + std::to_string(i) + "]"));
    }
  }
  w.spawn_region = parse_rect(require_key(j, "spawn_region"), "spawn_region");
  w.goal_region = parse_rect(require_key(j, "goal_region"), "goal_region");
  w.validate();
  return w;
}

World load_world_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open world file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_world(buf.str());
}

std::string serialize_world(const World& world) {
  Json j;
  j["name"] = world.name;
  Json bounds = Json::array();
  for (const Vec2& v : world.boundary) {
    bounds.push_back(Json::array({v.x(), v.y()}));
  }
  j["bounds"] = std::move(bounds);
  Json segments = Json::array();
  for (const Segment& s : world.segments) {
    segments.push_back(Json::array({Json::array({s.a.x(), s.a.y()}),
                                    Json::array({s.b.x(), s.b.y()})}));
  }
  j["segments"] = std::move(segments);
  Json circles = Json::array();
  for (const Circle& c : world.circles) {
    circles.push_back(Json::array({c.center.x(), c.center.y(), c.radius}));
  }
  j["circles"] = std::move(circles);
  Json boxes = Json::array();
  for (const Aabb& b : world.boxes) boxes.push_back(rect_to_json(b));
  j["boxes"] = std::move(boxes);
  j["spawn_region"] = rect_to_json(world.spawn_region);
  j["goal_region"] = rect_to_json(world.goal_region);
  return j.dump(2) + "\n";
}

World builtin_scenario(int id) {
  if (id < 1 || id > 3) {
    throw std::out_of_range("builtin_scenario: id must be 1, 2 or 3, got " +
                            std::to_string(id));
  }
  World w;
  w.name = "stage" + std::to_string(id);
  w.boundary = {{-2.0, -2.0}, {2.0, -2.0}, {2.0, 2.0}, {-2.0, 2.0}};
  w.spawn_region = {{-1.5, -1.5}, {1.5, 1.5}};
  w.goal_region = {{-1.5, -1.5}, {1.5, 1.5}};
  if (id == 2) {
    // Four 0.3 m square blocks in a 2x2 grid around the center.
    for (const double cy : {-0.6, 0.6}) {
      for (const double cx : {-0.6, 0.6}) {
        w.boxes.push_back({{cx - 0.15, cy - 0.15}, {cx + 0.15, cy + 0.15}});
      }
    }
  } else if (id == 3) {
    // Two rectangular bars plus two round pillars.
    w.boxes.push_back({{-1.4, 0.2}, {-0.6, 0.5}});
    w.boxes.push_back({{0.3, -0.6}, {0.6, 0.4}});
    w.circles.push_back({{-0.55, -0.55}, 0.2});
    w.circles.push_back({{1.1, 0.2}, 0.2});
  }
  w.validate();
  return w;
}

}  // namespace qnav
