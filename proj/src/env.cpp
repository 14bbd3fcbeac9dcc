#include "qnav/env.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace qnav {

namespace {
constexpr int kMaxRejectionTries = 1000;
}

Action::Action(int i) : index(i) {
  if (i < 0 || i >= kNumActions) {
    throw std::invalid_argument("Action index must be in [0, " +
                                std::to_string(kNumActions - 1) + "], got " +
                                std::to_string(i));
  }
}

std::string to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::None:
      return "none";
    case TerminalKind::Arrived:
      return "arrived";
    case TerminalKind::Collided:
      return "collided";
    case TerminalKind::Idle:
      return "idle";
  }
  return "unknown";
}

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("EnvConfig: dt must be > 0");
  if (!(collide_threshold < arrive_threshold)) {
    throw std::invalid_argument(
        "EnvConfig: collide_threshold must be below arrive_threshold");
  }
  if (max_steps <= 0) {
    throw std::invalid_argument("EnvConfig: max_steps must be > 0");
  }
  if (lidar_beams != kLidarBeams) {
    throw std::invalid_argument("EnvConfig: lidar_beams must be " +
                                std::to_string(kLidarBeams));
  }
  if (!(lidar_max_range > 0.0)) {
    throw std::invalid_argument("EnvConfig: lidar_max_range must be > 0");
  }
  if (!(linear_velocity > 0.0)) {
    throw std::invalid_argument("EnvConfig: linear_velocity must be > 0");
  }
}

EnvConfig env_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("env config parse error: ") +
                             e.what());
  }
  EnvConfig cfg;
  auto get = [&j](const char* key, auto& out) {
    if (auto it = j.find(key); it != j.end()) out = *it;
  };
  get("dt", cfg.dt);
  get("linear_velocity", cfg.linear_velocity);
  get("arrive_threshold", cfg.arrive_threshold);
  get("collide_threshold", cfg.collide_threshold);
  get("max_steps", cfg.max_steps);
  get("lidar_max_range", cfg.lidar_max_range);
  get("lidar_beams", cfg.lidar_beams);
  get("reward_arrive", cfg.reward_arrive);
  get("reward_collide", cfg.reward_collide);
  get("reward_idle", cfg.reward_idle);
  cfg.validate();
  return cfg;
}

std::string env_config_to_json(const EnvConfig& cfg) {
  nlohmann::ordered_json j;
  j["dt"] = cfg.dt;
  j["linear_velocity"] = cfg.linear_velocity;
  j["arrive_threshold"] = cfg.arrive_threshold;
  j["collide_threshold"] = cfg.collide_threshold;
  j["max_steps"] = cfg.max_steps;
  j["lidar_max_range"] = cfg.lidar_max_range;
  j["lidar_beams"] = cfg.lidar_beams;
  j["reward_arrive"] = cfg.reward_arrive;
  j["reward_collide"] = cfg.reward_collide;
  j["reward_idle"] = cfg.reward_idle;
  return j.dump(2) + "\n";
}

std::pair<double, TerminalKind> compute_reward(double distance_to_goal,
                                               double min_lidar,
                                               int step_index,
                                               const EnvConfig& cfg) {
  if (distance_to_goal < cfg.arrive_threshold) {
    return {cfg.reward_arrive, TerminalKind::Arrived};
  }
  if (min_lidar < cfg.collide_threshold) {
    return {cfg.reward_collide, TerminalKind::Collided};
  }
  if (step_index >= cfg.max_steps) {
    return {cfg.reward_idle, TerminalKind::Idle};
  }
  return {0.0, TerminalKind::None};
}

Eigen::VectorXd lidar_scan(const World& world, const RobotPose& pose,
                           const EnvConfig& cfg) {
  Eigen::VectorXd ranges(cfg.lidar_beams);
  const Vec2 origin = pose.position();
  for (int k = 0; k < cfg.lidar_beams; ++k) {
    const double angle = pose.theta + 2.0 * M_PI * k / cfg.lidar_beams;
    ranges[k] = ray_cast(world, origin, angle, cfg.lidar_max_range);
  }
  return ranges;
}

Observation assemble_observation(const RobotPose& pose, const Vec2& goal,
                                 const Eigen::VectorXd& raw_lidar,
                                 const EnvConfig& cfg, double arena_diagonal) {
  Observation obs(raw_lidar.size() + 2);
  obs.head(raw_lidar.size()) = raw_lidar / cfg.lidar_max_range;
  const Vec2 to_goal = goal - pose.position();
  obs[raw_lidar.size()] = std::min(to_goal.norm() / arena_diagonal, 1.0);
  const double bearing = std::atan2(to_goal.y(), to_goal.x());
  obs[raw_lidar.size() + 1] = wrap_angle(bearing - pose.theta) / M_PI;
  return obs;
}

Vec2 sample_goal(const World& world, Rng& rng, const EnvConfig& cfg) {
  const Aabb& region = world.goal_region;
  for (int tries = 0; tries < kMaxRejectionTries; ++tries) {
    const Vec2 goal{rng.uniform(region.min.x(), region.max.x()),
                    rng.uniform(region.min.y(), region.max.y())};
    if (min_obstacle_distance(world, goal) > cfg.arrive_threshold) {
      return goal;
    }
  }
  throw std::runtime_error(
      "sample_goal: no goal with enough clearance after " +
      std::to_string(kMaxRejectionTries) + " tries; goal_region unusable");
}

Environment::Environment(World world, EnvConfig cfg)
    : world_(std::move(world)),
      cfg_(cfg),
      arena_diagonal_(world_.diagonal()) {
  cfg_.validate();
}

Observation Environment::reset(std::uint64_t seed,
                               std::optional<Vec2> fixed_goal) {
  rng_ = Rng(seed);
  if (fixed_goal) {
    if (!world_.goal_region.contains(*fixed_goal)) {
      throw std::invalid_argument("reset: fixed goal lies outside goal_region");
    }
    if (min_obstacle_distance(world_, *fixed_goal) <= cfg_.collide_threshold) {
      throw std::invalid_argument(
          "reset: fixed goal has no clearance from geometry");
    }
    goal_ = *fixed_goal;
  } else {
    goal_ = sample_goal(world_, rng_, cfg_);
  }
  const Aabb& region = world_.spawn_region;
  bool placed = false;
  for (int tries = 0; tries < kMaxRejectionTries && !placed; ++tries) {
    RobotPose candidate;
    candidate.x = rng_.uniform(region.min.x(), region.max.x());
    candidate.y = rng_.uniform(region.min.y(), region.max.y());
    candidate.theta = wrap_angle(rng_.uniform(-M_PI, M_PI));
    if (min_obstacle_distance(world_, candidate.position()) <=
        cfg_.collide_threshold) {
      continue;
    }
    if ((candidate.position() - goal_).norm() < cfg_.arrive_threshold) {
      continue;
    }
    pose_ = candidate;
    placed = true;
  }
  if (!placed) {
    throw std::runtime_error(
        "reset: no spawn pose with enough clearance after " +
        std::to_string(kMaxRejectionTries) + " tries; spawn_region unusable");
  }
  terminal_ = TerminalKind::None;
  step_count_ = 0;
  episode_started_ = true;
  return assemble_observation(pose_, goal_, lidar_scan(world_, pose_, cfg_),
                              cfg_, arena_diagonal_);
}

StepResult Environment::step(Action action) {
  if (!episode_started_) {
    throw std::logic_error("step: call reset before step");
  }
  if (done()) {
    throw std::logic_error("step: episode already ended with outcome '" +
                           to_string(terminal_) + "'");
  }
  pose_.x += cfg_.linear_velocity * std::cos(pose_.theta) * cfg_.dt;
  pose_.y += cfg_.linear_velocity * std::sin(pose_.theta) * cfg_.dt;
  pose_.theta = wrap_angle(pose_.theta + action.angular_velocity() * cfg_.dt);
  ++step_count_;

  Eigen::VectorXd scan;
  double min_lidar;
  if (inside_bounds(world_, pose_.position())) {
    scan = lidar_scan(world_, pose_, cfg_);
    min_lidar = scan.minCoeff();
  } else {
    // The collision band is wider than one step of travel, so this only
    // happens with exotic configs; score it as a hit.
    scan = Eigen::VectorXd::Zero(cfg_.lidar_beams);
    min_lidar = 0.0;
  }
  const double distance_to_goal = (goal_ - pose_.position()).norm();
  const auto [reward, terminal] =
      compute_reward(distance_to_goal, min_lidar, step_count_, cfg_);
  terminal_ = terminal;

  StepResult result;
  result.observation =
      assemble_observation(pose_, goal_, scan, cfg_, arena_diagonal_);
  result.reward = reward;
  result.terminal = terminal;
  result.info = {distance_to_goal, min_lidar, step_count_};
  return result;
}

}  // namespace qnav
