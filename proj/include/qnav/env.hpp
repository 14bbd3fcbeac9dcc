#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>

#include "qnav/rng.hpp"
#include "qnav/world.hpp"

namespace qnav {

inline constexpr int kLidarBeams = 24;
inline constexpr int kObservationDim = kLidarBeams + 2;
inline constexpr int kNumActions = 5;

/// 24 normalized lidar readings, then normalized distance to goal, then
/// heading error scaled by 1/pi. Dynamic length so the learning stack also
/// works on low-dimensional test problems; the environment always emits
/// kObservationDim values.
using Observation = Eigen::VectorXd;

struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // wrapped to (-pi, pi]

  Vec2 position() const { return {x, y}; }
};

/// Discrete steering command. Forward speed is fixed; the index selects the
/// yaw rate.
struct Action {
  int index = 0;

  static constexpr std::array<double, kNumActions> kAngularVelocities{
      -1.5, -0.75, 0.0, 0.75, 1.5};

  explicit Action(int i);
  double angular_velocity() const { return kAngularVelocities[index]; }
};

enum class TerminalKind { None, Arrived, Collided, Idle };

std::string to_string(TerminalKind kind);

struct EnvConfig {
  double dt = 0.1;                  // seconds per control step
  double linear_velocity = 0.15;    // m/s, constant
  double arrive_threshold = 0.25;   // goal distance below which we succeed
  double collide_threshold = 0.12;  // min lidar reading that counts as a hit
  int max_steps = 500;
  double lidar_max_range = 3.5;
  int lidar_beams = kLidarBeams;
  double reward_arrive = 200.0;
  double reward_collide = -20.0;
  double reward_idle = 0.0;

  void validate() const;
};

// EnvConfig <-> JSON text (same structured format as world files).
EnvConfig env_config_from_json(const std::string& text);
std::string env_config_to_json(const EnvConfig& cfg);

struct StepInfo {
  double distance_to_goal = 0.0;
  double min_lidar = 0.0;
  int step_index = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  TerminalKind terminal = TerminalKind::None;
  StepInfo info;
};

/// Reward cases in order: arrive, collide, idle timeout, otherwise nothing.
/// Arrival wins when several conditions hold at once.
std::pair<double, TerminalKind> compute_reward(double distance_to_goal,
                                               double min_lidar,
                                               int step_index,
                                               const EnvConfig& cfg);

/// Raw ranges for beams at theta + 2*pi*k/beams, k = 0..beams-1.
Eigen::VectorXd lidar_scan(const World& world, const RobotPose& pose,
                           const EnvConfig& cfg);

/// Normalizes lidar by max range, goal distance by the arena diagonal
/// (clamped to 1) and heading error by pi.
Observation assemble_observation(const RobotPose& pose, const Vec2& goal,
                                 const Eigen::VectorXd& raw_lidar,
                                 const EnvConfig& cfg, double arena_diagonal);

/// Uniform draw from the goal region, rejected until the goal keeps more than
/// arrive_threshold clearance from all geometry.
Vec2 sample_goal(const World& world, Rng& rng, const EnvConfig& cfg);

/// Episode state machine around a World: reset spawns robot and goal, step
/// integrates the unicycle kinematics and scores the outcome. Single-owner;
/// run independent instances for parallel rollouts.
class Environment {
 public:
  Environment(World world, EnvConfig cfg);

  /// Seeds the episode RNG, samples goal (unless fixed) and spawn pose, and
  /// returns the initial observation.
  Observation reset(std::uint64_t seed,
                    std::optional<Vec2> fixed_goal = std::nullopt);

  /// Advances one control step. Throws std::logic_error if the episode has
  /// already ended.
  StepResult step(Action action);

  const World& world() const { return world_; }
  const EnvConfig& config() const { return cfg_; }
  const RobotPose& pose() const { return pose_; }
  const Vec2& goal() const { return goal_; }
  TerminalKind terminal() const { return terminal_; }
  bool done() const { return terminal_ != TerminalKind::None; }
  int step_count() const { return step_count_; }
  double arena_diagonal() const { return arena_diagonal_; }

 private:
  World world_;
  EnvConfig cfg_;
  double arena_diagonal_;
  Rng rng_{0};
  RobotPose pose_;
  Vec2 goal_{0.0, 0.0};
  TerminalKind terminal_ = TerminalKind::None;
  int step_count_ = 0;
  bool episode_started_ = false;
};

}  // namespace qnav
