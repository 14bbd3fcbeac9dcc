#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "qnav/env.hpp"
#include "qnav/network.hpp"
#include "qnav/replay.hpp"
#include "qnav/rng.hpp"

namespace qnav {

enum class Algo { DQN, DDQN };

Algo algo_from_string(const std::string& name);
std::string to_string(Algo algo);

/// Linear decay from eps_start at step 0 to eps_end at decay_steps.
/// decay_steps == 0 asks the training harness to derive the span (30% of
/// planned steps); epsilon_at and validate() want a resolved schedule.
struct EpsilonSchedule {
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::int64_t decay_steps = 0;
};

double epsilon_at(const EpsilonSchedule& schedule, std::int64_t global_step);

struct AgentConfig {
  double gamma = 0.99;
  int batch_size = 64;
  std::int64_t target_sync_interval = 2000;  // environment steps
  EpsilonSchedule epsilon;
  Algo algo = Algo::DDQN;
  double grad_clip_norm = 10.0;

  void validate() const;
};

AgentConfig agent_config_from_json(const std::string& text);
std::string agent_config_to_json(const AgentConfig& cfg);

/// Epsilon-greedy over a Q row; greedy ties break to the lowest index.
Action select_action(const Eigen::VectorXd& q_values, double epsilon,
                     Rng& rng);

/// y = r, or r + gamma * max(q_target_next) when the transition continues.
double dqn_target(double reward, bool done,
                  const Eigen::VectorXd& q_target_next, double gamma);

/// y = r, or r + gamma * q_target_next[argmax(q_online_next)]: the online
/// network picks the action, the target network prices it.
double ddqn_target(double reward, bool done,
                   const Eigen::VectorXd& q_online_next,
                   const Eigen::VectorXd& q_target_next, double gamma);

struct TrainStepStats {
  double mean_loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
};

/// One minibatch update of the online network against targets computed per
/// cfg.algo. Gradients are averaged over the batch, clipped by global norm,
/// then applied with Adam. The target network is never written.
TrainStepStats train_step(const AgentConfig& cfg, Mlp& online,
                          const Mlp& target, AdamState& adam,
                          std::span<const Transition> batch);

/// Hard-copies online into target when global_step is a multiple of the sync
/// interval; returns whether a copy happened.
bool maybe_sync_target(const AgentConfig& cfg, const Mlp& online, Mlp& target,
                       std::int64_t global_step);

}  // namespace qnav
