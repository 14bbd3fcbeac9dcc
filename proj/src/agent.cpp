#include "qnav/agent.hpp"

#include <stdexcept>

#include "json.hpp"

namespace qnav {

Algo algo_from_string(const std::string& name) {
  if (name == "dqn" || name == "DQN") return Algo::DQN;
  if (name == "ddqn" || name == "DDQN") return Algo::DDQN;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "', expected dqn or ddqn");
}

std::string to_string(Algo algo) {
  return algo == Algo::DQN ? "dqn" : "ddqn";
}

double epsilon_at(const EpsilonSchedule& schedule, std::int64_t global_step) {
  if (global_step >= schedule.decay_steps) return schedule.eps_end;
  const double frac =
      static_cast<double>(global_step) / static_cast<double>(schedule.decay_steps);
  return schedule.eps_start + frac * (schedule.eps_end - schedule.eps_start);
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("AgentConfig: gamma must be in [0, 1)");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("AgentConfig: batch_size must be >= 1");
  }
  if (target_sync_interval < 1) {
    throw std::invalid_argument(
        "AgentConfig: target_sync_interval must be >= 1");
  }
  if (!(epsilon.eps_end >= 0.0 && epsilon.eps_end <= epsilon.eps_start &&
        epsilon.eps_start <= 1.0)) {
    throw std::invalid_argument(
        "AgentConfig: need 0 <= eps_end <= eps_start <= 1");
  }
  if (epsilon.decay_steps < 1) {
    throw std::invalid_argument("AgentConfig: decay_steps must be >= 1");
  }
}

AgentConfig agent_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("agent config parse error: ") +
                             e.what());
  }
  AgentConfig cfg;
  auto get = [](const nlohmann::json& obj, const char* key, auto& out) {
    if (auto it = obj.find(key); it != obj.end()) out = *it;
  };
  get(j, "gamma", cfg.gamma);
  get(j, "batch_size", cfg.batch_size);
  get(j, "target_sync_interval", cfg.target_sync_interval);
  get(j, "grad_clip_norm", cfg.grad_clip_norm);
  if (auto it = j.find("epsilon"); it != j.end()) {
    get(*it, "start", cfg.epsilon.eps_start);
    get(*it, "end", cfg.epsilon.eps_end);
    get(*it, "decay_steps", cfg.epsilon.decay_steps);
  }
  if (auto it = j.find("algo"); it != j.end()) {
    cfg.algo = algo_from_string(it->get<std::string>());
  }
  return cfg;
}

std::string agent_config_to_json(const AgentConfig& cfg) {
  nlohmann::ordered_json j;
  j["gamma"] = cfg.gamma;
  j["batch_size"] = cfg.batch_size;
  j["target_sync_interval"] = cfg.target_sync_interval;
  j["epsilon"] = {{"start", cfg.epsilon.eps_start},
                  {"end", cfg.epsilon.eps_end},
                  {"decay_steps", cfg.epsilon.decay_steps}};
  j["algo"] = to_string(cfg.algo);
  j["grad_clip_norm"] = cfg.grad_clip_norm;
  return j.dump(2) + "\n";
}

namespace {

int argmax_lowest(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);  // Eigen returns the first maximal coefficient
  return static_cast<int>(best);
}

}  // namespace

Action select_action(const Eigen::VectorXd& q_values, double epsilon,
                     Rng& rng) {
  if (epsilon > 0.0 && rng.uniform01() < epsilon) {
    return Action(rng.uniform_int(static_cast<int>(q_values.size())));
  }
  return Action(argmax_lowest(q_values));
}

double dqn_target(double reward, bool done,
                  const Eigen::VectorXd& q_target_next, double gamma) {
  if (done) return reward;
  return reward + gamma * q_target_next.maxCoeff();
}

double ddqn_target(double reward, bool done,
                   const Eigen::VectorXd& q_online_next,
                   const Eigen::VectorXd& q_target_next, double gamma) {
  if (done) return reward;
  return reward + gamma * q_target_next[argmax_lowest(q_online_next)];
}

TrainStepStats train_step(const AgentConfig& cfg, Mlp& online,
                          const Mlp& target, AdamState& adam,
                          std::span<const Transition> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("train_step: batch must be nonempty");
  }
  const auto batch_size = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(online.input_dim(), batch_size);
  Eigen::MatrixXd next_states(online.input_dim(), batch_size);
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    states.col(i) = batch[i].state;
    next_states.col(i) = batch[i].next_state;
  }

  const Eigen::MatrixXd q_target_next = forward_batch(target, next_states);
  Eigen::MatrixXd q_online_next;
  if (cfg.algo == Algo::DDQN) {
    q_online_next = forward_batch(online, next_states);
  }

  std::vector<int> actions(batch.size());
  std::vector<double> targets(batch.size());
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    actions[i] = batch[i].action;
    targets[i] =
        cfg.algo == Algo::DDQN
            ? ddqn_target(batch[i].reward, batch[i].done, q_online_next.col(i),
                          q_target_next.col(i), cfg.gamma)
            : dqn_target(batch[i].reward, batch[i].done, q_target_next.col(i),
                         cfg.gamma);
  }

  BackwardResult back = backward_batch(online, states, actions, targets);
  TrainStepStats stats;
  stats.mean_loss = back.loss;
  stats.grad_norm = clip_gradient_norm(back.grads, cfg.grad_clip_norm);
  stats.clipped = stats.grad_norm > cfg.grad_clip_norm;
  adam_step(online, back.grads, adam);
  return stats;
}

bool maybe_sync_target(const AgentConfig& cfg, const Mlp& online, Mlp& target,
                       std::int64_t global_step) {
  if (global_step % cfg.target_sync_interval != 0) return false;
  copy_weights(online, target);
  return true;
}

}  // namespace qnav
