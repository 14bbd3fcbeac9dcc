#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnav/agent.hpp"
#include "qnav/checkpoint.hpp"
#include "qnav/env.hpp"

namespace qnav {

struct EpisodeRecord {
  int episode_index = 0;
  double total_reward = 0.0;
  int steps = 0;
  TerminalKind outcome = TerminalKind::None;
  double epsilon_at_end = 0.0;
  double sim_seconds = 0.0;  // steps * dt; kept simulated so logs reproduce
};

struct EvalSummary {
  int scenario_id = 0;
  std::string algo;
  int trials = 0;
  int successes = 0;
  double success_rate_pct = 0.0;
  // Over successful trials only; absent when nothing succeeded.
  std::optional<double> episode_time_mean_s;
  std::optional<double> episode_time_std_s;
};

struct RunConfig {
  int scenario_id = 1;
  Algo algo = Algo::DDQN;
  int episodes = 1000;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  EnvConfig env;
  AgentConfig agent;  // epsilon.decay_steps == 0 derives 30% of planned steps
  std::size_t replay_capacity = 100000;
  std::size_t warmup_size = 1000;  // transitions stored before updates start
  int checkpoint_interval = 500;   // episodes
  bool quiet = false;
};

/// Applies "env"/"agent"/run-level keys from a JSON config file on top of
/// the given defaults.
RunConfig apply_run_config_json(RunConfig base, const std::string& text);

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  std::filesystem::path episode_csv;
  std::filesystem::path final_checkpoint;
};

/// Full training loop: per-episode random goals, epsilon-greedy acting,
/// replay, one update per environment step after warmup, periodic target
/// sync and checkpoints. Deterministic given (config, seed).
TrainResult train(const RunConfig& cfg);

using Policy = std::function<Action(const Observation&)>;

/// Greedy policy (epsilon = 0) for a trained network.
Policy greedy_policy(const Mlp& net);

struct TrialResult {
  int trial_index = 0;
  int goal_index = 0;
  Vec2 goal{0.0, 0.0};
  TerminalKind outcome = TerminalKind::None;
  int steps = 0;
  double time_seconds = 0.0;
  double total_reward = 0.0;
};

/// The four fixed evaluation goals: goal_region corners inset by 0.5 m.
std::vector<Vec2> default_eval_goals(const World& world);

/// Runs trials_per_goal seeded episodes per goal under the given policy.
/// Trials are independent, so they may be spread over worker threads; the
/// result order is by trial index either way.
std::vector<TrialResult> run_policy_trials(const World& world,
                                           const EnvConfig& env_cfg,
                                           const Policy& policy,
                                           std::span<const Vec2> goals,
                                           int trials_per_goal,
                                           std::uint64_t seed, int threads = 1);

EvalSummary summarize_trials(std::span<const TrialResult> trials,
                             int scenario_id, const std::string& algo);

struct EvalRequest {
  std::filesystem::path checkpoint;
  int scenario_id = 1;
  int trials_per_goal = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  int threads = 1;
};

/// Greedy evaluation of a checkpoint on a builtin scenario. Writes trials.csv
/// and summary.json under out_dir. The environment config is recovered from
/// the checkpoint metadata so evaluation matches training conditions.
EvalSummary evaluate(const EvalRequest& request);

enum class ReportFormat { Text, Csv };

std::string format_report(std::span<const EvalSummary> summaries,
                          ReportFormat format);

/// Reads summary.json from each directory, sorted by (scenario, algo).
std::vector<EvalSummary> load_summaries(
    std::span<const std::filesystem::path> dirs);

/// Inverse of format_report(..., Csv); used to close the report round trip.
std::vector<EvalSummary> parse_report_csv(const std::string& text);

}  // namespace qnav
