#include "qnav/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace qnav {

namespace {

// Independent seed streams derived from the run seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamAction = 2;
constexpr std::uint64_t kStreamSample = 3;
constexpr std::uint64_t kStreamEpisode = 4;
constexpr std::uint64_t kStreamEval = 5;

std::string csv_double(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path.string());
  }
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

RunConfig apply_run_config_json(RunConfig base, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("run config parse error: ") +
                             e.what());
  }
  if (auto it = j.find("env"); it != j.end()) {
    base.env = env_config_from_json(it->dump());
  }
  if (auto it = j.find("agent"); it != j.end()) {
    base.agent = agent_config_from_json(it->dump());
  }
  auto get = [&j](const char* key, auto& out) {
    if (auto it = j.find(key); it != j.end()) out = *it;
  };
  get("replay_capacity", base.replay_capacity);
  get("warmup_size", base.warmup_size);
  get("checkpoint_interval", base.checkpoint_interval);
  return base;
}

namespace {

std::string episode_csv_row(const EpisodeRecord& r) {
  std::string row = std::to_string(r.episode_index);
  row += ',' + csv_double(r.total_reward);
  row += ',' + std::to_string(r.steps);
  row += ',' + to_string(r.outcome);
  row += ',' + csv_double(r.epsilon_at_end, "%.6f");
  row += ',' + csv_double(r.sim_seconds, "%.3f");
  row += '\n';
  return row;
}

CheckpointMeta run_meta(const RunConfig& cfg, const AgentConfig& agent,
                        int episodes_completed) {
  CheckpointMeta meta;
  meta["algo"] = to_string(agent.algo);
  meta["scenario_id"] = std::to_string(cfg.scenario_id);
  meta["episodes"] = std::to_string(cfg.episodes);
  meta["episodes_completed"] = std::to_string(episodes_completed);
  meta["seed"] = std::to_string(cfg.seed);
  meta["agent_config"] = agent_config_to_json(agent);
  meta["env_config"] = env_config_to_json(cfg.env);
  return meta;
}

}  // namespace

TrainResult train(const RunConfig& cfg) {
  if (cfg.episodes < 1) {
    throw std::invalid_argument("train: episodes must be >= 1");
  }
  if (cfg.warmup_size < 1) {
    throw std::invalid_argument("train: warmup_size must be >= 1");
  }
  cfg.env.validate();
  AgentConfig agent_cfg = cfg.agent;
  agent_cfg.algo = cfg.algo;
  if (agent_cfg.epsilon.decay_steps <= 0) {
    // Planned steps = episodes * step cap; decay over the first 30%.
    agent_cfg.epsilon.decay_steps = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(0.3 * cfg.episodes * cfg.env.max_steps));
  }
  agent_cfg.validate();

  World world = builtin_scenario(cfg.scenario_id);
  Environment env(std::move(world), cfg.env);

  std::filesystem::create_directories(cfg.out_dir);
  const auto csv_path = cfg.out_dir / "episodes.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) {
    throw std::runtime_error("train: cannot write episode log: " +
                             csv_path.string());
  }
  csv << "episode,reward,steps,outcome,epsilon,sim_seconds\n";
  write_text_file(cfg.out_dir / "run_config.json",
                  std::string("{\n  \"scenario_id\": ") +
                      std::to_string(cfg.scenario_id) + ",\n  \"algo\": \"" +
                      to_string(agent_cfg.algo) + "\",\n  \"episodes\": " +
                      std::to_string(cfg.episodes) + ",\n  \"seed\": " +
                      std::to_string(cfg.seed) + "\n}\n");

  Mlp online({kObservationDim, 256, 256, 256, kNumActions});
  Rng init_rng(mix_seed(cfg.seed, kStreamInit));
  init_weights(online, init_rng);
  Mlp target = online;
  AdamState adam(online);
  ReplayBuffer replay(cfg.replay_capacity);
  Rng action_rng(mix_seed(cfg.seed, kStreamAction));
  Rng sample_rng(mix_seed(cfg.seed, kStreamSample));

  TrainResult result;
  result.episode_csv = csv_path;
  std::int64_t global_step = 0;
  std::int64_t clipped_steps = 0;
  int trailing_arrivals = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Observation obs =
        env.reset(mix_seed(mix_seed(cfg.seed, kStreamEpisode), ep));
    double total_reward = 0.0;
    double epsilon = 0.0;
    TerminalKind outcome = TerminalKind::None;
    while (!env.done()) {
      epsilon = epsilon_at(agent_cfg.epsilon, global_step);
      const Action action =
          select_action(forward(online, obs), epsilon, action_rng);
      const StepResult sr = env.step(action);
      replay.push({obs, action.index, sr.reward, sr.observation,
                   sr.terminal != TerminalKind::None});
      obs = sr.observation;
      total_reward += sr.reward;
      outcome = sr.terminal;
      ++global_step;
      if (replay.size() >= cfg.warmup_size) {
        auto batch = replay.sample_batch(agent_cfg.batch_size, sample_rng);
        const TrainStepStats stats =
            train_step(agent_cfg, online, target, adam, *batch);
        if (stats.clipped) ++clipped_steps;
      }
      maybe_sync_target(agent_cfg, online, target, global_step);
    }

    EpisodeRecord record{ep,      total_reward,
                         env.step_count(), outcome,
                         epsilon, env.step_count() * cfg.env.dt};
    csv << episode_csv_row(record);
    result.episodes.push_back(record);
    if (outcome == TerminalKind::Arrived) ++trailing_arrivals;
    if (ep >= 100 &&
        result.episodes[ep - 100].outcome == TerminalKind::Arrived) {
      --trailing_arrivals;
    }

    if (!cfg.quiet && (ep + 1) % 50 == 0) {
      std::printf(
          "[train %s s%d] ep %d/%d steps %lld eps %.3f sr100 %.2f clip %lld\n",
          to_string(agent_cfg.algo).c_str(), cfg.scenario_id, ep + 1,
          cfg.episodes, static_cast<long long>(global_step), epsilon,
          trailing_arrivals / std::min(100.0, ep + 1.0),
          static_cast<long long>(clipped_steps));
      std::fflush(stdout);
    }

    if (cfg.checkpoint_interval > 0 && (ep + 1) % cfg.checkpoint_interval == 0 &&
        ep + 1 < cfg.episodes) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_ep%06d.qnav", ep + 1);
      save_checkpoint(cfg.out_dir / name, online, adam,
                      run_meta(cfg, agent_cfg, ep + 1));
    }
  }

  csv.close();
  if (!csv) {
    throw std::runtime_error("train: episode log write failed: " +
                             csv_path.string());
  }
  result.final_checkpoint = cfg.out_dir / "checkpoint_final.qnav";
  save_checkpoint(result.final_checkpoint, online, adam,
                  run_meta(cfg, agent_cfg, cfg.episodes));
  return result;
}

Policy greedy_policy(const Mlp& net) {
  return [&net](const Observation& obs) {
    Eigen::Index best = 0;
    forward(net, obs).maxCoeff(&best);
    return Action(static_cast<int>(best));
  };
}

std::vector<Vec2> default_eval_goals(const World& world) {
  const Aabb& region = world.goal_region;
  const double inset =
      std::min({0.5, region.width() / 2.0, region.height() / 2.0});
  return {{region.min.x() + inset, region.min.y() + inset},
          {region.max.x() - inset, region.min.y() + inset},
          {region.min.x() + inset, region.max.y() - inset},
          {region.max.x() - inset, region.max.y() - inset}};
}

std::vector<TrialResult> run_policy_trials(const World& world,
                                           const EnvConfig& env_cfg,
                                           const Policy& policy,
                                           std::span<const Vec2> goals,
                                           int trials_per_goal,
                                           std::uint64_t seed, int threads) {
  if (goals.empty() || trials_per_goal < 1) {
    throw std::invalid_argument("run_policy_trials: nothing to run");
  }
  const int total = static_cast<int>(goals.size()) * trials_per_goal;
  std::vector<TrialResult> results(total);

  auto run_range = [&](int begin, int end) {
    Environment env(world, env_cfg);
    for (int t = begin; t < end; ++t) {
      const int goal_index = t / trials_per_goal;
      TrialResult& r = results[t];
      r.trial_index = t;
      r.goal_index = goal_index;
      r.goal = goals[goal_index];
      Observation obs =
          env.reset(mix_seed(mix_seed(seed, kStreamEval), t), r.goal);
      while (!env.done()) {
        const StepResult sr = env.step(policy(obs));
        obs = sr.observation;
        r.total_reward += sr.reward;
        r.outcome = sr.terminal;
      }
      r.steps = env.step_count();
      r.time_seconds = env.step_count() * env_cfg.dt;
    }
  };

  threads = std::clamp(threads, 1, total);
  if (threads == 1) {
    run_range(0, total);
  } else {
    // Trials are seeded independently, so the split cannot change results.
    std::vector<std::thread> workers;
    const int chunk = (total + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int begin = w * chunk;
      const int end = std::min(total, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back(run_range, begin, end);
    }
    for (auto& worker : workers) worker.join();
  }
  return results;
}

EvalSummary summarize_trials(std::span<const TrialResult> trials,
                             int scenario_id, const std::string& algo) {
  EvalSummary summary;
  summary.scenario_id = scenario_id;
  summary.algo = algo;
  summary.trials = static_cast<int>(trials.size());
  std::vector<double> times;
  for (const TrialResult& t : trials) {
    if (t.outcome == TerminalKind::Arrived) {
      ++summary.successes;
      times.push_back(t.time_seconds);
    }
  }
  summary.success_rate_pct =
      summary.trials == 0 ? 0.0 : 100.0 * summary.successes / summary.trials;
  if (!times.empty()) {
    const double mean =
        std::accumulate(times.begin(), times.end(), 0.0) / times.size();
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    var = times.size() > 1 ? var / (times.size() - 1) : 0.0;
    summary.episode_time_mean_s = mean;
    summary.episode_time_std_s = std::sqrt(var);
  }
  return summary;
}

namespace {

std::string trials_csv(std::span<const TrialResult> trials) {
  std::string text =
      "trial,goal_index,goal_x,goal_y,outcome,steps,time_seconds\n";
  for (const TrialResult& t : trials) {
    text += std::to_string(t.trial_index);
    text += ',' + std::to_string(t.goal_index);
    text += ',' + csv_double(t.goal.x());
    text += ',' + csv_double(t.goal.y());
    text += ',' + to_string(t.outcome);
    text += ',' + std::to_string(t.steps);
    text += ',' + csv_double(t.time_seconds, "%.3f");
    text += '\n';
  }
  return text;
}

std::string summary_json(const EvalSummary& s) {
  nlohmann::ordered_json j;
  j["scenario_id"] = s.scenario_id;
  j["algo"] = s.algo;
  j["trials"] = s.trials;
  j["successes"] = s.successes;
  j["success_rate_pct"] = s.success_rate_pct;
  if (s.episode_time_mean_s) {
    j["episode_time_mean_s"] = *s.episode_time_mean_s;
    j["episode_time_std_s"] = *s.episode_time_std_s;
  } else {
    j["episode_time_mean_s"] = nullptr;
    j["episode_time_std_s"] = nullptr;
  }
  return j.dump(2) + "\n";
}

EvalSummary summary_from_json(const std::string& text,
                              const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("summary parse error in " + where + ": " +
                             e.what());
  }
  EvalSummary s;
  s.scenario_id = j.at("scenario_id").get<int>();
  s.algo = j.at("algo").get<std::string>();
  s.trials = j.at("trials").get<int>();
  s.successes = j.at("successes").get<int>();
  s.success_rate_pct = j.at("success_rate_pct").get<double>();
  if (j.contains("episode_time_mean_s") && !j["episode_time_mean_s"].is_null()) {
    s.episode_time_mean_s = j["episode_time_mean_s"].get<double>();
    s.episode_time_std_s = j["episode_time_std_s"].get<double>();
  }
  return s;
}

}  // namespace

EvalSummary evaluate(const EvalRequest& request) {
  const Checkpoint ckpt = load_checkpoint(request.checkpoint);
  if (ckpt.net.input_dim() != kObservationDim ||
      ckpt.net.output_dim() != kNumActions) {
    throw std::runtime_error(
        "checkpoint dimension mismatch: network is " +
        std::to_string(ckpt.net.input_dim()) + "->" +
        std::to_string(ckpt.net.output_dim()) + ", environment needs " +
        std::to_string(kObservationDim) + "->" + std::to_string(kNumActions));
  }
  EnvConfig env_cfg;
  if (auto it = ckpt.meta.find("env_config"); it != ckpt.meta.end()) {
    env_cfg = env_config_from_json(it->second);
  }
  std::string algo = "unknown";
  if (auto it = ckpt.meta.find("algo"); it != ckpt.meta.end()) {
    algo = it->second;
  }

  const World world = builtin_scenario(request.scenario_id);
  const std::vector<Vec2> goals = default_eval_goals(world);
  const std::vector<TrialResult> trials =
      run_policy_trials(world, env_cfg, greedy_policy(ckpt.net), goals,
                        request.trials_per_goal, request.seed, request.threads);
  const EvalSummary summary =
      summarize_trials(trials, request.scenario_id, algo);
  if (!request.out_dir.empty()) {
    std::filesystem::create_directories(request.out_dir);
    write_text_file(request.out_dir / "trials.csv", trials_csv(trials));
    write_text_file(request.out_dir / "summary.json", summary_json(summary));
  }
  return summary;
}

std::string format_report(std::span<const EvalSummary> summaries,
                          ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out =
        "env,algorithm,trials,successes,success_rate_pct,"
        "episode_time_mean_s,episode_time_std_s\n";
    for (const EvalSummary& s : summaries) {
      out += std::to_string(s.scenario_id);
      out += ',' + s.algo;
      out += ',' + std::to_string(s.trials);
      out += ',' + std::to_string(s.successes);
      out += ',' + csv_double(s.success_rate_pct, "%.17g");
      out += ',';
      if (s.episode_time_mean_s) out += csv_double(*s.episode_time_mean_s, "%.17g");
      out += ',';
      if (s.episode_time_std_s) out += csv_double(*s.episode_time_std_s, "%.17g");
      out += '\n';
    }
    return out;
  }
  out = "Env  Algorithm  ET (s)            SR (%)\n";
  for (const EvalSummary& s : summaries) {
    char et[32] = "—";
    if (s.episode_time_mean_s) {
      std::snprintf(et, sizeof(et), "%.2f ± %.2f", *s.episode_time_mean_s,
                    *s.episode_time_std_s);
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%-4d %-10s %-17s %.1f\n", s.scenario_id,
                  s.algo.c_str(), et, s.success_rate_pct);
    out += line;
  }
  return out;
}

std::vector<EvalSummary> load_summaries(
    std::span<const std::filesystem::path> dirs) {
  std::vector<EvalSummary> summaries;
  for (const auto& dir : dirs) {
    const auto path = dir / "summary.json";
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("no summary.json in " + dir.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    summaries.push_back(summary_from_json(buf.str(), path.string()));
  }
  std::ranges::sort(summaries, [](const EvalSummary& a, const EvalSummary& b) {
    return std::tie(a.scenario_id, a.algo) < std::tie(b.scenario_id, b.algo);
  });
  return summaries;
}

std::vector<EvalSummary> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EvalSummary> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    while (fields.size() < 7) fields.emplace_back();
    EvalSummary s;
    s.scenario_id = std::stoi(fields[0]);
    s.algo = fields[1];
    s.trials = std::stoi(fields[2]);
    s.successes = std::stoi(fields[3]);
    s.success_rate_pct = std::stod(fields[4]);
    if (!fields[5].empty()) s.episode_time_mean_s = std::stod(fields[5]);
    if (!fields[6].empty()) s.episode_time_std_s = std::stod(fields[6]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qnav
