#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qnav/harness.hpp"

using namespace qnav;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("qnav_harness_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig tiny_run(const fs::path& out, Algo algo = Algo::DDQN) {
  RunConfig cfg;
  cfg.scenario_id = 1;
  cfg.algo = algo;
  cfg.episodes = 3;
  cfg.seed = 11;
  cfg.out_dir = out;
  cfg.warmup_size = 64;
  cfg.quiet = true;
  return cfg;
}

// Steers toward the goal with the turn that best cancels the heading error,
// driving straight once aligned. A sanity reference for the eval harness.
Policy scripted_goal_seeker(const EnvConfig& cfg) {
  return [cfg](const Observation& obs) {
    const double heading_error = obs[obs.size() - 1] * M_PI;
    int best = 2;
    double best_abs = 1e9;
    for (int a = 0; a < kNumActions; ++a) {
      const double next = std::abs(
          wrap_angle(heading_error - Action(a).angular_velocity() * cfg.dt));
      if (next < best_abs) {
        best_abs = next;
        best = a;
      }
    }
    return Action(best);
  };
}

}  // namespace

TEST_CASE("train with one episode writes a header plus one row") {
  TempDir dir("one_ep");
  RunConfig cfg = tiny_run(dir.path);
  cfg.episodes = 1;
  const TrainResult result = train(cfg);
  CHECK(result.episodes.size() == 1);
  const std::string csv = slurp(result.episode_csv);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 2);
  CHECK(csv.rfind("episode,reward,steps,outcome,epsilon,sim_seconds\n", 0) ==
        0);
  CHECK(fs::exists(result.final_checkpoint));
}

TEST_CASE("training is byte-deterministic in config and seed") {
  TempDir dir_a("det_a");
  TempDir dir_b("det_b");
  RunConfig cfg_a = tiny_run(dir_a.path);
  RunConfig cfg_b = tiny_run(dir_b.path);
  train(cfg_a);
  train(cfg_b);
  CHECK(slurp(dir_a.path / "episodes.csv") ==
        slurp(dir_b.path / "episodes.csv"));
  CHECK(slurp(dir_a.path / "checkpoint_final.qnav") ==
        slurp(dir_b.path / "checkpoint_final.qnav"));

  // A different seed changes the log.
  TempDir dir_c("det_c");
  RunConfig cfg_c = tiny_run(dir_c.path);
  cfg_c.seed = 12;
  train(cfg_c);
  CHECK(slurp(dir_a.path / "episodes.csv") !=
        slurp(dir_c.path / "episodes.csv"));
}

TEST_CASE("episode records stay within the step budget") {
  TempDir dir("budget");
  RunConfig cfg = tiny_run(dir.path);
  cfg.episodes = 5;
  const TrainResult result = train(cfg);
  for (const EpisodeRecord& r : result.episodes) {
    CHECK(r.steps >= 1);
    CHECK(r.steps <= cfg.env.max_steps);
    CHECK(r.outcome != TerminalKind::None);
    CHECK(r.sim_seconds == doctest::Approx(r.steps * cfg.env.dt));
  }
}

TEST_CASE("periodic checkpoints appear at the configured cadence") {
  TempDir dir("cadence");
  RunConfig cfg = tiny_run(dir.path);
  cfg.episodes = 5;
  cfg.checkpoint_interval = 2;
  train(cfg);
  CHECK(fs::exists(dir.path / "checkpoint_ep000002.qnav"));
  CHECK(fs::exists(dir.path / "checkpoint_ep000004.qnav"));
  CHECK(fs::exists(dir.path / "checkpoint_final.qnav"));
}

TEST_CASE("invalid run configs are rejected before any episode") {
  RunConfig cfg = tiny_run("/tmp/qnav_never");
  cfg.episodes = 0;
  CHECK_THROWS_AS(train(cfg), std::invalid_argument);
  cfg = tiny_run("/tmp/qnav_never");
  cfg.scenario_id = 9;
  CHECK_THROWS_AS(train(cfg), std::out_of_range);
  CHECK(!fs::exists("/tmp/qnav_never"));
}

TEST_CASE("run config JSON overrides nested sections") {
  RunConfig base = tiny_run("/tmp/unused");
  const RunConfig cfg = apply_run_config_json(base, R"({
    "env": {"dt": 0.2},
    "agent": {"gamma": 0.9, "epsilon": {"decay_steps": 777}},
    "replay_capacity": 5000,
    "warmup_size": 100
  })");
  CHECK(cfg.env.dt == 0.2);
  CHECK(cfg.agent.gamma == 0.9);
  CHECK(cfg.agent.epsilon.decay_steps == 777);
  CHECK(cfg.replay_capacity == 5000);
  CHECK(cfg.warmup_size == 100);
  CHECK_THROWS_AS(apply_run_config_json(base, "{oops"), std::runtime_error);
}

TEST_CASE("scripted goal seeker reaches every fixed goal in the empty arena") {
  const World world = builtin_scenario(1);
  const EnvConfig env_cfg;
  const auto goals = default_eval_goals(world);
  REQUIRE(goals.size() == 4);
  for (const Vec2& g : goals) {
    CHECK(g.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  }
  const auto trials = run_policy_trials(world, env_cfg,
                                        scripted_goal_seeker(env_cfg), goals,
                                        5, 2024, 1);
  REQUIRE(trials.size() == 20);
  const EvalSummary summary = summarize_trials(trials, 1, "scripted");
  CHECK(summary.success_rate_pct == 100.0);
  CHECK(summary.successes == 20);
  REQUIRE(summary.episode_time_mean_s.has_value());
  CHECK(*summary.episode_time_mean_s > 0.0);
}

TEST_CASE("trial workers do not change results") {
  const World world = builtin_scenario(2);
  const EnvConfig env_cfg;
  const auto goals = default_eval_goals(world);
  const Policy policy = scripted_goal_seeker(env_cfg);
  const auto serial = run_policy_trials(world, env_cfg, policy, goals, 3, 7, 1);
  const auto parallel =
      run_policy_trials(world, env_cfg, policy, goals, 3, 7, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].outcome == parallel[i].outcome);
    CHECK(serial[i].steps == parallel[i].steps);
    CHECK(serial[i].goal == parallel[i].goal);
  }
}

TEST_CASE("a policy that only collides summarizes to zero with absent times") {
  const World world = builtin_scenario(2);
  const EnvConfig env_cfg;
  // Full-left lock forever: tight circles until something is hit, or idle.
  const Policy spinner = [](const Observation&) { return Action(0); };
  const auto trials = run_policy_trials(world, env_cfg, spinner,
                                        default_eval_goals(world), 2, 3, 1);
  const EvalSummary summary = summarize_trials(trials, 2, "spinner");
  CHECK(summary.successes == 0);
  CHECK(summary.success_rate_pct == 0.0);
  CHECK(!summary.episode_time_mean_s.has_value());
  const std::string text = format_report({&summary, 1}, ReportFormat::Text);
  CHECK(text.find("—") != std::string::npos);
}

TEST_CASE("evaluate runs a trained checkpoint end to end") {
  TempDir dir("eval");
  RunConfig cfg = tiny_run(dir.path / "train");
  cfg.episodes = 2;
  const TrainResult trained = train(cfg);

  EvalRequest request;
  request.checkpoint = trained.final_checkpoint;
  request.scenario_id = 1;
  request.trials_per_goal = 2;
  request.seed = 5;
  request.out_dir = dir.path / "eval";
  const EvalSummary summary = evaluate(request);
  CHECK(summary.trials == 8);
  CHECK(summary.algo == "ddqn");
  CHECK(fs::exists(request.out_dir / "trials.csv"));
  CHECK(fs::exists(request.out_dir / "summary.json"));

  // Determinism: a second evaluation reproduces the files byte for byte.
  EvalRequest again = request;
  again.out_dir = dir.path / "eval2";
  evaluate(again);
  CHECK(slurp(request.out_dir / "trials.csv") ==
        slurp(again.out_dir / "trials.csv"));
  CHECK(slurp(request.out_dir / "summary.json") ==
        slurp(again.out_dir / "summary.json"));

  // Evaluation never mutates the checkpoint.
  const std::string ckpt_before = slurp(trained.final_checkpoint);
  evaluate(request);
  CHECK(slurp(trained.final_checkpoint) == ckpt_before);

  // The summaries round-trip through the report machinery.
  const auto loaded = load_summaries(std::vector<fs::path>{request.out_dir});
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].trials == summary.trials);
  CHECK(loaded[0].success_rate_pct == summary.success_rate_pct);
}

TEST_CASE("report formats text and CSV, and CSV re-parses exactly") {
  EvalSummary a;
  a.scenario_id = 2;
  a.algo = "dqn";
  a.trials = 20;
  a.successes = 10;
  a.success_rate_pct = 50.0;
  a.episode_time_mean_s = 11.39;
  a.episode_time_std_s = 4.24;
  EvalSummary b = a;
  b.algo = "ddqn";
  b.successes = 20;
  b.success_rate_pct = 100.0;
  b.episode_time_mean_s = 20.11;
  b.episode_time_std_s = 5.88;
  const std::vector<EvalSummary> summaries{a, b};

  const std::string text = format_report(summaries, ReportFormat::Text);
  CHECK(text.find("dqn") != std::string::npos);
  CHECK(text.find("20.11") != std::string::npos);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 3);  // header + 2 rows

  const std::string csv = format_report(summaries, ReportFormat::Csv);
  const auto parsed = parse_report_csv(csv);
  REQUIRE(parsed.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(parsed[i].scenario_id == summaries[i].scenario_id);
    CHECK(parsed[i].algo == summaries[i].algo);
    CHECK(parsed[i].trials == summaries[i].trials);
    CHECK(parsed[i].success_rate_pct == summaries[i].success_rate_pct);
    CHECK(*parsed[i].episode_time_mean_s == *summaries[i].episode_time_mean_s);
    CHECK(*parsed[i].episode_time_std_s == *summaries[i].episode_time_std_s);
  }

  // Absent statistics render as empty CSV fields and re-parse as absent.
  EvalSummary none = a;
  none.successes = 0;
  none.success_rate_pct = 0.0;
  none.episode_time_mean_s.reset();
  none.episode_time_std_s.reset();
  const auto reparsed =
      parse_report_csv(format_report({&none, 1}, ReportFormat::Csv));
  REQUIRE(reparsed.size() == 1);
  CHECK(!reparsed[0].episode_time_mean_s.has_value());
}
