// Command-line front end: train / eval / report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnav/harness.hpp"

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DQN/DDQN mapless navigation trainer and evaluator"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train an agent on a scenario");
  int scenario = 1;
  std::string algo = "ddqn";
  int episodes = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config_path;
  train_cmd->add_option("--scenario", scenario, "Scenario id (1, 2 or 3)")
      ->required()
      ->check(CLI::Range(1, 3));
  train_cmd->add_option("--algo", algo, "dqn or ddqn")->required();
  train_cmd->add_option("--episodes", episodes, "Training episodes")
      ->required()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", seed, "Run seed")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--config", config_path,
                        "JSON file with env/agent overrides");
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint with a greedy policy");
  std::string checkpoint;
  int eval_scenario = 1;
  int trials_per_goal = 5;
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  int threads = 1;
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--scenario", eval_scenario, "Scenario id (1, 2 or 3)")
      ->required()
      ->check(CLI::Range(1, 3));
  eval_cmd
      ->add_option("--trials-per-goal", trials_per_goal,
                   "Trials for each of the 4 fixed goals")
      ->required()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();
  eval_cmd->add_option("--threads", threads, "Worker threads for the trials")
      ->check(CLI::PositiveNumber);

  // report
  auto* report_cmd =
      app.add_subcommand("report", "Tabulate evaluation summaries");
  std::vector<std::string> in_dirs;
  std::string format = "text";
  report_cmd->add_option("--in", in_dirs, "Evaluation output directories")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--format", format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      qnav::RunConfig cfg;
      cfg.scenario_id = scenario;
      cfg.algo = qnav::algo_from_string(algo);
      cfg.episodes = episodes;
      cfg.seed = seed;
      cfg.out_dir = out_dir;
      cfg.quiet = quiet;
      if (!config_path.empty()) {
        cfg = qnav::apply_run_config_json(cfg, read_file(config_path));
      }
      const qnav::TrainResult result = qnav::train(cfg);
      std::printf("trained %zu episodes; final checkpoint: %s\n",
                  result.episodes.size(),
                  result.final_checkpoint.string().c_str());
    } else if (eval_cmd->parsed()) {
      qnav::EvalRequest request;
      request.checkpoint = checkpoint;
      request.scenario_id = eval_scenario;
      request.trials_per_goal = trials_per_goal;
      request.seed = eval_seed;
      request.out_dir = eval_out;
      request.threads = threads;
      const qnav::EvalSummary summary = qnav::evaluate(request);
      std::printf("scenario %d %s: SR %.1f%% (%d/%d)\n", summary.scenario_id,
                  summary.algo.c_str(), summary.success_rate_pct,
                  summary.successes, summary.trials);
    } else if (report_cmd->parsed()) {
      std::vector<std::filesystem::path> dirs(in_dirs.begin(), in_dirs.end());
      const auto summaries = qnav::load_summaries(dirs);
      const auto fmt = format == "csv" ? qnav::ReportFormat::Csv
                                       : qnav::ReportFormat::Text;
      std::cout << qnav::format_report(summaries, fmt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
