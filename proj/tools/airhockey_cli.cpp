// airhockey: command-line front end for matches, tournaments, training,
// replay verification and latency benchmarks.

#include "airhockey/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace airhockey;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct Paths {
  std::string table, chain, rules, noise, strategies;
};

void add_common(CLI::App& cmd, RunConfig& run, Paths& paths, std::string& output_dir, std::optional<double>& ema) {
  cmd.add_option("--seed", run.seed, "Base random seed");
  cmd.add_option("--policies,-p", run.policies, "Policy specs: baseline, blocker, jitterer, idle, ensemble:<manifest> or a checkpoint path");
  cmd.add_option("--matches,-n", run.matches, "Matches to play (per ordered pair in a tournament)");
  cmd.add_option("--threads,-j", run.threads, "Worker threads")->envname("AIRHOCKEY_THREADS");
  cmd.add_option("--output-dir,-o", output_dir, "Directory for replays, checkpoints and reports")
      ->envname("AIRHOCKEY_OUTPUT_DIR");
  cmd.add_option("--table", paths.table, "Table config (JSON)");
  cmd.add_option("--chain", paths.chain, "Arm chain config (JSON)");
  cmd.add_option("--rules", paths.rules, "Match rules config (JSON)");
  cmd.add_option("--noise", paths.noise, "Learner noise config (JSON)");
  cmd.add_option("--strategies", paths.strategies, "Strategy reward tables (JSON)");
  cmd.add_option("--ema", ema, "Smooth actions with an exponential moving average of this alpha");
  cmd.add_flag("--mirror", run.mirror, "Swap the roles of the two arms relative to the seed");
  cmd.add_option("--latency-budget-ms", run.latency_budget_ms, "Per-step latency budget");
  cmd.add_option("--stage", run.stage, "Training stage: 1, 2 or all");
  cmd.add_option("--budget", run.budget_episodes, "Training episodes per learner");
  cmd.add_option("--hidden", run.hidden, "Hidden units of the learner (0 = linear)");
  cmd.add_option("--population", run.population, "ES population size (even)");
  cmd.add_option("--episodes-per-member", run.episodes_per_member, "Episodes per ES population member");
  cmd.add_option("--es-sigma", run.es_sigma, "ES perturbation scale");
  cmd.add_option("--learning-rate", run.learning_rate, "Adam learning rate");
  cmd.add_option("--checkpoint-every", run.checkpoint_every, "Generations between checkpoints");
  cmd.add_option("--pool-add-interval", run.pool_add_interval, "Episodes between opponent pool insertions");
  cmd.add_option("--pool-capacity", run.pool_capacity, "Opponent pool capacity");
  cmd.add_option("--plateau-window", run.plateau_window, "Episodes per plateau comparison window");
  cmd.add_option("--plateau-tolerance", run.plateau_tolerance, "Relative change treated as a plateau");
  cmd.add_option("--max-episode-steps", run.max_episode_steps, "Training episode truncation length");
  cmd.add_option("--bench-steps", run.bench_steps, "Control steps timed by bench");
}

LoadedConfig load(const Paths& p) {
  ConfigPaths c;
  if (!p.table.empty()) c.table = p.table;
  if (!p.chain.empty()) c.chain = p.chain;
  if (!p.rules.empty()) c.rules = p.rules;
  if (!p.noise.empty()) c.noise = p.noise;
  if (!p.strategies.empty()) c.strategies = p.strategies;
  return load_config(c);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

int cmd_match(const RunConfig& run, const LoadedConfig& config) {
  if (run.policies.size() != 2) throw ConfigError("match needs exactly two policies");
  for (int i = 0; i < run.matches; ++i) {
    MatchSetup s;
    s.config = config;
    s.seed = run.seed + static_cast<std::uint64_t>(i);
    s.mirror = run.mirror;
    s.policy_a = run.policies[0];
    s.policy_b = run.policies[1];
    s.ema_alpha = run.ema_alpha;
    s.measure_latency = true;
    s.latency_budget_ms = run.latency_budget_ms;
    const MatchOutcome m = run_match(s);
    const fs::path replay = run.output_dir / "replays" / ("match_" + std::to_string(s.seed) + ".replay");
    write_text(replay, m.replay);
    const auto& r = m.result;
    std::cout << "seed " << s.seed << ": " << s.policy_a << " " << r.points(Side::A) << " : " << r.points(Side::B)
              << " " << s.policy_b << "  (goals " << r.goals[0] << ":" << r.goals[1] << ", faults " << r.faults[0]
              << ":" << r.faults[1] << ", p99 step " << m.latency.p99_ms << " ms)  replay " << replay.string()
              << "\n";
  }
  return 0;
}

int cmd_tournament(const RunConfig& run, const LoadedConfig& config) {
  if (run.policies.size() < 2) throw ConfigError("tournament needs at least two policies");
  const TournamentResult t = run_tournament(run.policies, run.matches, config, run.seed, run.threads, run.ema_alpha);
  Json pairs = Json::array();
  for (const auto& p : t.pairs) {
    std::cout << format_pair(p) << "\n";
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"matches", p.matches}, {"mean_points_a", p.mean_points_a},
                     {"mean_points_b", p.mean_points_b}});
  }
  save_json_file({{"seed", run.seed}, {"pairs", pairs}}, run.output_dir / "tournament.json");
  return 0;
}

int cmd_train(const RunConfig& run, const LoadedConfig& config) {
  const Json settings = {{"seed", run.seed},
                         {"stage", run.stage},
                         {"budget_episodes", run.budget_episodes},
                         {"hidden", run.hidden},
                         {"population", run.population},
                         {"episodes_per_member", run.episodes_per_member},
                         {"es_sigma", run.es_sigma},
                         {"learning_rate", run.learning_rate},
                         {"checkpoint_every", run.checkpoint_every},
                         {"pool_add_interval", run.pool_add_interval},
                         {"pool_capacity", run.pool_capacity},
                         {"plateau_window", run.plateau_window},
                         {"plateau_tolerance", run.plateau_tolerance},
                         {"max_episode_steps", run.max_episode_steps},
                         {"threads", run.threads}};
  save_json_file({{"run", settings},
                  {"table", to_json(config.sim.table)},
                  {"chain", to_json(config.sim.arm)},
                  {"rules", to_json(config.sim.rules)},
                  {"noise", to_json(config.noise)},
                  {"strategies", to_json(config.rewards)}},
                 run.output_dir / "config.json");
  if (run.stage == "1" || run.stage == "all") {
    for (const auto& [s, out] : run_stage1(run, config))
      std::cout << "stage 1 " << to_string(s) << ": " << out.checkpoints.size() << " checkpoints, final "
                << out.paths.back().string() << (out.plateaued ? " (plateau)" : "") << "\n";
  }
  if (run.stage == "2" || run.stage == "all") {
    const StageOutput out = run_stage2(run, config);
    std::cout << "stage 2 balanced: " << out.checkpoints.size() << " checkpoints, final " << out.paths.back().string()
              << "\nensemble manifest " << (run.output_dir / "ensemble.json").string() << "\n";
  }
  return 0;
}

int cmd_replay_verify(const RunConfig& run, const LoadedConfig& config) {
  if (!run.replay) throw ConfigError("replay-verify needs a replay file");
  std::ifstream in(*run.replay);
  if (!in) throw ConfigError("cannot open " + run.replay->string());
  std::stringstream buf;
  buf << in.rdbuf();
  verify_replay(buf.str(), config);
  std::cout << "replay verified: " << run.replay->string() << "\n";
  return 0;
}

int cmd_bench(const RunConfig& run, const LoadedConfig& config) {
  const BenchReport r = run_bench(run, config);
  std::cout << "steps " << r.steps << "\nstep latency p50 " << r.step.p50_ms << " ms, p99 " << r.step.p99_ms
            << " ms, max " << r.step.max_ms << " ms, over budget " << r.step.over_budget << "\n"
            << "forward kinematics " << r.fk_us << " us, resolve_action " << r.resolve_us << " us\n";
  if (r.step.p99_ms > run.latency_budget_ms)
    std::cerr << "warning: p99 exceeds the " << run.latency_budget_ms << " ms budget\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale robot air hockey toolkit"};
  app.require_subcommand(1);

  RunConfig run;
  Paths paths;
  std::string output_dir = run.output_dir.string();
  std::optional<double> ema;
  std::string replay;

  auto* match = app.add_subcommand("match", "Play matches and write replay logs");
  auto* tournament = app.add_subcommand("tournament", "Round robin over ordered policy pairs");
  auto* train = app.add_subcommand("train", "Two-stage self-play training");
  auto* verify = app.add_subcommand("replay-verify", "Re-run a replay log and compare");
  auto* bench = app.add_subcommand("bench", "Time policy inference plus simulation per control step");
  for (auto* cmd : {match, tournament, train, verify, bench}) add_common(*cmd, run, paths, output_dir, ema);
  verify->add_option("replay", replay, "Replay log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    run.output_dir = output_dir;
    run.ema_alpha = ema;
    if (!replay.empty()) run.replay = replay;
    run.validate();
    const LoadedConfig config = load(paths);
    if (*match) return cmd_match(run, config);
    if (*tournament) return cmd_tournament(run, config);
    if (*train) return cmd_train(run, config);
    if (*verify) return cmd_replay_verify(run, config);
    return cmd_bench(run, config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
