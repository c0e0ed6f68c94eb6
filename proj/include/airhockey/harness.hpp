#pragma once

// Match runner, replay logs, tournaments, the two-stage training pipeline and
// the latency benchmark behind the command-line tool.

#include "airhockey/config_io.hpp"
#include "airhockey/ensemble.hpp"
#include "airhockey/selfplay.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace airhockey {

/// Raised when a replay does not reproduce.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  /// Policy specs: baseline, blocker, jitterer, idle, ensemble:<manifest> or
  /// a checkpoint path.
  std::vector<std::string> policies{"baseline", "jitterer"};
  int matches = 1;
  int threads = 1;
  std::filesystem::path output_dir = "runs";
  ConfigPaths configs;
  std::optional<double> ema_alpha;
  bool mirror = false;
  double latency_budget_ms = 20.0;

  // training
  std::string stage = "all";  // 1, 2 or all
  std::int64_t budget_episodes = 20000;
  int hidden = 0;
  int population = 16;
  int episodes_per_member = 2;
  double es_sigma = 0.05;
  double learning_rate = 0.02;
  int checkpoint_every = 10;
  std::int64_t pool_add_interval = 1000;
  std::size_t pool_capacity = 25;
  std::size_t plateau_window = 200;
  double plateau_tolerance = 0.05;
  int max_episode_steps = 1000;

  std::optional<std::filesystem::path> replay;
  std::int64_t bench_steps = 5000;

  void validate() const;
};

std::unique_ptr<Controller> make_controller(const std::string& spec, const SimConfig& config,
                                            std::optional<double> ema_alpha = std::nullopt);

struct LatencyStats {
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
  std::int64_t over_budget = 0;
};

LatencyStats summarize_latency(std::vector<double> samples_ms, double budget_ms);

struct MatchSetup {
  LoadedConfig config;
  std::uint64_t seed = 1;
  bool mirror = false;
  std::string policy_a = "baseline";
  std::string policy_b = "baseline";
  std::optional<double> ema_alpha;
  bool measure_latency = false;
  double latency_budget_ms = 20.0;
};

struct MatchOutcome {
  MatchResult result;
  std::string replay;
  LatencyStats latency;
};

/// Plays a full match. With `mirror` the roles of the two arms are exchanged
/// relative to the unmirrored game of the same seed.
MatchOutcome run_match(const MatchSetup& setup, Controller& a, Controller& b);
MatchOutcome run_match(const MatchSetup& setup);

struct ReplayHeader {
  std::uint64_t seed = 0;
  bool mirror = false;
  std::string table_hash, chain_hash, rules_hash;
  std::string policy_a, policy_b;
  std::optional<double> ema_alpha;
};

ReplayHeader parse_replay_header(const std::string& replay);

/// Re-runs the match described by `replay` and compares the logs byte for
/// byte. Throws VerificationError on any mismatch.
void verify_replay(const std::string& replay, const LoadedConfig& config);

struct PairResult {
  std::string a, b;
  int matches = 0;
  double mean_points_a = 0.0;
  double mean_points_b = 0.0;
  std::vector<MatchResult> results;
};

struct TournamentResult {
  std::vector<PairResult> pairs;
};

/// Ordered pairs of distinct specs; rejects duplicates and lists shorter
/// than two.
std::vector<std::pair<std::string, std::string>> tournament_schedule(const std::vector<std::string>& policies);

/// Every ordered pair of distinct policies plays `matches_per_pair` matches.
/// Match seeds depend on the two policy specs, not on their list position.
TournamentResult run_tournament(const std::vector<std::string>& policies, int matches_per_pair,
                                const LoadedConfig& config, std::uint64_t seed, int threads,
                                std::optional<double> ema_alpha = std::nullopt);

std::string format_pair(const PairResult& pair);

struct StageOutput {
  std::vector<SnapshotPtr> checkpoints;
  std::vector<std::filesystem::path> paths;
  OpponentPool pool;
  bool plateaued = false;
};

/// Stage one: one learner per strategy against a pool seeded with the
/// baseline. Writes checkpoints and manifests under output_dir/stage1.
std::map<Strategy, StageOutput> run_stage1(const RunConfig& run, const LoadedConfig& config);
/// Stage two: the balanced learner against a pool bootstrapped from stage
/// one. Reads output_dir/stage1 and writes output_dir/stage2 plus the
/// ensemble manifest.
StageOutput run_stage2(const RunConfig& run, const LoadedConfig& config);

/// Checkpoint history written by a training stage.
std::vector<SnapshotPtr> load_history(const std::filesystem::path& stage_dir);

struct BenchReport {
  LatencyStats step;
  double fk_us = 0.0;
  double resolve_us = 0.0;
  std::int64_t steps = 0;
};

BenchReport run_bench(const RunConfig& run, const LoadedConfig& config);

}  // namespace airhockey
