#pragma once

// Single-agent view of the game for training: the learner plays side A with
// its noise model, a frozen opponent plays side B noise-free.

#include "airhockey/policy.hpp"

#include <memory>

namespace airhockey {

struct LearnerEnvConfig {
  SimConfig sim;
  NoiseConfig learner_noise = NoiseConfig::training_defaults();
  Strategy strategy = Strategy::balanced;
  /// Reward table per strategy, indexed by the enum value.
  std::array<StrategyRewardConfig, 3> rewards{StrategyRewardConfig::of(Strategy::balanced),
                                              StrategyRewardConfig::of(Strategy::aggressive),
                                              StrategyRewardConfig::of(Strategy::defensive)};
  /// Episodes without a terminal event are truncated after this many steps.
  int max_episode_steps = 1000;
};

struct EnvStep {
  Observation observation = Observation::Zero();
  Rational reward_exact{0};
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
  bool invalid_action = false;
  std::vector<MatchEvent> events;
};

class LearnerEnv {
 public:
  explicit LearnerEnv(LearnerEnvConfig config);

  /// Takes effect at the next reset; idle when never set.
  void set_opponent(SnapshotPtr opponent);

  Observation reset(std::uint64_t seed);
  EnvStep step(const Action& action);

  const ObservationStack& stack() const { return sim_.observation(Side::A); }
  const Simulator& simulator() const { return sim_; }
  const LearnerEnvConfig& config() const { return config_; }
  bool done() const { return done_; }

 private:
  LearnerEnvConfig config_;
  StrategyRewardConfig rewards_;
  Simulator sim_;
  SnapshotPtr pending_opponent_;
  std::unique_ptr<SnapshotController> opponent_;
  int steps_ = 0;
  bool done_ = true;
};

/// Plays one episode and returns the learner's summed reward.
double run_episode(LearnerEnv& env, const PolicySnapshot& learner, std::uint64_t seed);

}  // namespace airhockey
