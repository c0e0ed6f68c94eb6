#pragma once

// Evolution-strategies trainer for the toy learner: antithetic Gaussian
// perturbations, centered-rank fitness shaping and Adam updates.

#include "airhockey/learner_env.hpp"

#include <functional>

namespace airhockey {

/// Supplies a frozen opponent for each training episode.
class OpponentSource {
 public:
  virtual ~OpponentSource() = default;
  virtual SnapshotPtr sample(Rng& rng) = 0;
  /// Called at each generation barrier with the total completed episodes.
  virtual void after_generation(std::int64_t episodes_completed, const SnapshotPtr& learner, Rng& rng) {
    (void)episodes_completed;
    (void)learner;
    (void)rng;
  }
};

class FixedOpponent : public OpponentSource {
 public:
  explicit FixedOpponent(SnapshotPtr opponent);
  SnapshotPtr sample(Rng& rng) override;

 private:
  SnapshotPtr opponent_;
};

struct GenerationStats {
  int generation = 0;
  std::int64_t episodes = 0;
  double mean_return = 0.0;
  std::vector<double> episode_returns;
};

struct EsOptions {
  int hidden = 0;
  /// Members per generation; must be even.
  int population = 16;
  int episodes_per_member = 2;
  double sigma = 0.05;
  double learning_rate = 0.02;
  double weight_decay = 0.0;
  double init_scale = 0.05;
  /// A checkpoint is kept every this many generations.
  int checkpoint_every = 10;
  int workers = 1;
  /// Returning true stops training after the current generation.
  std::function<bool(const GenerationStats&)> on_generation;
};

struct TrainingResult {
  /// Ordered by episode; the first entry is the untrained initial policy.
  std::vector<SnapshotPtr> checkpoints;
  std::vector<GenerationStats> generations;
  std::int64_t episodes = 0;

  SnapshotPtr final_snapshot() const { return checkpoints.back(); }
};

using EnvFactory = std::function<std::unique_ptr<LearnerEnv>(Strategy)>;

EnvFactory default_env_factory(LearnerEnvConfig base);

/// Runs floor(budget / (population * episodes_per_member)) generations.
/// Deterministic for a given rng state regardless of the worker count.
TrainingResult train_toy_learner(const EnvFactory& make_env, OpponentSource& opponents, Strategy strategy,
                                 std::int64_t budget_episodes, Rng& rng, const EsOptions& options = {});

}  // namespace airhockey
