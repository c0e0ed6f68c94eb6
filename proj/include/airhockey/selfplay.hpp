#pragma once

// Opponent pool for fictitious self-play, the two-stage bootstrap, and the
// plateau test used to end a training stage.

#include "airhockey/trainer.hpp"

#include <deque>
#include <filesystem>
#include <map>

namespace airhockey {

struct OpponentPool {
  std::vector<SnapshotPtr> members;
  std::size_t capacity = 25;
  std::int64_t add_interval = 1000;
  /// Episodes since the last insertion.
  std::int64_t episodes_since_add = 0;
  /// Episode index of the last insertion; guards against repeated adds.
  std::int64_t last_add_episode = 0;
};

/// Uniform draw; throws std::logic_error on an empty pool.
SnapshotPtr sample_opponent(const OpponentPool& pool, Rng& rng);

/// At positive multiples of add_interval the current policy joins the pool,
/// evicting a uniformly chosen member when full. Other calls only update
/// episodes_since_add.
OpponentPool maybe_add(OpponentPool pool, const SnapshotPtr& current, std::int64_t episode_index, Rng& rng);

/// `count` entries spread evenly over `history`, always including both ends.
std::vector<SnapshotPtr> select_evenly_spaced(const std::vector<SnapshotPtr>& history, std::size_t count);

inline constexpr std::size_t kBootstrapPerStrategy = 8;

/// Pool seeded with 8 checkpoints from each stage-one history plus the
/// scripted baseline. Throws ConfigError when a history is too short.
OpponentPool bootstrap_stage2(const std::map<Strategy, std::vector<SnapshotPtr>>& histories,
                              const SnapshotPtr& baseline, std::size_t capacity = 25);

/// Reports a plateau once the mean return over the latest `window` episodes
/// changes by less than `relative_tolerance` against the previous window.
class PlateauDetector {
 public:
  explicit PlateauDetector(std::size_t window = 200, double relative_tolerance = 0.05);
  bool push(double episode_return);
  bool plateaued() const { return plateaued_; }

 private:
  std::size_t window_;
  double tolerance_;
  std::deque<double> returns_;
  bool plateaued_ = false;
};

/// OpponentSource over a pool that admits the learner on schedule.
class PoolOpponents : public OpponentSource {
 public:
  explicit PoolOpponents(OpponentPool pool);
  SnapshotPtr sample(Rng& rng) override;
  void after_generation(std::int64_t episodes_completed, const SnapshotPtr& learner, Rng& rng) override;
  const OpponentPool& pool() const { return pool_; }

 private:
  OpponentPool pool_;
  std::int64_t seen_episodes_ = 0;
};

/// JSON manifest listing checkpoint files with their fingerprints.
void save_pool_manifest(const OpponentPool& pool, const std::vector<std::filesystem::path>& member_paths,
                        const std::filesystem::path& manifest);
OpponentPool load_pool_manifest(const std::filesystem::path& manifest);

}  // namespace airhockey
