#include "airhockey/selfplay.hpp"

#include "airhockey/config_io.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace airhockey {

SnapshotPtr sample_opponent(const OpponentPool& pool, Rng& rng) {
  if (pool.members.empty()) throw std::logic_error("cannot sample from an empty opponent pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.members.size() - 1);
  return pool.members[pick(rng)];
}

OpponentPool maybe_add(OpponentPool pool, const SnapshotPtr& current, std::int64_t episode_index, Rng& rng) {
  if (!current) throw std::invalid_argument("maybe_add needs a snapshot");
  if (pool.capacity == 0 || pool.add_interval <= 0) throw std::invalid_argument("pool capacity and interval must be positive");
  const bool due = episode_index > 0 && episode_index % pool.add_interval == 0 && episode_index > pool.last_add_episode;
  if (!due) {
    pool.episodes_since_add = std::max<std::int64_t>(0, episode_index - pool.last_add_episode);
    return pool;
  }
  if (pool.members.size() >= pool.capacity) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.members.size() - 1);
    pool.members.erase(pool.members.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
  }
  pool.members.push_back(current);
  pool.last_add_episode = episode_index;
  pool.episodes_since_add = 0;
  return pool;
}

std::vector<SnapshotPtr> select_evenly_spaced(const std::vector<SnapshotPtr>& history, std::size_t count) {
  if (count == 0) return {};
  if (history.size() < count) throw std::invalid_argument("history shorter than the requested selection");
  std::vector<SnapshotPtr> out;
  if (count == 1) return {history.back()};
  const double span = static_cast<double>(history.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto at = static_cast<std::size_t>(std::lround(span * static_cast<double>(i) / static_cast<double>(count - 1)));
    out.push_back(history[at]);
  }
  return out;
}

OpponentPool bootstrap_stage2(const std::map<Strategy, std::vector<SnapshotPtr>>& histories,
                              const SnapshotPtr& baseline, std::size_t capacity) {
  if (!baseline) throw std::invalid_argument("bootstrap needs the scripted baseline");
  OpponentPool pool;
  pool.capacity = capacity;
  pool.members.push_back(baseline);
  for (Strategy s : kStrategies) {
    const auto it = histories.find(s);
    const std::size_t have = it == histories.end() ? 0 : it->second.size();
    if (have < kBootstrapPerStrategy)
      throw ConfigError("stage two needs " + std::to_string(kBootstrapPerStrategy) + " " + std::string(to_string(s)) +
                        " checkpoints, found " + std::to_string(have));
    for (auto& snap : select_evenly_spaced(it->second, kBootstrapPerStrategy)) pool.members.push_back(snap);
  }
  if (pool.members.size() > capacity) throw ConfigError("bootstrap pool exceeds its capacity");
  return pool;
}

PlateauDetector::PlateauDetector(std::size_t window, double relative_tolerance)
    : window_(window), tolerance_(relative_tolerance) {
  if (window_ == 0) throw std::invalid_argument("plateau window must be positive");
}

bool PlateauDetector::push(double episode_return) {
  returns_.push_back(episode_return);
  if (returns_.size() > 2 * window_) returns_.pop_front();
  if (returns_.size() < 2 * window_) return plateaued_;
  const double prev = std::accumulate(returns_.begin(), returns_.begin() + static_cast<std::ptrdiff_t>(window_), 0.0) /
                      static_cast<double>(window_);
  const double last = std::accumulate(returns_.begin() + static_cast<std::ptrdiff_t>(window_), returns_.end(), 0.0) /
                      static_cast<double>(window_);
  const double scale = std::max(std::abs(prev), 1e-9);
  plateaued_ = std::abs(last - prev) / scale < tolerance_;
  return plateaued_;
}

PoolOpponents::PoolOpponents(OpponentPool pool) : pool_(std::move(pool)) {}

SnapshotPtr PoolOpponents::sample(Rng& rng) { return sample_opponent(pool_, rng); }

void PoolOpponents::after_generation(std::int64_t episodes_completed, const SnapshotPtr& learner, Rng& rng) {
  // a generation can span several insertion points
  const std::int64_t step = pool_.add_interval;
  for (std::int64_t e = (seen_episodes_ / step + 1) * step; e <= episodes_completed; e += step)
    pool_ = maybe_add(std::move(pool_), learner, e, rng);
  pool_ = maybe_add(std::move(pool_), learner, episodes_completed, rng);
  seen_episodes_ = episodes_completed;
}

void save_pool_manifest(const OpponentPool& pool, const std::vector<std::filesystem::path>& member_paths,
                        const std::filesystem::path& manifest) {
  if (member_paths.size() != pool.members.size()) throw std::invalid_argument("one path per pool member required");
  Json members = Json::array();
  for (std::size_t i = 0; i < member_paths.size(); ++i)
    members.push_back({{"path", member_paths[i].string()}, {"fingerprint", hex64(pool.members[i]->fingerprint())}});
  save_json_file({{"format_version", kConfigFormatVersion},
                  {"capacity", pool.capacity},
                  {"add_interval", pool.add_interval},
                  {"episodes_since_add", pool.episodes_since_add},
                  {"last_add_episode", pool.last_add_episode},
                  {"members", members}},
                 manifest);
}

OpponentPool load_pool_manifest(const std::filesystem::path& manifest) {
  const Json doc = load_json_file(manifest);
  try {
    if (doc.at("format_version").get<int>() != kConfigFormatVersion) throw ConfigError("unsupported pool manifest");
    OpponentPool pool;
    pool.capacity = doc.at("capacity").get<std::size_t>();
    pool.add_interval = doc.at("add_interval").get<std::int64_t>();
    pool.episodes_since_add = doc.value("episodes_since_add", std::int64_t{0});
    pool.last_add_episode = doc.value("last_add_episode", std::int64_t{0});
    for (const auto& m : doc.at("members")) {
      std::filesystem::path p = m.at("path").get<std::string>();
      if (p.is_relative()) p = manifest.parent_path() / p;
      SnapshotPtr snap = load_checkpoint(p);
      if (hex64(snap->fingerprint()) != m.at("fingerprint").get<std::string>())
        throw ConfigError("fingerprint mismatch for " + p.string());
      pool.members.push_back(std::move(snap));
    }
    return pool;
  } catch (const Json::exception& e) {
    throw ConfigError(manifest.string() + ": " + e.what());
  }
}

}  // namespace airhockey
