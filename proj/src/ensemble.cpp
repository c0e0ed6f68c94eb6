#include "airhockey/ensemble.hpp"

#include "airhockey/config_io.hpp"

#include <cmath>

namespace airhockey {

EstimatorThresholds EstimatorThresholds::for_config(const SimConfig& config) {
  EstimatorThresholds t;
  t.goal_half_width = 0.5 * config.table.goal_width / config.table.half_width() + 0.2;
  const double steps = config.rules.fault_steps();
  t.timer_saturation = std::min(t.timer_saturation, (steps - 1.0) / steps - 1e-9);
  return t;
}

namespace {

bool frozen_puck(const ObservationStack& s) { return (s.puck_position.col(0) - s.puck_position.col(1)).isZero(0.0); }

// The stack is refilled with the faceoff observation at every episode start.
bool history_restarted(const ObservationStack& s) {
  for (Eigen::Index c = 1; c < s.puck_position.cols(); ++c)
    if (s.puck_position.col(c) != s.puck_position.col(0)) return false;
  return true;
}

}  // namespace

ScoreEstimate update_score_estimate(ScoreEstimate est, const ObservationStack& prev, const ObservationStack& cur,
                                    const EstimatorThresholds& th) {
  const Vec2d p = prev.puck_position.col(0);
  const Vec2d v = p - Vec2d(prev.puck_position.col(1));
  const Vec2d now = cur.puck_position.col(0);

  // A puck at rest also has a constant history, but it does not move.
  const bool reset = history_restarted(cur) && now != p;
  const bool fault = std::abs(prev.fault_timer) >= th.timer_saturation && std::abs(cur.fault_timer) <= th.timer_reset;
  if (!reset) {
    if (fault) {
      // timer reset without a visible restart: cannot be attributed
      est.low_confidence = true;
      ++est.unattributed;
    }
    return est;
  }

  // +1: into the opponent's goal, -1: into our own
  int goal = 0;
  if (std::abs(p.y()) <= th.goal_half_width) {
    if (p.x() >= th.goal_zone) goal = 1;
    if (p.x() <= -th.goal_zone) goal = -1;
  }
  if (goal != 0 && fault) {
    // both explanations fit: keep the goal only if the puck was about to cross
    if (!(goal * (p.x() + 2.0 * v.x()) >= 1.0)) goal = 0;
  }

  if (goal == 0 && fault) {
    // the timer is negative while the puck is on our side
    (prev.fault_timer < 0 ? est.own_faults : est.opp_faults) += 1;
    return est;
  }
  if (frozen_puck(prev)) {
    // the last position may be stale from a tracking dropout
    est.low_confidence = true;
    ++est.unattributed;
    return est;
  }
  // otherwise a stuck-puck reset, which does not score
  if (goal != 0) (goal > 0 ? est.own_goals : est.opp_goals) += 1;
  return est;
}

Strategy select_strategy(int own_points, int opp_points, int margin) {
  if (opp_points > own_points) return Strategy::aggressive;
  if (own_points - opp_points >= margin) return Strategy::defensive;
  return Strategy::balanced;
}

Strategy select_strategy(const ScoreEstimate& e, int margin) {
  return select_strategy(e.own_points(), e.opp_points(), margin);
}

EnsembleManifest load_ensemble_manifest(const std::filesystem::path& path) {
  const Json doc = load_json_file(path);
  try {
    if (doc.at("format_version").get<int>() != kConfigFormatVersion) throw ConfigError("unsupported ensemble manifest");
    EnsembleManifest m;
    m.defensive_margin = doc.value("defensive_margin", 3);
    for (Strategy s : kStrategies) {
      std::filesystem::path p = doc.at("policies").at(std::string(to_string(s))).get<std::string>();
      if (p.is_relative()) p = path.parent_path() / p;
      m.checkpoints[s] = p;
    }
    if (m.defensive_margin < 1) throw ConfigError("defensive_margin must be at least 1");
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_ensemble_manifest(const EnsembleManifest& m, const std::filesystem::path& path) {
  Json policies = Json::object();
  for (const auto& [s, p] : m.checkpoints) policies[std::string(to_string(s))] = p.string();
  save_json_file({{"format_version", kConfigFormatVersion}, {"defensive_margin", m.defensive_margin}, {"policies", policies}},
                 path);
}

EnsembleController::EnsembleController(std::map<Strategy, SnapshotPtr> policies, int margin,
                                       EstimatorThresholds thresholds, std::string label)
    : policies_(std::move(policies)), margin_(margin), thresholds_(thresholds), label_(std::move(label)) {
  for (Strategy s : kStrategies) {
    if (!policies_.count(s) || !policies_.at(s))
      throw ConfigError("ensemble is missing the " + std::string(to_string(s)) + " policy");
  }
}

void EnsembleController::reset(std::uint64_t seed) {
  rng_.seed(seed);
  estimate_ = {};
  active_ = select_strategy(estimate_, margin_);
  have_previous_ = false;
}

Action EnsembleController::act(const ObservationStack& obs) {
  if (have_previous_) {
    const ScoreEstimate next = update_score_estimate(estimate_, previous_, obs, thresholds_);
    // the score only moves on terminal events, so this switches at faceoffs
    if (!(next == estimate_)) active_ = select_strategy(next, margin_);
    estimate_ = next;
  }
  previous_ = obs;
  have_previous_ = true;
  return policy_act(*policies_.at(active_), obs, rng_);
}

std::unique_ptr<EnsembleController> make_ensemble(const std::filesystem::path& manifest, const SimConfig& config) {
  const EnsembleManifest m = load_ensemble_manifest(manifest);
  std::map<Strategy, SnapshotPtr> policies;
  for (const auto& [s, p] : m.checkpoints) policies[s] = load_checkpoint(p);
  return std::make_unique<EnsembleController>(std::move(policies), m.defensive_margin,
                                              EstimatorThresholds::for_config(config),
                                              "ensemble:" + manifest.string());
}

}  // namespace airhockey
