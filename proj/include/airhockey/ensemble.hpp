#pragma once

// Score-aware strategy switching. The running score is inferred from the
// agent's own observation stream. Every terminal event restarts the
// observation history at a faceoff; the cause is read from the observation
// before it: a saturated possession timer means a fault, a puck in a goal
// mouth means a goal, anything else a stuck-puck reset.

#include "airhockey/policy.hpp"

#include <filesystem>
#include <map>

namespace airhockey {

struct ScoreEstimate {
  int own_goals = 0;
  int opp_goals = 0;
  int own_faults = 0;
  int opp_faults = 0;
  /// Set once a reset could not be attributed, e.g. after a tracking
  /// dropout; the counters are left unchanged in that case.
  bool low_confidence = false;
  int unattributed = 0;

  int own_points() const { return own_goals - own_faults / 3; }
  int opp_points() const { return opp_goals - opp_faults / 3; }
  friend bool operator==(const ScoreEstimate&, const ScoreEstimate&) = default;
};

/// Thresholds in normalized observation units.
struct EstimatorThresholds {
  /// |x| beyond which a reset puck is taken to have entered a goal.
  double goal_zone = 0.75;
  /// Normalized half-aperture of the goal plus a motion margin.
  double goal_half_width = 0.44;
  /// Timer magnitude reached one step before a fault.
  double timer_saturation = 0.995;
  double timer_reset = 0.02;

  static EstimatorThresholds for_config(const SimConfig& config);
};

/// Pure update from two consecutive observations of the same side.
ScoreEstimate update_score_estimate(ScoreEstimate estimate, const ObservationStack& previous,
                                    const ObservationStack& current, const EstimatorThresholds& thresholds = {});

/// Aggressive when trailing, defensive when leading by at least `margin`
/// points, balanced otherwise.
Strategy select_strategy(int own_points, int opp_points, int margin = 3);
Strategy select_strategy(const ScoreEstimate& estimate, int margin = 3);

struct EnsembleManifest {
  std::map<Strategy, std::filesystem::path> checkpoints;
  int defensive_margin = 3;
};

EnsembleManifest load_ensemble_manifest(const std::filesystem::path& path);
void save_ensemble_manifest(const EnsembleManifest& manifest, const std::filesystem::path& path);

class EnsembleController : public Controller {
 public:
  EnsembleController(std::map<Strategy, SnapshotPtr> policies, int margin, EstimatorThresholds thresholds,
                     std::string label = "ensemble");

  void reset(std::uint64_t seed) override;
  Action act(const ObservationStack& obs) override;
  std::string describe() const override { return label_; }

  Strategy active() const { return active_; }
  const ScoreEstimate& estimate() const { return estimate_; }

 private:
  std::map<Strategy, SnapshotPtr> policies_;
  int margin_;
  EstimatorThresholds thresholds_;
  std::string label_;
  Strategy active_ = Strategy::balanced;
  ScoreEstimate estimate_;
  ObservationStack previous_;
  bool have_previous_ = false;
  Rng rng_;
};

std::unique_ptr<EnsembleController> make_ensemble(const std::filesystem::path& manifest, const SimConfig& config);

}  // namespace airhockey
