#include "support.hpp"

#include "airhockey/ensemble.hpp"
#include "airhockey/harness.hpp"

#include <gtest/gtest.h>

using namespace airhockey;

namespace {

ObservationStack with_puck(const Vec2d& now, const Vec2d& before, double timer) {
  ObservationStack s;
  s.puck_position.colwise() = before;
  s.puck_position.col(0) = now;
  s.fault_timer = timer;
  s.primed = true;
  return s;
}

ObservationStack fresh(const Vec2d& spot) {
  ObservationStack s;
  s.puck_position.colwise() = spot;
  s.primed = true;
  return s;
}

// Plays a noise-free match and feeds side A's observations to the estimator.
struct Tracked {
  MatchResult truth;
  ScoreEstimate estimate;
};

Tracked track_match(std::uint64_t seed, const std::string& a, const std::string& b) {
  const SimConfig cfg;
  Simulator sim(cfg);
  sim.reset(seed);
  auto ca = make_controller(a, cfg), cb = make_controller(b, cfg);
  ca->reset(mix_seed(seed, 10));
  cb->reset(mix_seed(seed, 11));
  const EstimatorThresholds th = EstimatorThresholds::for_config(cfg);
  ScoreEstimate est;
  std::vector<MatchEvent> log;
  ObservationStack prev = sim.observation(Side::A);
  for (;;) {
    const auto out = sim.step({ca->act(sim.observation(Side::A)), cb->act(sim.observation(Side::B))});
    log.insert(log.end(), out.events.begin(), out.events.end());
    est = update_score_estimate(est, prev, sim.observation(Side::A), th);
    prev = sim.observation(Side::A);
    if (out.match_over) break;
  }
  return {score_match(log), est};
}

}  // namespace

TEST(SelectStrategy, ExhaustiveRuleTable) {
  for (int margin : {1, 2, 3, 5}) {
    for (int own = 0; own <= 20; ++own) {
      for (int opp = 0; opp <= 20; ++opp) {
        const int diff = own - opp;
        if (diff < -10 || diff > 10) continue;
        Strategy expected = Strategy::balanced;
        if (diff < 0) expected = Strategy::aggressive;
        else if (diff >= margin) expected = Strategy::defensive;
        ASSERT_EQ(select_strategy(own, opp, margin), expected) << own << ":" << opp << " margin " << margin;
      }
    }
  }
  EXPECT_EQ(select_strategy(2, 2), Strategy::balanced);
  EXPECT_EQ(select_strategy(1, 2), Strategy::aggressive);
  EXPECT_EQ(select_strategy(5, 1, 3), Strategy::defensive);
  EXPECT_EQ(select_strategy(3, 1, 3), Strategy::balanced);
}

TEST(SelectStrategy, FaultsCountThroughPoints) {
  ScoreEstimate e;
  e.own_goals = 2;
  e.opp_goals = 2;
  e.own_faults = 3;
  EXPECT_EQ(e.own_points(), 1);
  EXPECT_EQ(select_strategy(e), Strategy::aggressive);
}

TEST(Estimator, UnchangedWithoutDiscontinuity) {
  const ScoreEstimate start{1, 2, 0, 1, false, 0};
  const auto prev = with_puck(Vec2d(0.1, 0.1), Vec2d(0.09, 0.1), 0.3);
  const auto cur = with_puck(Vec2d(0.11, 0.1), Vec2d(0.1, 0.1), 0.31);
  EXPECT_EQ(update_score_estimate(start, prev, cur), start);
}

TEST(Estimator, GoalIntoOpponentNetThenFaceoff) {
  const auto prev = with_puck(Vec2d(0.97, 0.05), Vec2d(0.93, 0.05), 0.2);
  const ScoreEstimate e = update_score_estimate({}, prev, fresh(Vec2d(0.5, 0.01)));
  EXPECT_EQ(e.own_goals, 1);
  EXPECT_EQ(e.opp_goals, 0);
  EXPECT_FALSE(e.low_confidence);
}

TEST(Estimator, GoalConceded) {
  const auto prev = with_puck(Vec2d(-0.96, -0.1), Vec2d(-0.9, -0.1), -0.1);
  const ScoreEstimate e = update_score_estimate({}, prev, fresh(Vec2d(-0.5, 0.02)));
  EXPECT_EQ(e.opp_goals, 1);
}

TEST(Estimator, FaultFromTimerSaturation) {
  const double before = 749.0 / 750.0;
  // own fault: the puck may already be near the faceoff spot, so no jump
  ScoreEstimate e = update_score_estimate({}, with_puck(Vec2d(-0.5, 0.0), Vec2d(-0.5, 0.0), -before),
                                          fresh(Vec2d(-0.49, 0.01)));
  EXPECT_EQ(e.own_faults, 1);
  e = update_score_estimate(e, with_puck(Vec2d(0.3, 0.4), Vec2d(0.3, 0.4), before), fresh(Vec2d(0.5, 0.0)));
  EXPECT_EQ(e.opp_faults, 1);
  EXPECT_EQ(e.own_goals + e.opp_goals, 0);
}

TEST(Estimator, StuckResetChangesNothing) {
  const auto prev = with_puck(Vec2d(0.02, 0.8), Vec2d(0.02, 0.8001), 0.2);
  EXPECT_EQ(update_score_estimate({}, prev, fresh(Vec2d(-0.5, 0.0))), ScoreEstimate{});
  // also in a corner, outside the goal mouth
  const auto corner = with_puck(Vec2d(0.96, 0.9), Vec2d(0.96, 0.9001), 0.2);
  EXPECT_EQ(update_score_estimate({}, corner, fresh(Vec2d(0.5, 0.0))), ScoreEstimate{});
}

TEST(Estimator, FastPuckIsNotAReset) {
  const auto prev = with_puck(Vec2d(0.5, -0.5), Vec2d(0.3, -0.8), 0.1);
  auto cur = with_puck(Vec2d(0.7, -0.2), Vec2d(0.5, -0.5), 0.11);
  EXPECT_EQ(update_score_estimate({}, prev, cur), ScoreEstimate{});
}

TEST(Estimator, PuckComingToRestIsNotAReset) {
  const auto prev = with_puck(Vec2d(0.3, 0.1), Vec2d(0.29, 0.1), 0.1);
  EXPECT_EQ(update_score_estimate({}, prev, fresh(Vec2d(0.3, 0.1))), ScoreEstimate{});
}

TEST(Estimator, TrackingLossFreezeIsLowConfidence) {
  // frozen near the opponent goal, then a reset: counters stay, flag set
  const auto prev = with_puck(Vec2d(0.95, 0.0), Vec2d(0.95, 0.0), 0.2);
  const ScoreEstimate e = update_score_estimate({}, prev, fresh(Vec2d(0.5, 0.0)));
  EXPECT_EQ(e.own_goals + e.opp_goals + e.own_faults + e.opp_faults, 0);
  EXPECT_TRUE(e.low_confidence);
  EXPECT_EQ(e.unattributed, 1);
}

TEST(Estimator, MatchesGroundTruthInNoiseFreeMatches) {
  int exact = 0;
  const int matches = 10;
  for (int m = 0; m < matches; ++m) {
    const Tracked t = track_match(1000 + m, m % 2 ? "baseline" : "jitterer", m % 3 ? "jitterer" : "blocker");
    const bool ok = t.estimate.own_goals == t.truth.goals[0] && t.estimate.opp_goals == t.truth.goals[1] &&
                    t.estimate.own_faults == t.truth.faults[0] && t.estimate.opp_faults == t.truth.faults[1];
    exact += ok ? 1 : 0;
    EXPECT_TRUE(ok) << "seed " << 1000 + m << " truth " << t.truth.goals[0] << ":" << t.truth.goals[1] << " f "
                    << t.truth.faults[0] << ":" << t.truth.faults[1] << " est " << t.estimate.own_goals << ":"
                    << t.estimate.opp_goals << " f " << t.estimate.own_faults << ":" << t.estimate.opp_faults;
  }
  EXPECT_EQ(exact, matches);
}

TEST(Ensemble, SwitchesOnlyAtEpisodeBoundaries) {
  const SimConfig cfg;
  std::map<Strategy, SnapshotPtr> policies{
      {Strategy::balanced, make_scripted_baseline(cfg)},
      {Strategy::aggressive, make_scripted_variant(VariantType::random_jitterer, cfg)},
      {Strategy::defensive, make_scripted_variant(VariantType::passive_blocker, cfg)}};
  EnsembleController ens(policies, 3, EstimatorThresholds::for_config(cfg));
  auto opp = make_controller("jitterer", cfg);
  Simulator sim(cfg);
  sim.reset(5);
  ens.reset(1);
  opp->reset(2);
  bool boundary = true;
  int switches = 0;
  Strategy active = ens.active();
  EXPECT_EQ(active, Strategy::balanced);
  for (int i = 0; i < 20000; ++i) {
    const Action a = ens.act(sim.observation(Side::A));
    if (ens.active() != active) {
      EXPECT_TRUE(boundary) << "switch mid-episode at step " << i;
      ++switches;
      active = ens.active();
    }
    const auto out = sim.step({a, opp->act(sim.observation(Side::B))});
    boundary = out.episode_over;
  }
  EXPECT_GT(switches, 0);
}

TEST(Ensemble, ManifestRoundTripAndMissingPolicy) {
  const auto dir = std::filesystem::temp_directory_path() / "airhockey_ensemble_test";
  std::filesystem::remove_all(dir);
  const SimConfig cfg;
  EnsembleManifest m;
  for (Strategy s : kStrategies) {
    const auto path = dir / (std::string(to_string(s)) + ".policy");
    save_checkpoint(*make_scripted_baseline(cfg), path);
    m.checkpoints[s] = path.filename();
  }
  m.defensive_margin = 4;
  save_ensemble_manifest(m, dir / "ensemble.json");
  const EnsembleManifest back = load_ensemble_manifest(dir / "ensemble.json");
  EXPECT_EQ(back.defensive_margin, 4);
  EXPECT_EQ(back.checkpoints.at(Strategy::defensive), dir / "defensive.policy");
  EXPECT_NO_THROW(make_ensemble(dir / "ensemble.json", cfg));
  EXPECT_THROW(EnsembleController({{Strategy::balanced, make_scripted_baseline(cfg)}}, 3, {}), ConfigError);
  std::filesystem::remove_all(dir);
}
