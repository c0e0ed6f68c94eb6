#include "support.hpp"

#include "airhockey/selfplay.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace airhockey;

namespace {

SnapshotPtr tagged(std::int64_t episode) {
  return make_toy_learner(0, Eigen::VectorXd::Constant(82, static_cast<double>(episode)),
                          PolicyMetadata{"balanced", episode, 1});
}

OpponentPool pool_of(std::size_t n) {
  OpponentPool p;
  for (std::size_t i = 0; i < n; ++i) p.members.push_back(tagged(static_cast<std::int64_t>(i)));
  return p;
}

// Upper 1% point of the chi-square distribution with 24 degrees of freedom.
constexpr double kChiSquare24At99 = 42.9798;

}  // namespace

TEST(Pool, SingleMemberAlwaysDrawnAndEmptyRejected) {
  Rng rng(61);
  const OpponentPool one = pool_of(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_opponent(one, rng), one.members[0]);
  EXPECT_THROW(sample_opponent(OpponentPool{}, rng), std::logic_error);
}

TEST(Pool, UniformSamplingPassesChiSquare) {
  const OpponentPool pool = pool_of(25);
  Rng rng(62);
  std::vector<int> counts(25, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const SnapshotPtr s = sample_opponent(pool, rng);
    ++counts[static_cast<std::size_t>(s->metadata().episode)];
  }
  const double expected = draws / 25.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, kChiSquare24At99);
}

TEST(Pool, SameSeedSameDraws) {
  const OpponentPool pool = pool_of(25);
  Rng a(63), b(63);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_opponent(pool, a), sample_opponent(pool, b));
}

TEST(Pool, AddsOnlyAtIntervalMultiples) {
  Rng rng(64);
  OpponentPool pool = pool_of(3);
  pool = maybe_add(pool, tagged(999), 999, rng);
  EXPECT_EQ(pool.members.size(), 3u);
  EXPECT_EQ(pool.episodes_since_add, 999);
  pool = maybe_add(pool, tagged(1000), 1000, rng);
  EXPECT_EQ(pool.members.size(), 4u);
  EXPECT_EQ(pool.members.back()->metadata().episode, 1000);
  EXPECT_EQ(pool.episodes_since_add, 0);
  // repeated call at the same episode is a no-op
  pool = maybe_add(pool, tagged(1000), 1000, rng);
  EXPECT_EQ(pool.members.size(), 4u);
}

TEST(Pool, FullPoolReplacesExactlyOneMember) {
  Rng rng(65);
  OpponentPool pool = pool_of(25);
  const std::set<SnapshotPtr> before(pool.members.begin(), pool.members.end());
  const SnapshotPtr fresh = tagged(7000);
  pool = maybe_add(pool, fresh, 7000, rng);
  ASSERT_EQ(pool.members.size(), 25u);
  const std::set<SnapshotPtr> after(pool.members.begin(), pool.members.end());
  EXPECT_TRUE(after.count(fresh));
  int missing = 0;
  for (const auto& s : before) missing += after.count(s) ? 0 : 1;
  EXPECT_EQ(missing, 1);
}

TEST(Pool, SizeBoundedOverLongSchedules) {
  Rng rng(66);
  OpponentPool pool = pool_of(1);
  std::size_t last = 1;
  for (std::int64_t e = 1; e <= 100000; ++e) {
    pool = maybe_add(std::move(pool), tagged(e), e, rng);
    ASSERT_LE(pool.members.size(), 25u);
    ASSERT_GE(pool.members.size(), 1u);
    if (pool.members.size() != last) {
      ASSERT_EQ(e % 1000, 0) << e;
      last = pool.members.size();
    }
  }
  EXPECT_EQ(pool.members.size(), 25u);
}

TEST(Pool, SourceAdmitsLearnerAcrossGenerationBarriers) {
  Rng rng(67);
  PoolOpponents source(pool_of(1));
  source.after_generation(960, tagged(960), rng);
  EXPECT_EQ(source.pool().members.size(), 1u);
  source.after_generation(1920, tagged(1920), rng);
  EXPECT_EQ(source.pool().members.size(), 2u);
  // one generation that spans three insertion points (2000, 3000, 4000)
  source.after_generation(4100, tagged(4100), rng);
  EXPECT_EQ(source.pool().members.size(), 5u);
}

TEST(Bootstrap, EightPerStrategyPlusBaselineIsTwentyFive) {
  const SimConfig cfg;
  std::map<Strategy, std::vector<SnapshotPtr>> h;
  for (Strategy s : kStrategies)
    for (int i = 0; i < 8; ++i) h[s].push_back(tagged(i));
  const SnapshotPtr baseline = make_scripted_baseline(cfg);
  const OpponentPool pool = bootstrap_stage2(h, baseline);
  EXPECT_EQ(pool.members.size(), 25u);
  EXPECT_EQ(pool.members.front(), baseline);

  h[Strategy::defensive].pop_back();
  EXPECT_THROW(bootstrap_stage2(h, baseline), ConfigError);
}

TEST(Bootstrap, LongHistoriesAreSampledEvenly) {
  std::vector<SnapshotPtr> history;
  for (int i = 0; i < 29; ++i) history.push_back(tagged(i));
  const auto pick = select_evenly_spaced(history, 8);
  ASSERT_EQ(pick.size(), 8u);
  EXPECT_EQ(pick.front(), history.front());
  EXPECT_EQ(pick.back(), history.back());
  EXPECT_EQ(pick[4]->metadata().episode, 16);
  EXPECT_TRUE(std::is_sorted(pick.begin(), pick.end(), [](const SnapshotPtr& a, const SnapshotPtr& b) {
    return a->metadata().episode < b->metadata().episode;
  }));
}

TEST(Plateau, DetectsFlatReturnsOnly) {
  PlateauDetector rising(200, 0.05);
  for (int i = 0; i < 400; ++i) rising.push(-1.0 + i * 0.005);
  EXPECT_FALSE(rising.plateaued());
  PlateauDetector flat(200, 0.05);
  for (int i = 0; i < 399; ++i) EXPECT_FALSE(flat.push(-0.5 + (i % 2) * 0.01));
  EXPECT_TRUE(flat.push(-0.5));
}

TEST(Manifest, PoolRoundTripsThroughFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "airhockey_pool_test";
  std::filesystem::remove_all(dir);
  OpponentPool pool = pool_of(3);
  pool.episodes_since_add = 12;
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < pool.members.size(); ++i) {
    paths.push_back("m" + std::to_string(i) + ".policy");
    save_checkpoint(*pool.members[i], dir / paths.back());
  }
  save_pool_manifest(pool, paths, dir / "pool.json");
  const OpponentPool back = load_pool_manifest(dir / "pool.json");
  ASSERT_EQ(back.members.size(), 3u);
  EXPECT_EQ(back.episodes_since_add, 12);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.members[i]->fingerprint(), pool.members[i]->fingerprint());

  save_checkpoint(*tagged(99), dir / paths[1]);
  EXPECT_THROW(load_pool_manifest(dir / "pool.json"), ConfigError);
  std::filesystem::remove_all(dir);
}
