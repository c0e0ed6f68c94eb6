// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// if any criterion fails. Pass criterion names as arguments to run a subset.

#include "../support.hpp"

#include "airhockey/harness.hpp"
#include "airhockey/trainer.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace airhockey;
using airhockey::support::random_chain;
using airhockey::support::random_configuration;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// observation

WorldState random_world(const SimConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> x(-1.2, 1.2), y(-0.7, 0.7), a(-10.0, 10.0), v(-5.0, 5.0);
  std::uniform_int_distribution<int> steps(0, 800);
  WorldState w;
  w.puck.position = Vec2d(x(rng), y(rng));
  w.puck.velocity = Vec2d(v(rng), v(rng));
  w.puck.angle = a(rng);
  for (Side s : {Side::A, Side::B}) {
    w.mallets[index(s)].position = Vec2d(x(rng), y(rng));
    w.joints[index(s)].positions = random_configuration(cfg.arm.chain, rng);
  }
  w.possession_steps[index(w.puck_side())] = steps(rng);
  return w;
}

Verdict observation_bounds() {
  const auto t0 = Clock::now();
  const SimConfig cfg;
  Rng rng(1), noise_rng(2);
  NoiseConfig noise = NoiseConfig::training_defaults();
  int bad = 0;
  Eigen::Index length = 0;
  for (int i = 0; i < 100000; ++i) {
    const ObservationStack stack = observe(random_world(cfg, rng), i % 2 ? Side::A : Side::B, cfg.arm.chain,
                                           cfg.table, cfg.rules, {}, i % 3 ? noise : NoiseConfig{}, noise_rng);
    const Observation flat = stack.flatten();
    length = flat.size();
    if (flat.size() != 40 || !flat.allFinite() || flat.cwiseAbs().maxCoeff() > 1.0) ++bad;
  }
  const double t = seconds_since(t0);
  return {bad == 0 && length == 40 && t < 10.0,
          fmt("length %ld, %d of 100000 states out of [-1,1], %.2f s (limit 10 s)", static_cast<long>(length), bad, t)};
}

// rewards

Verdict reward_table() {
  struct Row {
    Strategy s;
    Rational score, receive, fault;
  };
  const Row rows[] = {{Strategy::balanced, {2, 3}, {-1}, {-1, 3}},
                      {Strategy::aggressive, {1}, {-1}, {-1, 3}},
                      {Strategy::defensive, {0}, {-1}, {-1, 3}}};
  int ok = 0;
  for (const Row& r : rows) {
    const auto cfg = StrategyRewardConfig::of(r.s);
    ok += reward({EventKind::goal, Side::A, 1}, Side::A, cfg) == r.score;
    ok += reward({EventKind::goal, Side::B, 1}, Side::A, cfg) == r.receive;
    ok += reward({EventKind::fault, Side::A, 1}, Side::A, cfg) == r.fault;
    ok += reward({EventKind::fault, Side::B, 1}, Side::A, cfg) == Rational(0);
    ok += reward({EventKind::stuck_reset, Side::A, 1}, Side::A, cfg) == Rational(0);
  }
  return {ok == 15, fmt("%d of 15 strategy x event cases exact", ok)};
}

// rules

Verdict match_rules() {
  const Table table;
  const RuleConfig rules;
  const ArmConfig arm = default_arm();
  const Region ws = make_workspace(table, arm.base_xy(), arm.reach_radius);
  const std::array<Region, 2> workspaces{ws, ws};
  WorldState w;
  w.rng.seed(1);
  std::int64_t fault_step = -1;
  for (int i = 1; i <= 800 && fault_step < 0; ++i) {
    w.puck.position = Vec2d(-0.5, 0.1);
    w.puck.velocity.setZero();
    for (const auto& e : apply_rules(w, table, workspaces, rules))
      if (e.kind == EventKind::fault) fault_step = e.step_index;
  }

  Simulator sim{SimConfig{}};
  sim.reset(3);
  std::int64_t steps = 0, end_index = -1;
  std::vector<MatchEvent> log;
  for (;;) {
    const auto out = sim.step({Action::Zero(), Action::Zero()});
    ++steps;
    log.insert(log.end(), out.events.begin(), out.events.end());
    if (out.match_over) {
      end_index = log.back().step_index;
      break;
    }
  }

  Rng rng(4);
  std::uniform_int_distribution<int> kind(0, 2), side(0, 1), len(0, 300);
  int identity_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<MatchEvent> l;
    std::array<int, 2> goals{0, 0}, faults{0, 0};
    std::int64_t t = 0;
    for (int i = len(rng); i > 0; --i) {
      const Side s = side(rng) ? Side::B : Side::A;
      const int k = kind(rng);
      l.push_back({k == 0 ? EventKind::goal : k == 1 ? EventKind::fault : EventKind::stuck_reset, s, ++t});
      if (k == 0) ++goals[index(s)];
      if (k == 1) ++faults[index(s)];
    }
    l.push_back({EventKind::match_end, std::nullopt, t + 1});
    const MatchResult r = score_match(l);
    for (Side s : {Side::A, Side::B})
      if (r.points(s) != goals[index(s)] - faults[index(s)] / 3) ++identity_bad;
  }
  return {fault_step == 750 && steps == 45000 && end_index == 45000 && identity_bad == 0,
          fmt("fault at step %ld (want 750), match ended after %ld steps (want 45000), %d point-identity "
              "violations in 1000 logs",
              static_cast<long>(fault_step), static_cast<long>(steps), identity_bad)};
}

// kinematics

Verdict kinematics() {
  Rng rng(5);
  double fd_err = 0.0, pinv_err = 0.0, vel_excess = 0.0;
  int full_rank = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Chain c = random_chain(rng);
    const JointVec q = random_configuration(c, rng);
    const auto J = jacobian(c, q);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      JointVec hi = q, lo = q;
      hi[i] += h;
      lo[i] -= h;
      const Vec3d fd = (forward_kinematics(c, hi) - forward_kinematics(c, lo)) / (2 * h);
      fd_err = std::max(fd_err, (J.col(i) - fd).cwiseAbs().maxCoeff());
    }
    const Eigen::MatrixXd Jd = J;
    if (Eigen::JacobiSVD<Eigen::MatrixXd>(Jd).singularValues().minCoeff() >= 1e-3) {
      ++full_rank;
      pinv_err = std::max(pinv_err, (Jd * pseudo_inverse(Jd) * Jd - Jd).cwiseAbs().maxCoeff());
    }
  }
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 100000; ++trial) {
    const Chain c = random_chain(rng);
    const JointVec q = random_configuration(c, rng);
    ResolveOptions<double> opt;
    opt.clip = trial % 2 ? ClipMode::per_joint : ClipMode::preserve_direction;
    const auto cmd = resolve_action(c, q, CartesianDisplacement<double>{d(rng), d(rng), d(rng)}, 0.02, opt);
    const JointVec ratio = cmd.velocities.cwiseAbs().cwiseQuotient(c.velocity_limits());
    vel_excess = std::max(vel_excess, ratio.maxCoeff());
  }
  return {fd_err <= 1e-5 && pinv_err <= 1e-8 && vel_excess <= 1.0 + 1e-12,
          fmt("max |J - FD| %.2e (limit 1e-5); max |J J+ J - J| %.2e over %d full-rank (limit 1e-8); max "
              "|qdot|/limit %.12f over 1e5 trials",
              fd_err, pinv_err, full_rank, vel_excess)};
}

// physics

std::pair<double, double> unfold(double x0, double v, double t, double X) {
  const double period = 4 * X;
  double p = std::fmod(x0 + v * t + X, period);
  if (p < 0) p += period;
  if (p <= 2 * X) return {p - X, v};
  return {3 * X - p, -v};
}

Verdict physics() {
  int tangential_bad = 0;
  {
    Table t;
    t.damping = 0;
    Rng rng(6);
    std::uniform_real_distribution<double> speed(0.1, 5.0), along(-2.0, 2.0);
    for (int trial = 0; trial < 10000; ++trial) {
      Puck p;
      const bool side_wall = trial % 2 == 0;
      if (side_wall) {
        p.position = Vec2d(0.1, t.half_width() - t.puck_radius - 1e-4);
        p.velocity = Vec2d(along(rng), speed(rng));
      } else {
        p.position = Vec2d(t.half_length() - t.puck_radius - 1e-4, 0.4);
        p.velocity = Vec2d(speed(rng), along(rng));
      }
      const Puck out = substep(p, std::span<const Mallet>{}, t, 0.002);
      if (side_wall ? out.velocity.x() != p.velocity.x() : out.velocity.y() != p.velocity.y()) ++tangential_bad;
    }
  }
  int energy_bad = 0;
  {
    const Table table;
    Rng rng(7);
    std::uniform_real_distribution<double> x(-0.9, 0.9), y(-0.45, 0.45), v(-4.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Mallet> mallets(2);
      mallets[0].position = Vec2d(x(rng), y(rng));
      mallets[1].position = Vec2d(x(rng), y(rng));
      Puck p;
      p.position = Vec2d(x(rng), y(rng));
      p.velocity = Vec2d(v(rng), v(rng));
      double energy = p.kinetic_energy();
      for (int i = 0; i < 2000; ++i) {
        p = substep(p, std::span<const Mallet>(mallets), table, 0.002);
        if (detect_goal(p, table)) break;
        if (p.kinetic_energy() > energy * (1 + 1e-12)) ++energy_bad;
        energy = p.kinetic_energy();
      }
    }
  }
  double billiard_err = 0.0;
  {
    Table table;
    table.damping = 0;
    table.restitution_wall = 1;
    table.goal_width = 0;
    const double X = table.half_length() - table.puck_radius;
    const double Y = table.half_width() - table.puck_radius;
    Rng rng(8);
    std::uniform_real_distribution<double> pos(-0.4, 0.4), vel(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
      Puck p;
      p.position = Vec2d(pos(rng), pos(rng));
      p.velocity = Vec2d(vel(rng), vel(rng));
      const Puck start = p;
      for (int i = 0; i < 1000; ++i) p = substep(p, std::span<const Mallet>{}, table, 0.002);
      const double x = unfold(start.position.x(), start.velocity.x(), 2.0, X).first;
      const double y = unfold(start.position.y(), start.velocity.y(), 2.0, Y).first;
      billiard_err = std::max(billiard_err, (p.position - Vec2d(x, y)).cwiseAbs().maxCoeff());
    }
  }
  return {tangential_bad == 0 && energy_bad == 0 && billiard_err <= 1e-6,
          fmt("%d of 10000 wall contacts changed tangential velocity; %d energy increases; billiard error "
              "%.2e m after 1000 substeps (limit 1e-6)",
              tangential_bad, energy_bad, billiard_err)};
}

// self-play pool

SnapshotPtr tagged(std::int64_t episode) {
  return make_toy_learner(0, Eigen::VectorXd::Constant(toy_learner_parameter_count(0), static_cast<double>(episode)),
                          PolicyMetadata{"balanced", episode, 1});
}

Verdict pool() {
  Rng rng(9);
  OpponentPool p;
  p.members.push_back(tagged(0));
  std::size_t max_size = 0, last = 1;
  int off_schedule = 0;
  for (std::int64_t e = 1; e <= 100000; ++e) {
    p = maybe_add(std::move(p), tagged(e), e, rng);
    max_size = std::max(max_size, p.members.size());
    if (p.members.back()->metadata().episode == e && e % 1000 != 0) ++off_schedule;
    if (p.members.size() != last && e % 1000 != 0) ++off_schedule;
    last = p.members.size();
  }

  OpponentPool full;
  for (int i = 0; i < 25; ++i) full.members.push_back(tagged(i));
  std::vector<int> counts(25, 0);
  Rng draw(10);
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(sample_opponent(full, draw)->metadata().episode)];
  double chi2 = 0.0;
  const double expected = 100000.0 / 25.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  constexpr double kChiSquare24At99 = 42.9798;

  const SimConfig cfg;
  std::map<Strategy, std::vector<SnapshotPtr>> histories;
  for (Strategy s : kStrategies)
    for (int i = 0; i < 20; ++i) histories[s].push_back(tagged(i));
  const std::size_t boot = bootstrap_stage2(histories, make_scripted_baseline(cfg)).members.size();

  return {max_size <= 25 && off_schedule == 0 && chi2 < kChiSquare24At99 && boot == 25,
          fmt("max size %zu over 1e5 episodes, %d off-schedule insertions, chi-square %.2f (99%% limit %.2f), "
              "bootstrap size %zu",
              max_size, off_schedule, chi2, kChiSquare24At99, boot)};
}

// ensemble

Verdict ensemble() {
  int table_bad = 0;
  for (int margin : {1, 2, 3, 4, 5}) {
    for (int diff = -10; diff <= 10; ++diff) {
      for (int opp = 0; opp <= 5; ++opp) {
        const int own = opp + diff;
        if (own < 0) continue;
        const Strategy want = diff < 0 ? Strategy::aggressive : diff >= margin ? Strategy::defensive : Strategy::balanced;
        if (select_strategy(own, opp, margin) != want) ++table_bad;
      }
    }
  }

  const SimConfig cfg;
  const EstimatorThresholds th = EstimatorThresholds::for_config(cfg);
  const char* policies[] = {"baseline", "jitterer", "blocker", "idle"};
  Rng pick(11);
  std::uniform_int_distribution<int> which(0, 3);
  int exact = 0;
  const int matches = 1000;
  for (int m = 0; m < matches; ++m) {
    const std::uint64_t seed = mix_seed(12, static_cast<std::uint64_t>(m));
    auto a = make_controller(policies[which(pick)], cfg);
    auto b = make_controller(policies[which(pick)], cfg);
    Simulator sim(cfg);
    sim.reset(seed);
    a->reset(mix_seed(seed, 10));
    b->reset(mix_seed(seed, 11));
    ScoreEstimate est;
    std::vector<MatchEvent> log;
    ObservationStack prev = sim.observation(Side::A);
    for (;;) {
      const auto out = sim.step({a->act(sim.observation(Side::A)), b->act(sim.observation(Side::B))});
      log.insert(log.end(), out.events.begin(), out.events.end());
      est = update_score_estimate(est, prev, sim.observation(Side::A), th);
      prev = sim.observation(Side::A);
      if (out.match_over) break;
    }
    const MatchResult truth = score_match(log);
    exact += est.own_goals == truth.goals[0] && est.opp_goals == truth.goals[1] && est.own_faults == truth.faults[0] &&
             est.opp_faults == truth.faults[1];
  }
  const double rate = static_cast<double>(exact) / matches;
  return {table_bad == 0 && rate >= 0.99,
          fmt("%d rule-table mismatches; estimator exact on %d of %d noise-free matches (%.1f%%, need 99%%)",
              table_bad, exact, matches, 100.0 * rate)};
}

// determinism

Verdict determinism() {
  const LoadedConfig config = load_config({});
  const char* policies[] = {"baseline", "jitterer", "blocker", "idle"};
  Rng pick(13);
  std::uniform_int_distribution<int> which(0, 3);
  int identical = 0, verified = 0;
  const int matches = 100;
  for (int m = 0; m < matches; ++m) {
    MatchSetup s;
    s.config = config;
    s.seed = pick();
    s.mirror = m % 2 == 1;
    s.policy_a = policies[which(pick)];
    s.policy_b = policies[which(pick)];
    if (m % 3 == 0) s.ema_alpha = 0.3;
    const std::string replay = run_match(s).replay;
    if (m < 10) identical += run_match(s).replay == replay;
    try {
      verify_replay(replay, config);
      ++verified;
    } catch (const VerificationError& e) {
      std::fprintf(stderr, "replay %d: %s\n", m, e.what());
    }
  }
  return {identical == 10 && verified == matches,
          fmt("%d of 10 reruns byte-identical; replay-verify passed on %d of %d random matches", identical, verified,
              matches)};
}

// directional self-play effect

struct SelfPlaySettings {
  std::int64_t budget = 6000;
  int max_episode_steps = 1000;
  int eval_matches = 6;
  std::string held_out = "jitterer";
  // reported next to the verdict, never used by it
  std::string also_shown = "blocker";
};

double differential(const SnapshotPtr& learner, const std::string& opponent, int matches, std::uint64_t seed,
                    const LoadedConfig& config) {
  double sum = 0.0;
  for (int m = 0; m < matches; ++m) {
    MatchSetup s;
    s.config = config;
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(m));
    s.mirror = m % 2 == 1;
    SnapshotController a(learner);
    auto b = make_controller(opponent, config.sim);
    sum += run_match(s, a, *b).result.differential(Side::A);
  }
  return sum / matches;
}

Verdict selfplay() {
  const auto t0 = Clock::now();
  const SelfPlaySettings st;
  const LoadedConfig config = load_config({});
  LearnerEnvConfig env;
  env.sim = config.sim;
  env.learner_noise = config.noise;
  env.max_episode_steps = st.max_episode_steps;
  const EnvFactory factory = default_env_factory(env);
  EsOptions opt;

  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    OpponentPool start;
    start.members.push_back(make_scripted_baseline(config.sim));
    PoolOpponents pool(start);
    Rng r1(mix_seed(seed, 1));
    const auto pooled = train_toy_learner(factory, pool, Strategy::balanced, st.budget, r1, opt);

    FixedOpponent fixed(make_scripted_baseline(config.sim));
    Rng r2(mix_seed(seed, 1));
    const auto single = train_toy_learner(factory, fixed, Strategy::balanced, st.budget, r2, opt);

    const std::uint64_t eval_seed = mix_seed(seed, 99);
    const double dp = differential(pooled.final_snapshot(), st.held_out, st.eval_matches, eval_seed, config);
    const double df = differential(single.final_snapshot(), st.held_out, st.eval_matches, eval_seed, config);
    const bool ok = dp >= 0.0 && df < dp;
    wins += ok;
    const double bp = differential(pooled.final_snapshot(), st.also_shown, st.eval_matches, eval_seed, config);
    const double bf = differential(single.final_snapshot(), st.also_shown, st.eval_matches, eval_seed, config);
    per_seed << fmt(" [seed %lu pool %+.2f fixed %+.2f %s; %s pool %+.2f fixed %+.2f]",
                    static_cast<unsigned long>(seed), dp, df, ok ? "ok" : "no", st.also_shown.c_str(), bp, bf);
  }
  return {wins >= 3, fmt("%d of 5 seeds (need 3) vs held-out %s, %ld episodes per learner, %.0f s:", wins,
                         st.held_out.c_str(), static_cast<long>(st.budget), seconds_since(t0)) +
                         per_seed.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"observation", observation_bounds}, {"rewards", reward_table}, {"rules", match_rules},
      {"kinematics", kinematics},          {"physics", physics},      {"pool", pool},
      {"ensemble", ensemble},              {"determinism", determinism}, {"selfplay", selfplay}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
