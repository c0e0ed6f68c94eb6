#include "airhockey/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace airhockey {

namespace {

constexpr std::string_view kReplayMagic = "airhockey-replay 1";

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string write_replay(const MatchSetup& s, const std::vector<MatchEvent>& log) {
  std::ostringstream out;
  out << kReplayMagic << "\n";
  out << "seed " << s.seed << "\n";
  out << "mirror " << (s.mirror ? 1 : 0) << "\n";
  out << "table " << s.config.table_hash << "\n";
  out << "chain " << s.config.chain_hash << "\n";
  out << "rules " << s.config.rules_hash << "\n";
  out << "policy_a " << s.policy_a << "\n";
  out << "policy_b " << s.policy_b << "\n";
  if (s.ema_alpha) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, *s.ema_alpha);
    out << "ema " << std::string(buf, r.ptr) << "\n";
  } else {
    out << "ema none\n";
  }
  out << "events\n";
  for (const auto& e : log) out << format_event(e) << "\n";
  return out.str();
}

void run_parallel(std::size_t jobs, int threads, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    try {
      for (std::size_t j = next++; j < jobs; j = next++) body(j);
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!failure) failure = std::current_exception();
      next = jobs;
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void RunConfig::validate() const {
  if (matches < 1) throw ConfigError("matches must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (ema_alpha && !(*ema_alpha > 0 && *ema_alpha <= 1)) throw ConfigError("ema alpha must lie in (0, 1]");
  if (!(latency_budget_ms > 0)) throw ConfigError("latency budget must be positive");
  if (stage != "1" && stage != "2" && stage != "all") throw ConfigError("stage must be 1, 2 or all");
  if (budget_episodes < 0) throw ConfigError("budget must be non-negative");
  if (hidden < 0) throw ConfigError("hidden units must be non-negative");
  if (population < 2 || population % 2 != 0) throw ConfigError("population must be even and at least 2");
  if (episodes_per_member < 1 || checkpoint_every < 1) throw ConfigError("episode counts must be positive");
  if (!(es_sigma > 0) || !(learning_rate > 0)) throw ConfigError("ES step sizes must be positive");
  if (pool_add_interval < 1 || pool_capacity < 1) throw ConfigError("pool settings must be positive");
  if (plateau_window < 1 || !(plateau_tolerance >= 0)) throw ConfigError("invalid plateau settings");
  if (max_episode_steps < 1 || bench_steps < 1) throw ConfigError("step counts must be positive");
}

std::unique_ptr<Controller> make_controller(const std::string& spec, const SimConfig& config,
                                            std::optional<double> ema_alpha) {
  if (spec == "baseline") return std::make_unique<SnapshotController>(make_scripted_baseline(config), ema_alpha, spec);
  if (spec == "blocker")
    return std::make_unique<SnapshotController>(make_scripted_variant(VariantType::passive_blocker, config), ema_alpha, spec);
  if (spec == "jitterer")
    return std::make_unique<SnapshotController>(make_scripted_variant(VariantType::random_jitterer, config), ema_alpha, spec);
  if (spec == "idle")
    return std::make_unique<SnapshotController>(make_scripted_variant(VariantType::idle, config), ema_alpha, spec);
  if (spec.rfind("ensemble:", 0) == 0) return make_ensemble(spec.substr(9), config);
  if (!std::filesystem::exists(spec)) throw ConfigError("unknown policy '" + spec + "'");
  return std::make_unique<SnapshotController>(load_checkpoint(spec), ema_alpha, spec);
}

LatencyStats summarize_latency(std::vector<double> samples, double budget_ms) {
  LatencyStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size()))) - 1;
    return samples[std::min(i, samples.size() - 1)];
  };
  s.p50_ms = quantile(0.5);
  s.p99_ms = quantile(0.99);
  s.max_ms = samples.back();
  s.over_budget = std::count_if(samples.begin(), samples.end(), [&](double v) { return v > budget_ms; });
  return s;
}

MatchOutcome run_match(const MatchSetup& setup, Controller& a, Controller& b) {
  Simulator sim(setup.config.sim);
  // the opening side is drawn from its own stream so mirroring leaves the
  // world stream untouched
  Rng opening(mix_seed(setup.seed, 7));
  Side first = std::bernoulli_distribution(0.5)(opening) ? Side::A : Side::B;
  if (setup.mirror) first = other(first);
  sim.reset(setup.seed, {}, first);
  a.reset(mix_seed(setup.seed, setup.mirror ? 11 : 10));
  b.reset(mix_seed(setup.seed, setup.mirror ? 10 : 11));

  std::vector<MatchEvent> log;
  std::vector<double> latency;
  if (setup.measure_latency) latency.reserve(static_cast<std::size_t>(setup.config.sim.rules.match_steps));
  for (;;) {
    const auto t0 = Clock::now();
    const Action act_a = a.act(sim.observation(Side::A));
    const Action act_b = b.act(sim.observation(Side::B));
    StepOutcome out = sim.step({act_a, act_b});
    if (setup.measure_latency) latency.push_back(elapsed_ms(t0));
    log.insert(log.end(), out.events.begin(), out.events.end());
    if (out.match_over) break;
  }

  MatchOutcome outcome;
  outcome.result = score_match(log);
  outcome.replay = write_replay(setup, log);
  if (setup.measure_latency) {
    outcome.latency = summarize_latency(std::move(latency), setup.latency_budget_ms);
    if (outcome.latency.p99_ms > setup.latency_budget_ms)
      std::cerr << "warning: p99 step latency " << outcome.latency.p99_ms << " ms exceeds the "
                << setup.latency_budget_ms << " ms budget\n";
  }
  return outcome;
}

MatchOutcome run_match(const MatchSetup& setup) {
  auto a = make_controller(setup.policy_a, setup.config.sim, setup.ema_alpha);
  auto b = make_controller(setup.policy_b, setup.config.sim, setup.ema_alpha);
  return run_match(setup, *a, *b);
}

ReplayHeader parse_replay_header(const std::string& replay) {
  std::istringstream in(replay);
  std::string line;
  if (!std::getline(in, line) || line != kReplayMagic) throw VerificationError("not a replay log");
  ReplayHeader h;
  bool seen_events = false;
  int fields = 0;
  while (std::getline(in, line)) {
    if (line == "events") {
      seen_events = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw VerificationError("malformed replay header line '" + line + "'");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    ++fields;
    try {
      if (key == "seed") h.seed = std::stoull(value);
      else if (key == "mirror") h.mirror = value == "1";
      else if (key == "table") h.table_hash = value;
      else if (key == "chain") h.chain_hash = value;
      else if (key == "rules") h.rules_hash = value;
      else if (key == "policy_a") h.policy_a = value;
      else if (key == "policy_b") h.policy_b = value;
      else if (key == "ema") h.ema_alpha = value == "none" ? std::nullopt : std::optional<double>(std::stod(value));
      else throw VerificationError("unknown replay header key '" + key + "'");
    } catch (const std::logic_error&) {
      throw VerificationError("bad value in replay header line '" + line + "'");
    }
  }
  if (!seen_events || fields != 8) throw VerificationError("incomplete replay header");
  return h;
}

void verify_replay(const std::string& replay, const LoadedConfig& config) {
  const ReplayHeader h = parse_replay_header(replay);
  if (h.table_hash != config.table_hash || h.chain_hash != config.chain_hash || h.rules_hash != config.rules_hash)
    throw VerificationError("replay was recorded with different table, chain or rules configs");
  MatchSetup setup;
  setup.config = config;
  setup.seed = h.seed;
  setup.mirror = h.mirror;
  setup.policy_a = h.policy_a;
  setup.policy_b = h.policy_b;
  setup.ema_alpha = h.ema_alpha;
  const std::string again = run_match(setup).replay;
  if (again == replay) return;

  std::istringstream x(replay), y(again);
  std::string lx, ly;
  for (int n = 1;; ++n) {
    const bool gx = static_cast<bool>(std::getline(x, lx));
    const bool gy = static_cast<bool>(std::getline(y, ly));
    if (!gx || !gy || lx != ly)
      throw VerificationError("replay diverges at line " + std::to_string(n) + ": recorded '" + (gx ? lx : "<end>") +
                              "', reproduced '" + (gy ? ly : "<end>") + "'");
  }
}

std::vector<std::pair<std::string, std::string>> tournament_schedule(const std::vector<std::string>& policies) {
  if (policies.size() < 2) throw ConfigError("a tournament needs at least two policies");
  for (std::size_t i = 0; i < policies.size(); ++i)
    for (std::size_t j = i + 1; j < policies.size(); ++j)
      if (policies[i] == policies[j]) throw ConfigError("duplicate policy '" + policies[i] + "' in tournament");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : policies)
    for (const auto& b : policies)
      if (a != b) out.emplace_back(a, b);
  return out;
}

TournamentResult run_tournament(const std::vector<std::string>& policies, int matches_per_pair,
                                const LoadedConfig& config, std::uint64_t seed, int threads,
                                std::optional<double> ema_alpha) {
  if (matches_per_pair < 1) throw ConfigError("matches per pair must be at least 1");
  const auto schedule = tournament_schedule(policies);
  // fail fast on bad specs before spawning work
  for (const auto& p : policies) make_controller(p, config.sim, ema_alpha);

  TournamentResult t;
  for (const auto& [a, b] : schedule)
    t.pairs.push_back({a, b, matches_per_pair, 0.0, 0.0, std::vector<MatchResult>(matches_per_pair)});

  const std::size_t jobs = t.pairs.size() * static_cast<std::size_t>(matches_per_pair);
  run_parallel(jobs, threads, [&](std::size_t j) {
    PairResult& pair = t.pairs[j / matches_per_pair];
    const auto m = j % matches_per_pair;
    MatchSetup s;
    s.config = config;
    s.seed = mix_seed(mix_seed(seed, fnv1a64(pair.a + "\n" + pair.b)), m);
    s.policy_a = pair.a;
    s.policy_b = pair.b;
    s.ema_alpha = ema_alpha;
    pair.results[m] = run_match(s).result;
  });
  for (auto& pair : t.pairs) {
    for (const auto& r : pair.results) {
      pair.mean_points_a += r.points(Side::A);
      pair.mean_points_b += r.points(Side::B);
    }
    pair.mean_points_a /= pair.matches;
    pair.mean_points_b /= pair.matches;
  }
  return t;
}

std::string format_pair(const PairResult& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f : %.2f", p.mean_points_a, p.mean_points_b);
  return p.a + " vs " + p.b + ": average score " + buf + " over " + std::to_string(p.matches) + " matches";
}

namespace {

LearnerEnvConfig env_config(const RunConfig& run, const LoadedConfig& config) {
  LearnerEnvConfig c;
  c.sim = config.sim;
  c.learner_noise = config.noise;
  c.rewards = config.rewards;
  c.max_episode_steps = run.max_episode_steps;
  return c;
}

EsOptions es_options(const RunConfig& run, PlateauDetector& plateau) {
  EsOptions o;
  o.hidden = run.hidden;
  o.population = run.population;
  o.episodes_per_member = run.episodes_per_member;
  o.sigma = run.es_sigma;
  o.learning_rate = run.learning_rate;
  o.checkpoint_every = run.checkpoint_every;
  o.workers = run.threads;
  o.on_generation = [&plateau](const GenerationStats& g) {
    bool done = false;
    for (double r : g.episode_returns) done = plateau.push(r);
    return done;
  };
  return o;
}

std::string checkpoint_name(const SnapshotPtr& s, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ckpt_%03zu_ep%09lld.policy", i, static_cast<long long>(s->metadata().episode));
  return buf;
}

StageOutput write_stage(const std::filesystem::path& dir, const TrainingResult& result, const OpponentPool& pool,
                        bool plateaued) {
  std::filesystem::create_directories(dir);
  StageOutput out;
  out.checkpoints = result.checkpoints;
  out.pool = pool;
  out.plateaued = plateaued;
  Json names = Json::array();
  for (std::size_t i = 0; i < result.checkpoints.size(); ++i) {
    const std::string name = checkpoint_name(result.checkpoints[i], i);
    save_checkpoint(*result.checkpoints[i], dir / name);
    out.paths.push_back(dir / name);
    names.push_back(name);
  }
  Json curve = Json::array();
  for (const auto& g : result.generations) curve.push_back({{"episodes", g.episodes}, {"mean_return", g.mean_return}});
  save_json_file({{"format_version", kConfigFormatVersion},
                  {"checkpoints", names},
                  {"episodes", result.episodes},
                  {"plateaued", plateaued},
                  {"learning_curve", curve}},
                 dir / "history.json");

  std::vector<std::filesystem::path> member_paths;
  for (std::size_t i = 0; i < pool.members.size(); ++i) {
    const std::string name = "pool/member_" + std::to_string(i) + ".policy";
    save_checkpoint(*pool.members[i], dir / name);
    member_paths.emplace_back(name);
  }
  save_pool_manifest(pool, member_paths, dir / "pool.json");
  return out;
}

}  // namespace

std::vector<SnapshotPtr> load_history(const std::filesystem::path& stage_dir) {
  const Json doc = load_json_file(stage_dir / "history.json");
  std::vector<SnapshotPtr> out;
  try {
    for (const auto& name : doc.at("checkpoints")) out.push_back(load_checkpoint(stage_dir / name.get<std::string>()));
  } catch (const Json::exception& e) {
    throw ConfigError((stage_dir / "history.json").string() + ": " + e.what());
  }
  return out;
}

std::map<Strategy, StageOutput> run_stage1(const RunConfig& run, const LoadedConfig& config) {
  run.validate();
  std::map<Strategy, StageOutput> out;
  const EnvFactory factory = default_env_factory(env_config(run, config));
  for (Strategy s : kStrategies) {
    OpponentPool pool;
    pool.capacity = run.pool_capacity;
    pool.add_interval = run.pool_add_interval;
    pool.members.push_back(make_scripted_baseline(config.sim));
    PoolOpponents opponents(pool);
    PlateauDetector plateau(run.plateau_window, run.plateau_tolerance);
    Rng rng(mix_seed(run.seed, 1000 + static_cast<std::uint64_t>(s)));
    const TrainingResult result =
        train_toy_learner(factory, opponents, s, run.budget_episodes, rng, es_options(run, plateau));
    out[s] = write_stage(run.output_dir / "stage1" / std::string(to_string(s)), result, opponents.pool(),
                         plateau.plateaued());
  }
  return out;
}

StageOutput run_stage2(const RunConfig& run, const LoadedConfig& config) {
  run.validate();
  std::map<Strategy, std::vector<SnapshotPtr>> histories;
  for (Strategy s : kStrategies) histories[s] = load_history(run.output_dir / "stage1" / std::string(to_string(s)));
  OpponentPool pool = bootstrap_stage2(histories, make_scripted_baseline(config.sim), run.pool_capacity);
  pool.add_interval = run.pool_add_interval;
  PoolOpponents opponents(pool);
  PlateauDetector plateau(run.plateau_window, run.plateau_tolerance);
  Rng rng(mix_seed(run.seed, 2000));
  const TrainingResult result = train_toy_learner(default_env_factory(env_config(run, config)), opponents,
                                                  Strategy::balanced, run.budget_episodes, rng,
                                                  es_options(run, plateau));
  const auto dir = run.output_dir / "stage2" / "balanced";
  StageOutput stage = write_stage(dir, result, opponents.pool(), plateau.plateaued());

  EnsembleManifest m;
  m.checkpoints[Strategy::balanced] = std::filesystem::relative(stage.paths.back(), run.output_dir);
  for (Strategy s : {Strategy::aggressive, Strategy::defensive}) {
    const auto sdir = run.output_dir / "stage1" / std::string(to_string(s));
    const Json doc = load_json_file(sdir / "history.json");
    m.checkpoints[s] = std::filesystem::relative(sdir / doc.at("checkpoints").back().get<std::string>(), run.output_dir);
  }
  save_ensemble_manifest(m, run.output_dir / "ensemble.json");
  return stage;
}

BenchReport run_bench(const RunConfig& run, const LoadedConfig& config) {
  run.validate();
  BenchReport report;
  const std::string pa = run.policies.empty() ? "baseline" : run.policies[0];
  const std::string pb = run.policies.size() > 1 ? run.policies[1] : pa;
  auto a = make_controller(pa, config.sim, run.ema_alpha);
  auto b = make_controller(pb, config.sim, run.ema_alpha);
  Simulator sim(config.sim);
  sim.reset(run.seed);
  a->reset(mix_seed(run.seed, 10));
  b->reset(mix_seed(run.seed, 11));

  std::vector<double> samples;
  for (std::int64_t i = 0; i < run.bench_steps; ++i) {
    const auto t0 = Clock::now();
    const Action x = a->act(sim.observation(Side::A));
    const Action y = b->act(sim.observation(Side::B));
    const StepOutcome out = sim.step({x, y});
    samples.push_back(elapsed_ms(t0));
    if (out.match_over) sim.reset(mix_seed(run.seed, static_cast<std::uint64_t>(i)));
  }
  report.steps = run.bench_steps;
  report.step = summarize_latency(std::move(samples), run.latency_budget_ms);

  const auto& chain = config.sim.arm.chain;
  const JointVec q = sim.home_joints();
  constexpr int kReps = 20000;
  volatile double sink = 0.0;
  auto t0 = Clock::now();
  for (int i = 0; i < kReps; ++i) sink = sink + forward_kinematics(chain, q).x();
  report.fk_us = elapsed_ms(t0) * 1000.0 / kReps;
  t0 = Clock::now();
  for (int i = 0; i < kReps; ++i)
    sink = sink + resolve_action(chain, q, CartesianDisplacement<double>{0.01, -0.01, 0.0}, 0.02, config.sim.resolve)
                      .positions[0];
  report.resolve_us = elapsed_ms(t0) * 1000.0 / kReps;
  return report;
}

}  // namespace airhockey
