#include "airhockey/learner_env.hpp"

#include <stdexcept>

namespace airhockey {

LearnerEnv::LearnerEnv(LearnerEnvConfig config)
    : config_(std::move(config)), rewards_(config_.rewards[static_cast<std::size_t>(config_.strategy)]), sim_(config_.sim) {
  config_.learner_noise.validate();
  if (config_.max_episode_steps <= 0) throw std::invalid_argument("max_episode_steps must be positive");
  pending_opponent_ = make_scripted_variant(VariantType::idle, config_.sim);
}

void LearnerEnv::set_opponent(SnapshotPtr opponent) {
  if (!opponent) throw std::invalid_argument("opponent snapshot is null");
  pending_opponent_ = std::move(opponent);
}

Observation LearnerEnv::reset(std::uint64_t seed) {
  opponent_ = std::make_unique<SnapshotController>(pending_opponent_);
  opponent_->reset(mix_seed(seed, 100));
  sim_.reset(seed, {config_.learner_noise, NoiseConfig{}});
  steps_ = 0;
  done_ = false;
  return sim_.observation(Side::A).flatten();
}

EnvStep LearnerEnv::step(const Action& action) {
  if (done_) throw std::logic_error("LearnerEnv::step called on a finished episode; call reset first");
  const Action opp = opponent_->act(sim_.observation(Side::B));
  StepOutcome outcome = sim_.step({action, opp});
  ++steps_;

  EnvStep out;
  out.invalid_action = outcome.invalid_action[0];
  for (const auto& e : outcome.events) {
    out.reward_exact = out.reward_exact + reward(e, Side::A, rewards_);
    if (e.kind == EventKind::episode_end) out.terminal = true;
  }
  out.reward = out.reward_exact.to_double();
  out.truncated = !out.terminal && (steps_ >= config_.max_episode_steps || outcome.match_over);
  out.events = std::move(outcome.events);
  // after a terminal event the simulator has already restarted the stack, so
  // the returned observation is the first one of the next faceoff
  out.observation = sim_.observation(Side::A).flatten();
  done_ = out.terminal || out.truncated;
  return out;
}

double run_episode(LearnerEnv& env, const PolicySnapshot& learner, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 101));
  env.reset(seed);
  double total = 0.0;
  while (!env.done()) total += env.step(policy_act(learner, env.stack(), rng)).reward;
  return total;
}

}  // namespace airhockey
