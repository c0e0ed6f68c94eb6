#include "airhockey/c_api.h"

#include "airhockey/harness.hpp"

#include <map>
#include <mutex>

namespace {

using airhockey::LearnerEnv;

std::mutex registry_mutex;
std::map<ah_handle, std::shared_ptr<LearnerEnv>> registry;
ah_handle next_handle = 1;
thread_local std::string last_error;

int fail(int code, std::string message) {
  last_error = std::move(message);
  return code;
}

std::shared_ptr<LearnerEnv> lookup(ah_handle h) {
  std::lock_guard lock(registry_mutex);
  const auto it = registry.find(h);
  return it == registry.end() ? nullptr : it->second;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    return fail(AH_ERR_INVALID_ARGUMENT, e.what());
  } catch (const airhockey::ConfigError& e) {
    return fail(AH_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::logic_error& e) {
    return fail(AH_ERR_STATE, e.what());
  } catch (const std::exception& e) {
    return fail(AH_ERR_INTERNAL, e.what());
  }
}

void copy_obs(const airhockey::Observation& obs, double* out) {
  for (int i = 0; i < airhockey::kObservationDim; ++i) out[i] = obs[i];
}

}  // namespace

extern "C" {

const char* ah_abi_version(void) { return AH_ABI_VERSION; }

const char* ah_last_error(void) { return last_error.c_str(); }

int ah_env_create(const char* strategy, const char* opponent, int noisy, ah_handle* out) {
  if (!strategy || !opponent || !out) return fail(AH_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> int {
    airhockey::LearnerEnvConfig c;
    c.strategy = airhockey::parse_strategy(strategy);
    if (!noisy) c.learner_noise = {};
    auto env = std::make_shared<LearnerEnv>(c);
    auto ctrl = airhockey::make_controller(opponent, c.sim);
    auto* snap = dynamic_cast<airhockey::SnapshotController*>(ctrl.get());
    if (!snap) return fail(AH_ERR_INVALID_ARGUMENT, "opponent must be a single policy");
    env->set_opponent(snap->snapshot());
    std::lock_guard lock(registry_mutex);
    *out = next_handle++;
    registry.emplace(*out, std::move(env));
    return AH_OK;
  });
}

int ah_env_close(ah_handle handle) {
  std::lock_guard lock(registry_mutex);
  if (registry.erase(handle) == 0) return fail(AH_ERR_BAD_HANDLE, "unknown or closed handle");
  return AH_OK;
}

int ah_env_spec_get(ah_handle handle, ah_env_spec* out) {
  auto env = lookup(handle);
  if (!env) return fail(AH_ERR_BAD_HANDLE, "unknown or closed handle");
  if (!out) return fail(AH_ERR_INVALID_ARGUMENT, "null argument");
  *out = {airhockey::kObservationDim, -1.0, 1.0, 2, -1.0, 1.0, env->config().max_episode_steps};
  return AH_OK;
}

int ah_env_reset(ah_handle handle, uint64_t seed, double* observation, int32_t observation_len) {
  auto env = lookup(handle);
  if (!env) return fail(AH_ERR_BAD_HANDLE, "unknown or closed handle");
  if (!observation) return fail(AH_ERR_INVALID_ARGUMENT, "null argument");
  if (observation_len != airhockey::kObservationDim) return fail(AH_ERR_ARITY, "observation buffer must hold 40 values");
  return guarded([&]() -> int {
    copy_obs(env->reset(seed), observation);
    return AH_OK;
  });
}

int ah_env_step(ah_handle handle, const double* action, int32_t action_len, double* observation,
                int32_t observation_len, double* reward, int32_t* terminal, int32_t* truncated) {
  auto env = lookup(handle);
  if (!env) return fail(AH_ERR_BAD_HANDLE, "unknown or closed handle");
  if (!action || !observation || !reward || !terminal || !truncated) return fail(AH_ERR_INVALID_ARGUMENT, "null argument");
  if (action_len != 2) return fail(AH_ERR_ARITY, "action must hold 2 values");
  if (observation_len != airhockey::kObservationDim) return fail(AH_ERR_ARITY, "observation buffer must hold 40 values");
  return guarded([&]() -> int {
    const auto s = env->step(airhockey::Action(action[0], action[1]));
    copy_obs(s.observation, observation);
    *reward = s.reward;
    *terminal = s.terminal ? 1 : 0;
    *truncated = s.truncated ? 1 : 0;
    return AH_OK;
  });
}

}  // extern "C"
