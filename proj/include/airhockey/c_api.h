#ifndef AIRHOCKEY_C_API_H
#define AIRHOCKEY_C_API_H

/* Flat C interface to the learner environment for foreign-language bindings.
 * All functions return AH_OK or an error code; ah_last_error() describes the
 * most recent failure on the calling thread. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define AH_ABI_VERSION "airhockey-abi/1"

enum {
  AH_OK = 0,
  AH_ERR_BAD_HANDLE = 1,
  AH_ERR_ARITY = 2,
  AH_ERR_INVALID_ARGUMENT = 3,
  AH_ERR_STATE = 4,
  AH_ERR_INTERNAL = 5
};

typedef uint64_t ah_handle;

typedef struct {
  int32_t observation_dim;
  double observation_low;
  double observation_high;
  int32_t action_dim;
  double action_low;
  double action_high;
  int32_t max_episode_steps;
} ah_env_spec;

const char* ah_abi_version(void);
const char* ah_last_error(void);

/* strategy: balanced, aggressive or defensive. opponent: baseline, blocker,
 * jitterer, idle or a checkpoint path. noisy selects the training noise model
 * for the learner. */
int ah_env_create(const char* strategy, const char* opponent, int noisy, ah_handle* out);
int ah_env_close(ah_handle handle);
int ah_env_spec_get(ah_handle handle, ah_env_spec* out);
int ah_env_reset(ah_handle handle, uint64_t seed, double* observation, int32_t observation_len);
int ah_env_step(ah_handle handle, const double* action, int32_t action_len, double* observation,
                int32_t observation_len, double* reward, int32_t* terminal, int32_t* truncated);

#ifdef __cplusplus
}
#endif

#endif
