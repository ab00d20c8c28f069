#ifndef SAGIN_FFI_H
#define SAGIN_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum SaginStatus {
  SAGIN_STATUS_OK = 0,
  SAGIN_STATUS_NULL_POINTER = 1,
  SAGIN_STATUS_INVALID_ARGUMENT = 2,
  SAGIN_STATUS_DIMENSION = 3,
  SAGIN_STATUS_LAYOUT = 4,
  SAGIN_STATUS_DECODE = 5,
  SAGIN_STATUS_INSUFFICIENT_REPLAY = 6,
  SAGIN_STATUS_FEDERATION = 7,
  SAGIN_STATUS_CONFIG = 8,
  SAGIN_STATUS_BUFFER_TOO_SMALL = 9,
  SAGIN_STATUS_IO = 10,
  SAGIN_STATUS_INTERNAL = 11,
} SaginStatus;

/**
 * Discrete soft actor-critic agent.
 */
typedef struct SaginAgent SaginAgent;

/**
 * Simulator environment with one agent per base station.
 */
typedef struct SaginEnv SaginEnv;

/**
 * Cumulative simulator metrics.
 */
typedef struct SaginMetrics {
  uint64_t generated;
  uint64_t delivered;
  uint64_t dropped;
  uint64_t in_system;
  double throughput_bps;
  double drop_rate;
  double mean_delay_s;
} SaginMetrics;

/**
 * Losses and temperature after one training step.
 */
typedef struct SaginDiagnostics {
  double trend_loss_1;
  double trend_loss_2;
  double policy_loss;
  double alpha_loss;
  double alpha;
  double entropy;
} SaginDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap`. Returns the untruncated length without the NUL.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes or null with `cap == 0`.
 */
size_t sagin_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sagin_version(void);

/**
 * Creates an environment from an experiment config in TOML (its `sim` and
 * `env` tables are used; null means defaults).
 *
 * # Safety
 * `config_toml` must be null or a NUL-terminated string; `out_env` must be
 * writable.
 */
enum SaginStatus sagin_env_new(const char *config_toml, uint64_t seed, struct SaginEnv **out_env);

/**
 * # Safety
 * `env` must come from [`sagin_env_new`] and not be used afterwards.
 */
void sagin_env_free(struct SaginEnv *env);

/**
 * Agent count, observation length and action count.
 *
 * # Safety
 * `env` must be a live handle; the outputs must be writable.
 */
enum SaginStatus sagin_env_dims(struct SaginEnv *env,
                                size_t *num_agents,
                                size_t *obs_dim,
                                size_t *num_actions);

/**
 * Writes the observation of `agent` into `buf` (`len` must equal the
 * observation length).
 *
 * # Safety
 * `env` must be a live handle and `buf` valid for `len` floats.
 */
enum SaginStatus sagin_env_observe(struct SaginEnv *env, size_t agent, float *buf, size_t len);

/**
 * Whether `agent` has a batch awaiting a decision this tick.
 *
 * # Safety
 * `env` must be a live handle; `needs` must be writable.
 */
enum SaginStatus sagin_env_needs_action(struct SaginEnv *env, size_t agent, bool *needs);

/**
 * Advances one tick with one action per agent (ignored for idle agents).
 *
 * # Safety
 * `env` must be a live handle and `actions` valid for `len` values.
 */
enum SaginStatus sagin_env_step(struct SaginEnv *env, const uint32_t *actions, size_t len);

/**
 * Metrics accumulated since the environment was created.
 *
 * # Safety
 * `env` must be a live handle; `metrics` must be writable.
 */
enum SaginStatus sagin_env_metrics(struct SaginEnv *env, struct SaginMetrics *metrics);

/**
 * Creates a SAC agent with default hyper-parameters.
 *
 * # Safety
 * `out_agent` must be writable.
 */
enum SaginStatus sagin_agent_new(size_t obs_dim,
                                 size_t num_actions,
                                 uint64_t seed,
                                 struct SaginAgent **out_agent);

/**
 * # Safety
 * `agent` must come from [`sagin_agent_new`] and not be used afterwards.
 */
void sagin_agent_free(struct SaginAgent *agent);

/**
 * Chooses an action: sampled from the policy, or its argmax when `greedy`.
 *
 * # Safety
 * `agent` must be a live handle, `obs` valid for `len` floats and `action`
 * writable.
 */
enum SaginStatus sagin_agent_act(struct SaginAgent *agent,
                                 const float *obs,
                                 size_t len,
                                 bool greedy,
                                 uint32_t *action);

/**
 * Stores one transition in the agent's replay buffer.
 *
 * # Safety
 * `agent` must be a live handle; `obs` and `next_obs` valid for `len`
 * floats.
 */
enum SaginStatus sagin_agent_remember(struct SaginAgent *agent,
                                      const float *obs,
                                      uint32_t action,
                                      double reward,
                                      const float *next_obs,
                                      size_t len,
                                      bool terminal);

/**
 * One gradient step on a sampled batch. Returns
 * `SAGIN_STATUS_INSUFFICIENT_REPLAY` and changes nothing while the replay
 * holds fewer transitions than a batch.
 *
 * # Safety
 * `agent` must be a live handle; `diag` null or writable.
 */
enum SaginStatus sagin_agent_train_step(struct SaginAgent *agent, struct SaginDiagnostics *diag);

/**
 * Serialises the agent's networks and temperature. `written` receives the
 * required size even when `cap` is too small.
 *
 * # Safety
 * `agent` must be a live handle, `buf` valid for `cap` bytes and `written`
 * writable.
 */
enum SaginStatus sagin_agent_checkpoint(struct SaginAgent *agent,
                                        uint8_t *buf,
                                        size_t cap,
                                        size_t *written);

/**
 * Restores a checkpoint taken from an agent of the same shape.
 *
 * # Safety
 * `agent` must be a live handle and `buf` valid for `len` bytes.
 */
enum SaginStatus sagin_agent_restore(struct SaginAgent *agent, const uint8_t *buf, size_t len);

/**
 * Serialised trend network `index` (0 or 1) in wire format.
 *
 * # Safety
 * `agent` must be a live handle, `buf` valid for `cap` bytes and `written`
 * writable.
 */
enum SaginStatus sagin_agent_trend(struct SaginAgent *agent,
                                   size_t index,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *written);

/**
 * Replaces both global backup networks from wire-format buffers.
 *
 * # Safety
 * `agent` must be a live handle; each buffer valid for its length.
 */
enum SaginStatus sagin_agent_set_backups(struct SaginAgent *agent,
                                         const uint8_t *trend1,
                                         size_t len1,
                                         const uint8_t *trend2,
                                         size_t len2);

/**
 * `eps * local + (1 - eps) * global` on wire-format parameter sets.
 *
 * # Safety
 * Input buffers valid for their lengths, `buf` for `cap` bytes, `written`
 * writable.
 */
enum SaginStatus sagin_params_blend(const uint8_t *global,
                                    size_t global_len,
                                    const uint8_t *local,
                                    size_t local_len,
                                    double eps,
                                    uint8_t *buf,
                                    size_t cap,
                                    size_t *written);

/**
 * Elementwise mean of `count` wire-format parameter sets.
 *
 * # Safety
 * `models` and `lens` valid for `count` entries, each model buffer valid
 * for its length, `buf` for `cap` bytes, `written` writable.
 */
enum SaginStatus sagin_params_mean(const uint8_t *const *models,
                                   const size_t *lens,
                                   size_t count,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAGIN_FFI_H */
