/*
 * Copyright 2026 The aoi-maintain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the AoI maintenance simulator and agents.
 *
 * Every function returns an aoim_status. On failure the thread-local message
 * from aoim_last_error() describes the problem; out-parameters are left
 * untouched. Handles are opaque and owned by the caller, who releases them
 * with the matching *_free function (passing NULL is allowed). A handle must
 * not be used from two threads at once; distinct handles are independent.
 */

#ifndef AOIM_AOIM_H_
#define AOIM_AOIM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(AOIM_BUILDING_LIBRARY)
#define AOIM_API __attribute__((visibility("default")))
#else
#define AOIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aoim_status {
  AOIM_OK = 0,
  AOIM_ERR_CONFIG = 1,     /* invalid configuration value or file */
  AOIM_ERR_USAGE = 2,      /* bad argument, dimension mismatch, bad state */
  AOIM_ERR_CAPABILITY = 3, /* request beyond what is supported */
  AOIM_ERR_NUMERICAL = 4,  /* non-finite values during training */
  AOIM_ERR_STATISTICS = 5, /* too few samples for a statistic */
  AOIM_ERR_IO = 6,         /* file could not be read or written */
  AOIM_ERR_INTERNAL = 7
} aoim_status;

typedef enum aoim_action {
  AOIM_ACTION_NONE = 0,
  AOIM_ACTION_NETWORK = 1,
  AOIM_ACTION_SENSORS = 2
} aoim_action;

typedef struct aoim_config aoim_config; /* scenario + agent settings */
typedef struct aoim_env aoim_env;
typedef struct aoim_policy aoim_policy; /* greedy policy from a checkpoint */

AOIM_API const char* aoim_version(void);
AOIM_API const char* aoim_last_error(void);

/* ---- configuration ---------------------------------------------------- */

AOIM_API size_t aoim_preset_count(void);
AOIM_API const char* aoim_preset_name(size_t index);

AOIM_API aoim_status aoim_config_preset(const char* name, aoim_config** out);
AOIM_API aoim_status aoim_config_load(const char* path, aoim_config** out);
AOIM_API aoim_status aoim_config_save(const aoim_config* config,
                                      const char* path);
AOIM_API aoim_status aoim_config_set(aoim_config* config, const char* key,
                                     const char* value);
/* Copies the value (NUL-terminated) into buf. *needed receives the length
 * including the terminator; AOIM_ERR_USAGE when cap is too small. */
AOIM_API aoim_status aoim_config_get(const aoim_config* config,
                                     const char* key, char* buf, size_t cap,
                                     size_t* needed);
AOIM_API aoim_status aoim_config_validate(const aoim_config* config);
AOIM_API void aoim_config_free(aoim_config* config);

/* ---- environment ------------------------------------------------------ */

AOIM_API aoim_status aoim_env_create(const aoim_config* config,
                                     aoim_env** out);
AOIM_API size_t aoim_env_num_sensors(const aoim_env* env);
/* aoi_out receives num_sensors values. */
AOIM_API aoim_status aoim_env_reset(aoim_env* env, uint64_t seed,
                                    uint32_t* aoi_out, size_t len);
/* terminal receives 1 on the last slot of the episode, else 0. */
AOIM_API aoim_status aoim_env_step(aoim_env* env, int action, double* reward,
                                   uint32_t* aoi_out, size_t len,
                                   int* terminal);
/* Hidden state, for instrumentation: sensor_faulty receives num_sensors
 * flags (1 = faulty). */
AOIM_API aoim_status aoim_env_truth(const aoim_env* env, uint8_t* sensor_faulty,
                                    size_t len, uint8_t* network_faulty);
AOIM_API void aoim_env_free(aoim_env* env);

/* Reward of taking `action` with end-of-slot AoI vector `aoi`. */
AOIM_API aoim_status aoim_reward(const aoim_config* config, int action,
                                 const uint32_t* aoi, size_t len,
                                 double* reward);

/* ---- training --------------------------------------------------------- */

typedef struct aoim_train_options {
  const char* algorithm; /* "m-dqn", "m-beg-dqn" or "m-a2c" */
  uint32_t sessions;
  uint32_t episodes;
  uint64_t seed; /* session j uses seed + j */
  uint32_t jobs; /* worker threads, 0 = hardware concurrency */
  const char* output_dir;
} aoim_train_options;

typedef void (*aoim_session_callback)(void* user, uint64_t seed,
                                      uint32_t episodes, double first_reward,
                                      double last_reward, double mean_reward);

/* Writes <output_dir>/sessions/<seed>.csv, <output_dir>/checkpoints/<seed>.ckpt
 * and, with at least two sessions, <output_dir>/curves.csv. */
AOIM_API aoim_status aoim_train(const aoim_config* config,
                                const aoim_train_options* options,
                                aoim_session_callback on_session, void* user);

/* ---- policies and evaluation ------------------------------------------ */

AOIM_API aoim_status aoim_policy_load(const char* path, aoim_policy** out);
/* kind: "never", "random" or "threshold" (parameter = AoI limit). */
AOIM_API aoim_status aoim_policy_scripted(const char* kind,
                                          uint32_t num_sensors,
                                          double parameter, aoim_policy** out);
AOIM_API aoim_status aoim_policy_save(const aoim_policy* policy,
                                      const char* path);
AOIM_API size_t aoim_policy_input_size(const aoim_policy* policy);
AOIM_API const char* aoim_policy_kind(const aoim_policy* policy);
AOIM_API aoim_status aoim_policy_act(const aoim_policy* policy,
                                     const uint32_t* aoi, size_t len,
                                     uint64_t seed, int* action);
AOIM_API void aoim_policy_free(aoim_policy* policy);

/* Greedy fault-tracking study written as CSV
 * (fault_type,threshold,tpr,fault_count). */
AOIM_API aoim_status aoim_evaluate_tpr(const aoim_policy* policy,
                                       const aoim_config* config,
                                       uint32_t episodes,
                                       const uint32_t* thresholds,
                                       size_t num_thresholds, uint64_t seed,
                                       const char* csv_path);

/* Greedy mean episode reward; ci_half_width is the 95% Student-t half-width
 * (0 when episodes < 2). */
AOIM_API aoim_status aoim_evaluate_reward(const aoim_policy* policy,
                                          const aoim_config* config,
                                          uint32_t episodes, uint64_t seed,
                                          double* mean, double* ci_half_width);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AOIM_AOIM_H_ */
