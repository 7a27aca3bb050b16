// Copyright 2026 The aoi-maintain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aoim/aoim.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <numeric>
#include <string>

#include "aoim/config.hpp"
#include "aoim/env.hpp"
#include "aoim/error.hpp"
#include "aoim/harness.hpp"
#include "aoim/policy.hpp"

struct aoim_config {
  aoim::RunConfig config;
};

struct aoim_env {
  explicit aoim_env(aoim::ScenarioConfig c) : env(std::move(c)) {}
  aoim::Environment env;
};

struct aoim_policy {
  aoim::AgentCheckpoint checkpoint;
  std::unique_ptr<aoim::Policy> policy;
};

namespace {

thread_local std::string g_last_error;

aoim_status fail(aoim_status status, const char* what) {
  g_last_error = what;
  return status;
}

template <typename F>
aoim_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return AOIM_OK;
  } catch (const aoim::Error& e) {
    return fail(static_cast<aoim_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AOIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AOIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AOIM_ERR_INTERNAL, "unknown error");
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw aoim::UsageError(what);
}

void copy_aoi(const aoim::Observation& obs, uint32_t* out, size_t len) {
  require(out != nullptr, "null AoI output buffer");
  require(len == obs.aoi.size(), "AoI buffer length must equal num_sensors");
  std::copy(obs.aoi.begin(), obs.aoi.end(), out);
}

aoim::Observation to_observation(const uint32_t* aoi, size_t len) {
  require(aoi != nullptr || len == 0, "null AoI input");
  return aoim::Observation{std::vector<std::uint32_t>(aoi, aoi + len)};
}

}  // namespace

extern "C" {

AOIM_API const char* aoim_version(void) { return "1.0.0"; }

AOIM_API const char* aoim_last_error(void) { return g_last_error.c_str(); }

AOIM_API size_t aoim_preset_count(void) { return aoim::preset_names().size(); }

AOIM_API const char* aoim_preset_name(size_t index) {
  const auto& names = aoim::preset_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

AOIM_API aoim_status aoim_config_preset(const char* name, aoim_config** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null argument");
    *out = new aoim_config{aoim::preset(name)};
  });
}

AOIM_API aoim_status aoim_config_load(const char* path, aoim_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new aoim_config{aoim::load_run_config(path)};
  });
}

AOIM_API aoim_status aoim_config_save(const aoim_config* config,
                                      const char* path) {
  return guarded([&] {
    require(config != nullptr && path != nullptr, "null argument");
    aoim::save_run_config(config->config, path);
  });
}

AOIM_API aoim_status aoim_config_set(aoim_config* config, const char* key,
                                     const char* value) {
  return guarded([&] {
    require(config != nullptr && key != nullptr && value != nullptr,
            "null argument");
    aoim::RunConfig updated = config->config;
    aoim::set_config_value(updated, key, value);
    config->config = std::move(updated);
  });
}

AOIM_API aoim_status aoim_config_get(const aoim_config* config,
                                     const char* key, char* buf, size_t cap,
                                     size_t* needed) {
  return guarded([&] {
    require(config != nullptr && key != nullptr, "null argument");
    const auto kv = aoim::to_key_values(config->config);
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw aoim::ConfigError(std::string("unknown configuration key '") +
                              key + "'");
    }
    const size_t n = it->second.size() + 1;
    if (needed) *needed = n;
    require(buf != nullptr && cap >= n, "buffer too small for value");
    std::memcpy(buf, it->second.c_str(), n);
  });
}

AOIM_API aoim_status aoim_config_validate(const aoim_config* config) {
  return guarded([&] {
    require(config != nullptr, "null argument");
    config->config.scenario.validate();
    config->config.agent.validate();
  });
}

AOIM_API void aoim_config_free(aoim_config* config) { delete config; }

AOIM_API aoim_status aoim_env_create(const aoim_config* config,
                                     aoim_env** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "null argument");
    *out = new aoim_env(config->config.scenario);
  });
}

AOIM_API size_t aoim_env_num_sensors(const aoim_env* env) {
  return env ? env->env.config().num_sensors : 0;
}

AOIM_API aoim_status aoim_env_reset(aoim_env* env, uint64_t seed,
                                    uint32_t* aoi_out, size_t len) {
  return guarded([&] {
    require(env != nullptr, "null environment");
    require(aoi_out != nullptr && len == env->env.config().num_sensors,
            "AoI buffer length must equal num_sensors");
    const auto [obs, state] = env->env.reset(seed);
    copy_aoi(obs, aoi_out, len);
  });
}

AOIM_API aoim_status aoim_env_step(aoim_env* env, int action, double* reward,
                                   uint32_t* aoi_out, size_t len,
                                   int* terminal) {
  return guarded([&] {
    require(env != nullptr, "null environment");
    require(aoi_out != nullptr && len == env->env.config().num_sensors,
            "AoI buffer length must equal num_sensors");
    const auto out = env->env.step(aoim::action_from_index(action));
    copy_aoi(out.next_observation, aoi_out, len);
    if (reward) *reward = out.reward;
    if (terminal) *terminal = out.terminal ? 1 : 0;
  });
}

AOIM_API aoim_status aoim_env_truth(const aoim_env* env, uint8_t* sensor_faulty,
                                    size_t len, uint8_t* network_faulty) {
  return guarded([&] {
    require(env != nullptr, "null environment");
    const auto& s = env->env.state();
    require(sensor_faulty != nullptr && len == s.sensor_health.size(),
            "sensor buffer length must equal num_sensors");
    for (size_t i = 0; i < len; ++i) {
      sensor_faulty[i] = s.sensor_health[i] == aoim::Health::kFaulty;
    }
    if (network_faulty) {
      *network_faulty = s.network_health == aoim::Health::kFaulty;
    }
  });
}

AOIM_API void aoim_env_free(aoim_env* env) { delete env; }

AOIM_API aoim_status aoim_reward(const aoim_config* config, int action,
                                 const uint32_t* aoi, size_t len,
                                 double* reward) {
  return guarded([&] {
    require(config != nullptr && reward != nullptr, "null argument");
    const auto& sc = config->config.scenario;
    require(len == sc.num_sensors, "AoI length must equal num_sensors");
    const auto obs = to_observation(aoi, len);
    for (auto a : obs.aoi) {
      require(a >= 1 && a <= sc.aoi_max, "AoI component outside [1, aoi_max]");
    }
    *reward = aoim::reward_fn(aoim::action_from_index(action), obs, sc);
  });
}

AOIM_API aoim_status aoim_train(const aoim_config* config,
                                const aoim_train_options* options,
                                aoim_session_callback on_session, void* user) {
  return guarded([&] {
    require(config != nullptr && options != nullptr, "null argument");
    require(options->algorithm != nullptr, "algorithm is required");
    require(options->output_dir != nullptr, "output_dir is required");
    require(options->sessions >= 1, "sessions must be at least 1");
    require(options->episodes >= 1, "episodes must be at least 1");

    aoim::AgentConfig agent = config->config.agent;
    agent.algorithm = aoim::parse_algorithm(options->algorithm);
    const auto& scenario = config->config.scenario;
    scenario.validate();
    agent.validate();

    namespace fs = std::filesystem;
    const fs::path root(options->output_dir);
    std::error_code ec;
    fs::create_directories(root / "sessions", ec);
    if (!ec) fs::create_directories(root / "checkpoints", ec);
    if (ec) {
      throw aoim::IoError("cannot create output directory '" + root.string() +
                          "': " + ec.message());
    }

    const auto on_done = [&](const aoim::SessionResult& r) {
      const auto stem = std::to_string(r.seed);
      aoim::write_session_csv(r, (root / "sessions" / (stem + ".csv")).string());
      aoim::save_checkpoint(r.final_checkpoint,
                            (root / "checkpoints" / (stem + ".ckpt")).string());
      if (on_session) {
        const auto& rw = r.episode_rewards;
        const double mean =
            std::accumulate(rw.begin(), rw.end(), 0.0) /
            static_cast<double>(rw.size());
        on_session(user, r.seed, static_cast<uint32_t>(rw.size()), rw.front(),
                   rw.back(), mean);
      }
    };
    const auto results = aoim::train_sessions(
        scenario, agent, options->sessions, options->episodes, options->seed,
        options->jobs, on_done);
    if (results.size() >= 2) {
      aoim::write_curves_csv(aoim::aggregate_curves(results),
                             (root / "curves.csv").string());
    }
  });
}

AOIM_API aoim_status aoim_policy_load(const char* path, aoim_policy** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto p = std::make_unique<aoim_policy>();
    p->checkpoint = aoim::load_checkpoint(path);
    p->policy = aoim::make_policy(p->checkpoint);
    *out = p.release();
  });
}

AOIM_API aoim_status aoim_policy_scripted(const char* kind,
                                          uint32_t num_sensors,
                                          double parameter,
                                          aoim_policy** out) {
  return guarded([&] {
    require(kind != nullptr && out != nullptr, "null argument");
    auto p = std::make_unique<aoim_policy>();
    p->checkpoint = aoim::scripted_checkpoint(aoim::parse_policy_kind(kind),
                                              num_sensors, parameter);
    p->policy = aoim::make_policy(p->checkpoint);
    *out = p.release();
  });
}

AOIM_API aoim_status aoim_policy_save(const aoim_policy* policy,
                                      const char* path) {
  return guarded([&] {
    require(policy != nullptr && path != nullptr, "null argument");
    aoim::save_checkpoint(policy->checkpoint, path);
  });
}

AOIM_API size_t aoim_policy_input_size(const aoim_policy* policy) {
  return policy ? policy->policy->input_size() : 0;
}

AOIM_API const char* aoim_policy_kind(const aoim_policy* policy) {
  return policy ? aoim::policy_kind_name(policy->checkpoint.kind).data()
                : nullptr;
}

AOIM_API aoim_status aoim_policy_act(const aoim_policy* policy,
                                     const uint32_t* aoi, size_t len,
                                     uint64_t seed, int* action) {
  return guarded([&] {
    require(policy != nullptr && action != nullptr, "null argument");
    require(len == policy->policy->input_size(),
            "AoI length must equal the policy input size");
    aoim::Rng rng(seed);
    *action = static_cast<int>(aoim::action_index(
        policy->policy->act(to_observation(aoi, len), rng)));
  });
}

AOIM_API void aoim_policy_free(aoim_policy* policy) { delete policy; }

AOIM_API aoim_status aoim_evaluate_tpr(const aoim_policy* policy,
                                       const aoim_config* config,
                                       uint32_t episodes,
                                       const uint32_t* thresholds,
                                       size_t num_thresholds, uint64_t seed,
                                       const char* csv_path) {
  return guarded([&] {
    require(policy != nullptr && config != nullptr && csv_path != nullptr,
            "null argument");
    require(thresholds != nullptr && num_thresholds > 0,
            "at least one threshold is required");
    require(episodes >= 1, "episodes must be at least 1");
    const std::vector<std::uint32_t> th(thresholds,
                                        thresholds + num_thresholds);
    const auto report = aoim::evaluate_tpr(
        *policy->policy, config->config.scenario, episodes, th, seed);
    aoim::write_tpr_csv(report, csv_path);
  });
}

AOIM_API aoim_status aoim_evaluate_reward(const aoim_policy* policy,
                                          const aoim_config* config,
                                          uint32_t episodes, uint64_t seed,
                                          double* mean,
                                          double* ci_half_width) {
  return guarded([&] {
    require(policy != nullptr && config != nullptr && mean != nullptr,
            "null argument");
    require(episodes >= 1, "episodes must be at least 1");
    const auto rewards = aoim::evaluate_reward(
        *policy->policy, config->config.scenario, episodes, seed);
    const double n = static_cast<double>(rewards.size());
    const double m = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double half = 0.0;
    if (rewards.size() >= 2) {
      double sq = 0.0;
      for (double r : rewards) sq += (r - m) * (r - m);
      half = aoim::student_t_quantile(0.975, n - 1.0) *
             std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
    }
    *mean = m;
    if (ci_half_width) *ci_half_width = half;
  });
}

}  // extern "C"
