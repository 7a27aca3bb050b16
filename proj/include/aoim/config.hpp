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

#ifndef AOIM_CONFIG_HPP_
#define AOIM_CONFIG_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aoim {

// Two-state (Healthy/Faulty) time-homogeneous chain. The off-diagonal
// entries are implied: Pr{H->F} = 1 - p00, Pr{F->H} = 1 - p11.
struct TwoStateChain {
  double p00 = 1.0;  // stay healthy
  double p11 = 1.0;  // stay faulty

  bool operator==(const TwoStateChain&) const = default;
};

// All stochastic parameters of the monitored system.
struct ScenarioConfig {
  std::size_t num_sensors = 4;
  TwoStateChain sensor_chain{0.999, 1.0};
  TwoStateChain network_chain{0.999, 1.0};
  // Optional per-sensor chains; sensors without an entry use sensor_chain.
  std::map<std::size_t, TwoStateChain> sensor_chain_overrides;
  double gen_prob_healthy = 1.0;
  double gen_prob_faulty = 0.0;
  double deliver_prob_healthy = 0.99;
  double deliver_prob_faulty = 0.0;
  // Indexed by action: none, network, sensors. maintenance_costs[0] == 0.
  std::array<double, 3> maintenance_costs{0.0, 100.0, 100.0};
  double weight_cost = 1.0;
  double weight_aoi = 1.0;
  std::uint32_t horizon = 5000;
  std::uint32_t aoi_max = 5000;
  // Literal reading of the reward: average AoI at the start of the slot
  // instead of the end-of-slot vector.
  bool reward_uses_pre_transition_aoi = false;

  const TwoStateChain& chain_for_sensor(std::size_t sensor) const;

  // Throws ConfigError naming the first violated field.
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

enum class Algorithm : std::uint8_t {
  kDqn = 0,        // m-dqn
  kBiasedDqn = 1,  // m-beg-dqn
  kA2c = 2,        // m-a2c
};

std::string_view algorithm_name(Algorithm algo);
// Throws UsageError for unknown names.
Algorithm parse_algorithm(std::string_view name);

enum class OptimizerKind : std::uint8_t { kSgd = 0, kAdam = 1 };

// How AoI vectors are mapped to network inputs.
//   linear: aoi / aoi_max
//   log:    log(aoi) / log(aoi_max)   (0 when aoi_max == 1)
enum class ObservationTransform : std::uint8_t { kLinear = 0, kLog = 1 };

struct AgentConfig {
  Algorithm algorithm = Algorithm::kBiasedDqn;
  double discount = 0.999;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  ObservationTransform observation_transform = ObservationTransform::kLog;

  // DQN
  std::size_t hidden_units = 128;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 500000;
  std::uint64_t sync_period = 20000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  std::uint64_t epsilon_decay_steps = 400000;

  // A2C
  std::size_t rollout_length = 32;
  double return_scale = 0.0;  // 0 selects 1 / (1 - discount)
  double entropy_coeff = 0.01;
  bool critic_tanh = true;

  double effective_return_scale() const;

  void validate() const;

  bool operator==(const AgentConfig&) const = default;
};

// Flat `key = value` text with `#` comments.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& values);

KeyValues to_key_values(const ScenarioConfig& config);
KeyValues to_key_values(const AgentConfig& config);

// Scenario and agent settings share one file. Keys missing from `values`
// keep the defaults in `base`. Unknown keys are rejected.
struct RunConfig {
  ScenarioConfig scenario;
  AgentConfig agent;

  bool operator==(const RunConfig&) const = default;
};

RunConfig run_config_from_key_values(const KeyValues& values,
                                     const RunConfig& base = {});
KeyValues to_key_values(const RunConfig& config);

// Applies a single `key = value` assignment, validating the value.
void set_config_value(RunConfig& config, std::string_view key,
                      std::string_view value);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

// Named scenario presets: permanent_faults, intermittent_network,
// intermittent_sensors, intermittent_all.
const std::vector<std::string>& preset_names();
// Throws ConfigError for unknown names.
RunConfig preset(std::string_view name);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace aoim

#endif  // AOIM_CONFIG_HPP_
