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

// Slotted simulator of M sensors reporting through a shared network. Each
// unit is a two-state Markov chain; the monitor only sees per-sensor Age of
// Information. Within a slot the order is fixed:
//
//   1. generation draws W_g (per sensor) and delivery draws W_n (per sensor)
//   2. AoI: 1 if generated and delivered, else min(aoi_max, aoi + 1)
//   3. health draws W_h (sensors, then network); maintenance forces Healthy
//   4. reward from the action and the end-of-slot AoI vector
//   5. terminal once the slot counter reaches the horizon
//
// One uniform variate is consumed per draw, always in the order
// W_g[0..M), W_n[0..M), W_h[0..M), W_h[network], even when maintenance makes
// the outcome certain, so equal seeds give equal trajectories.

#ifndef AOIM_ENV_HPP_
#define AOIM_ENV_HPP_

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "aoim/config.hpp"
#include "aoim/rng.hpp"

namespace aoim {

enum class Health : std::uint8_t { kHealthy = 0, kFaulty = 1 };

enum class Action : std::uint8_t {
  kNoMaintenance = 0,
  kNetworkMaintenance = 1,
  kSensorsMaintenance = 2,
};

inline constexpr std::size_t kNumActions = 3;

inline constexpr std::size_t action_index(Action a) {
  return static_cast<std::size_t>(a);
}

// Throws UsageError outside {0, 1, 2}.
Action action_from_index(long long index);

// Hidden ground truth.
struct SystemState {
  std::vector<Health> sensor_health;
  Health network_health = Health::kHealthy;

  static SystemState all_healthy(std::size_t num_sensors);

  bool any_faulty() const;

  auto operator<=>(const SystemState&) const = default;
};

// Per-sensor AoI, the agent's entire input.
struct Observation {
  std::vector<std::uint32_t> aoi;

  double mean() const;

  auto operator<=>(const Observation&) const = default;
};

// Realized binaries of one slot.
struct StepDraws {
  std::vector<std::uint8_t> generated;    // W_g
  std::vector<std::uint8_t> delivered;    // W_n
  std::vector<std::uint8_t> sensor_next;  // W_h per sensor (1 = faulty)
  std::uint8_t network_next = 0;          // W_h network (1 = faulty)
};

struct StepOutcome {
  double reward = 0.0;
  Observation next_observation;
  bool terminal = false;
  SystemState truth_next_state;  // instrumentation only
  StepDraws draws;
};

// 1 / (weight_cost * cost[action] + weight_aoi * mean(aoi)).
double reward_fn(Action action, const Observation& aoi,
                 const ScenarioConfig& config);

class Environment {
 public:
  // Throws ConfigError when the configuration is invalid.
  explicit Environment(ScenarioConfig config);

  // All units Healthy, every AoI 1, slot 0, RNG reseeded.
  std::pair<Observation, SystemState> reset(std::uint64_t seed);

  // Throws UsageError after the terminal slot.
  StepOutcome step(Action action);

  // Overwrites the current state, observation and slot (oracle tests and
  // instrumentation). Throws UsageError on dimension or range mismatch.
  void restore(SystemState state, Observation observation,
               std::uint32_t slot = 0);
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  const ScenarioConfig& config() const { return config_; }
  const SystemState& state() const { return state_; }
  const Observation& observation() const { return observation_; }
  std::uint32_t slot() const { return slot_; }
  bool terminal() const { return terminal_; }

 private:
  ScenarioConfig config_;
  SystemState state_;
  Observation observation_;
  std::uint32_t slot_ = 0;
  bool terminal_ = false;
  Rng rng_;
};

// Free-function form of reset.
std::pair<Observation, SystemState> reset(Environment& env,
                                          std::uint64_t seed);

struct WeightedOutcome {
  SystemState state;
  Observation observation;
  double probability = 0.0;
};

inline constexpr std::size_t kMaxEnumeratedSensors = 6;

// Exact distribution of (next state, next AoI) after one slot, outcomes
// sorted and merged. Throws CapabilityError when num_sensors exceeds
// kMaxEnumeratedSensors.
std::vector<WeightedOutcome> one_step_distribution(
    const ScenarioConfig& config, const SystemState& state,
    const Observation& aoi, Action action);

// Stationary Healthy probability of a two-state chain,
// (1 - p11) / ((1 - p00) + (1 - p11)). Absorbing chains return the limit
// from a Healthy start.
double stationary_healthy_fraction(const TwoStateChain& chain);

}  // namespace aoim

#endif  // AOIM_ENV_HPP_
