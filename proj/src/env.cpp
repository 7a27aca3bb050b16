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

#include "aoim/env.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "aoim/error.hpp"

namespace aoim {

namespace {

double generation_probability(const ScenarioConfig& c, Health h) {
  return h == Health::kHealthy ? c.gen_prob_healthy : c.gen_prob_faulty;
}

double delivery_probability(const ScenarioConfig& c, Health h) {
  return h == Health::kHealthy ? c.deliver_prob_healthy
                               : c.deliver_prob_faulty;
}

// Probability that a unit is Faulty next slot when left to its chain.
double faulty_next_probability(const TwoStateChain& chain, Health h) {
  return h == Health::kHealthy ? 1.0 - chain.p00 : chain.p11;
}

std::uint32_t aged(std::uint32_t aoi, std::uint32_t aoi_max) {
  return std::min(aoi_max, aoi + 1);
}

void check_dimensions(const ScenarioConfig& c, const SystemState& state,
                      const Observation& obs) {
  if (state.sensor_health.size() != c.num_sensors) {
    throw UsageError("state has " + std::to_string(state.sensor_health.size()) +
                     " sensors, config expects " +
                     std::to_string(c.num_sensors));
  }
  if (obs.aoi.size() != c.num_sensors) {
    throw UsageError("observation has " + std::to_string(obs.aoi.size()) +
                     " components, config expects " +
                     std::to_string(c.num_sensors));
  }
  for (auto a : obs.aoi) {
    if (a < 1 || a > c.aoi_max) {
      throw UsageError("AoI component " + std::to_string(a) +
                       " outside [1, " + std::to_string(c.aoi_max) + "]");
    }
  }
}

}  // namespace

Action action_from_index(long long index) {
  if (index < 0 || index >= static_cast<long long>(kNumActions)) {
    throw UsageError("invalid action " + std::to_string(index) +
                     " (expected 0, 1 or 2)");
  }
  return static_cast<Action>(index);
}

SystemState SystemState::all_healthy(std::size_t num_sensors) {
  return SystemState{std::vector<Health>(num_sensors, Health::kHealthy),
                     Health::kHealthy};
}

bool SystemState::any_faulty() const {
  return network_health == Health::kFaulty ||
         std::ranges::any_of(sensor_health,
                             [](Health h) { return h == Health::kFaulty; });
}

double Observation::mean() const {
  if (aoi.empty()) return 0.0;
  const double sum = std::accumulate(aoi.begin(), aoi.end(), 0.0);
  return sum / static_cast<double>(aoi.size());
}

double reward_fn(Action action, const Observation& aoi,
                 const ScenarioConfig& config) {
  return 1.0 / (config.weight_cost * config.maintenance_costs[action_index(
                                         action)] +
                config.weight_aoi * aoi.mean());
}

Environment::Environment(ScenarioConfig config) : config_(std::move(config)) {
  config_.validate();
  state_ = SystemState::all_healthy(config_.num_sensors);
  observation_.aoi.assign(config_.num_sensors, 1);
}

std::pair<Observation, SystemState> Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_ = SystemState::all_healthy(config_.num_sensors);
  observation_.aoi.assign(config_.num_sensors, 1);
  slot_ = 0;
  terminal_ = false;
  return {observation_, state_};
}

std::pair<Observation, SystemState> reset(Environment& env,
                                          std::uint64_t seed) {
  return env.reset(seed);
}

void Environment::restore(SystemState state, Observation observation,
                          std::uint32_t slot) {
  check_dimensions(config_, state, observation);
  if (slot >= config_.horizon) {
    throw UsageError("slot " + std::to_string(slot) + " beyond horizon " +
                     std::to_string(config_.horizon));
  }
  state_ = std::move(state);
  observation_ = std::move(observation);
  slot_ = slot;
  terminal_ = false;
}

StepOutcome Environment::step(Action action) {
  if (terminal_) throw UsageError("step called on a terminal episode");
  const std::size_t m = config_.num_sensors;

  StepOutcome out;
  auto& draws = out.draws;
  draws.generated.resize(m);
  draws.delivered.resize(m);
  draws.sensor_next.resize(m);

  for (std::size_t i = 0; i < m; ++i) {
    draws.generated[i] = rng_.bernoulli(
        generation_probability(config_, state_.sensor_health[i]));
  }
  const double p_deliver = delivery_probability(config_, state_.network_health);
  for (std::size_t i = 0; i < m; ++i) {
    draws.delivered[i] = rng_.bernoulli(p_deliver);
  }

  out.next_observation.aoi.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.next_observation.aoi[i] =
        draws.generated[i] && draws.delivered[i]
            ? 1
            : aged(observation_.aoi[i], config_.aoi_max);
  }

  const bool fix_sensors = action == Action::kSensorsMaintenance;
  const bool fix_network = action == Action::kNetworkMaintenance;
  for (std::size_t i = 0; i < m; ++i) {
    const bool faulty = rng_.bernoulli(faulty_next_probability(
        config_.chain_for_sensor(i), state_.sensor_health[i]));
    draws.sensor_next[i] = !fix_sensors && faulty;
  }
  {
    const bool faulty = rng_.bernoulli(
        faulty_next_probability(config_.network_chain, state_.network_health));
    draws.network_next = !fix_network && faulty;
  }

  out.truth_next_state.sensor_health.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.truth_next_state.sensor_health[i] =
        draws.sensor_next[i] ? Health::kFaulty : Health::kHealthy;
  }
  out.truth_next_state.network_health =
      draws.network_next ? Health::kFaulty : Health::kHealthy;

  out.reward = reward_fn(action,
                         config_.reward_uses_pre_transition_aoi
                             ? observation_
                             : out.next_observation,
                         config_);

  ++slot_;
  terminal_ = slot_ >= config_.horizon;
  out.terminal = terminal_;

  state_ = out.truth_next_state;
  observation_ = out.next_observation;
  return out;
}

std::vector<WeightedOutcome> one_step_distribution(
    const ScenarioConfig& config, const SystemState& state,
    const Observation& aoi, Action action) {
  config.validate();
  const std::size_t m = config.num_sensors;
  if (m > kMaxEnumeratedSensors) {
    throw CapabilityError("one_step_distribution enumerates at most " +
                          std::to_string(kMaxEnumeratedSensors) +
                          " sensors, config has " + std::to_string(m));
  }
  check_dimensions(config, state, aoi);

  // Per-sensor probability of a fresh delivery, and of being faulty next.
  const double p_deliver = delivery_probability(config, state.network_health);
  std::vector<double> p_fresh(m);
  std::vector<double> p_faulty(m);
  for (std::size_t i = 0; i < m; ++i) {
    p_fresh[i] =
        generation_probability(config, state.sensor_health[i]) * p_deliver;
    p_faulty[i] =
        action == Action::kSensorsMaintenance
            ? 0.0
            : faulty_next_probability(config.chain_for_sensor(i),
                                      state.sensor_health[i]);
  }
  const double p_net_faulty =
      action == Action::kNetworkMaintenance
          ? 0.0
          : faulty_next_probability(config.network_chain,
                                    state.network_health);

  std::map<std::pair<SystemState, Observation>, double> merged;
  const std::size_t patterns = std::size_t{1} << m;
  for (std::size_t fresh = 0; fresh < patterns; ++fresh) {
    double p_obs = 1.0;
    Observation next_obs;
    next_obs.aoi.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const bool f = (fresh >> i) & 1U;
      p_obs *= f ? p_fresh[i] : 1.0 - p_fresh[i];
      next_obs.aoi[i] = f ? 1 : aged(aoi.aoi[i], config.aoi_max);
    }
    if (p_obs == 0.0) continue;
    for (std::size_t faulty = 0; faulty < patterns; ++faulty) {
      double p_health = p_obs;
      SystemState next_state;
      next_state.sensor_health.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        const bool f = (faulty >> i) & 1U;
        p_health *= f ? p_faulty[i] : 1.0 - p_faulty[i];
        next_state.sensor_health[i] = f ? Health::kFaulty : Health::kHealthy;
      }
      if (p_health == 0.0) continue;
      for (int net = 0; net < 2; ++net) {
        const double p = p_health * (net ? p_net_faulty : 1.0 - p_net_faulty);
        if (p == 0.0) continue;
        next_state.network_health = net ? Health::kFaulty : Health::kHealthy;
        merged[{next_state, next_obs}] += p;
      }
    }
  }

  std::vector<WeightedOutcome> out;
  out.reserve(merged.size());
  for (auto& [key, p] : merged) {
    out.push_back(WeightedOutcome{key.first, key.second, p});
  }
  return out;
}

double stationary_healthy_fraction(const TwoStateChain& chain) {
  const double leave_healthy = 1.0 - chain.p00;
  const double leave_faulty = 1.0 - chain.p11;
  if (leave_healthy + leave_faulty == 0.0) return 1.0;
  return leave_faulty / (leave_healthy + leave_faulty);
}

}  // namespace aoim
