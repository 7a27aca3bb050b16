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

#ifndef AOIM_AGENTS_HPP_
#define AOIM_AGENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aoim/config.hpp"
#include "aoim/env.hpp"
#include "aoim/neural.hpp"
#include "aoim/rng.hpp"

namespace aoim {

struct Transition {
  Observation observation;
  Action action = Action::kNoMaintenance;
  double reward = 0.0;
  Observation next_observation;
  bool terminal = false;
};

// Bounded FIFO experience memory.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Evicts the oldest entry when full.
  void push(Transition transition);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  // i = 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const;

  // `count` distinct positions drawn uniformly (Floyd's algorithm).
  // Throws UsageError when count > size().
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;
  std::vector<Transition> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  std::vector<Transition> items_;
};

// Linear decay from `start` to `end` over `decay_steps`, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  std::uint64_t decay_steps = 400000;

  double at(std::uint64_t step) const;
};

// Network input for an AoI vector; see ObservationTransform.
std::vector<double> encode_observation(const Observation& obs,
                                       std::uint32_t aoi_max,
                                       ObservationTransform transform);

// Argmax with ties broken uniformly at random. Consumes randomness only when
// there is a tie.
Action greedy_action(std::span<const double> values, Rng& rng);

// With probability epsilon a uniform action, otherwise greedy on `q`.
Action epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng);

// With probability epsilon No-maintenance, otherwise epsilon_greedy with the
// same epsilon.
Action biased_epsilon_greedy(std::span<const double> q, double epsilon,
                             Rng& rng);

// Online/target Q-networks (input M, hidden ReLU layer, 3 outputs), replay
// memory and the exploration schedule.
class DqnAgent {
 public:
  DqnAgent(std::size_t num_sensors, std::uint32_t aoi_max, AgentConfig config,
           Rng& init_rng);

  bool biased() const { return config_.algorithm == Algorithm::kBiasedDqn; }

  std::vector<double> q_values(const Observation& obs) const;
  std::vector<double> target_q_values(const Observation& obs) const;

  Action act_epsilon_greedy(const Observation& obs, std::uint64_t step,
                            Rng& rng) const;
  // Throws UsageError unless the agent was configured as m-beg-dqn.
  Action act_biased(const Observation& obs, std::uint64_t step,
                    Rng& rng) const;
  // Exploration policy of this agent's algorithm at its current step.
  Action act(const Observation& obs, Rng& rng) const;
  Action act_greedy(const Observation& obs, Rng& rng) const;

  // Y_i = r_i for terminal transitions, else r_i + discount * max Q_target.
  std::vector<double> dqn_targets(std::span<const Transition> batch) const;

  // One optimizer step on the mean squared TD error with frozen targets.
  // Returns the loss before the step. Throws UsageError on an empty batch.
  double dqn_learn(std::span<const Transition> batch);

  // Samples a batch from the buffer and learns; nullopt (no-op) while the
  // buffer holds fewer than batch_size transitions.
  std::optional<double> learn_from_buffer(Rng& rng);

  void sync_target();

  // Per-slot bookkeeping: store, learn, advance the step counter and sync
  // the target every sync_period steps. Returns the loss if learning ran.
  std::optional<double> observe(Transition transition, Rng& rng);

  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }
  double epsilon() const { return schedule_.at(steps_); }

  const AgentConfig& config() const { return config_; }
  std::uint32_t aoi_max() const { return aoi_max_; }
  const EpsilonSchedule& schedule() const { return schedule_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& buffer() { return buffer_; }
  const DenseNet& online_net() const { return online_; }
  DenseNet& online_net() { return online_; }
  const DenseNet& target_net() const { return target_; }

 private:
  std::vector<double> encode(const Observation& obs) const;

  AgentConfig config_;
  std::uint32_t aoi_max_;
  DenseNet online_;
  DenseNet target_;
  Optimizer optimizer_;
  ReplayBuffer buffer_;
  EpsilonSchedule schedule_;
  std::uint64_t steps_ = 0;
};

// Shared trunk (M -> 32 -> 128, ReLU) feeding an actor head (128 -> 3
// logits) and a critic head (128 -> 32 ReLU -> 1, tanh or identity).
class ActorCriticNet {
 public:
  struct Output {
    std::vector<double> logits;
    std::vector<double> probabilities;
    double value = 0.0;  // critic output in return_scale units
  };

  struct Gradients {
    std::vector<double> trunk;
    std::vector<double> actor;
    std::vector<double> critic;
  };

  ActorCriticNet(std::size_t num_inputs, bool critic_tanh);
  ActorCriticNet(DenseNet trunk, DenseNet actor, DenseNet critic);

  void initialize(Rng& rng);

  Output forward(std::span<const double> input) const;

  // Backpropagates dL/dlogits and dL/dvalue through both heads and the
  // shared trunk, adding into `grads`.
  void accumulate_gradient(std::span<const double> input,
                           std::span<const double> dlogits, double dvalue,
                           Gradients& grads) const;

  Gradients zero_gradients() const;

  std::size_t parameter_count() const;
  // Concatenation trunk | actor | critic.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);
  std::vector<double> flatten(const Gradients& grads) const;

  std::size_t input_size() const { return trunk_.input_size(); }
  const DenseNet& trunk() const { return trunk_; }
  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  DenseNet& trunk() { return trunk_; }
  DenseNet& actor() { return actor_; }
  DenseNet& critic() { return critic_; }

 private:
  DenseNet trunk_;
  DenseNet actor_;
  DenseNet critic_;
};

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
// -sum p ln p, with 0 ln 0 = 0.
double entropy(std::span<const double> probabilities);

// R_k = r_k + discount * R_{k+1}, seeded with `bootstrap`; index 0 is the
// trajectory head.
std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double discount, double bootstrap);

struct RolloutStep {
  Observation observation;
  Action action = Action::kNoMaintenance;
  double reward = 0.0;
};

struct Rollout {
  std::vector<RolloutStep> steps;
  // 0 when the episode terminated, else critic value of the last
  // observation times return_scale.
  double bootstrap = 0.0;
  bool terminated = false;
};

struct A2cLosses {
  double actor = 0.0;
  double critic = 0.0;
};

class A2cAgent {
 public:
  A2cAgent(std::size_t num_sensors, std::uint32_t aoi_max, AgentConfig config,
           Rng& init_rng);

  std::vector<double> policy(const Observation& obs) const;
  // Critic estimate in reward units (network output times return_scale).
  double value(const Observation& obs) const;

  Action sample_action(const Observation& obs, Rng& rng) const;
  Action act_greedy(const Observation& obs, Rng& rng) const;

  // Acts from env's current observation until rollout_length steps have
  // been taken or the episode ends. env must not be terminal. `on_step`
  // sees every environment outcome.
  Rollout a2c_rollout(
      Environment& env, Rng& rng,
      const std::function<void(const StepOutcome&)>& on_step = {}) const;

  // One synchronous update of trunk, actor and critic from a rollout.
  A2cLosses a2c_update(const Rollout& rollout);

  double return_scale() const { return return_scale_; }
  const AgentConfig& config() const { return config_; }
  std::uint32_t aoi_max() const { return aoi_max_; }
  const ActorCriticNet& net() const { return net_; }
  ActorCriticNet& net() { return net_; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }

 private:
  std::vector<double> encode(const Observation& obs) const;

  AgentConfig config_;
  std::uint32_t aoi_max_;
  double return_scale_;
  ActorCriticNet net_;
  Optimizer trunk_optimizer_;
  Optimizer actor_optimizer_;
  Optimizer critic_optimizer_;
  std::uint64_t steps_ = 0;
};

}  // namespace aoim

#endif  // AOIM_AGENTS_HPP_
