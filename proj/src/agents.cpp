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

#include "aoim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aoim/error.hpp"

namespace aoim {

namespace {

constexpr std::size_t kTrunkHidden1 = 32;
constexpr std::size_t kTrunkHidden2 = 128;
constexpr std::size_t kCriticHidden = 32;
constexpr double kProbabilityFloor = 1e-8;

}  // namespace

// ---------------------------------------------------------------- replay

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition transition) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(transition));
    return;
  }
  items_[head_] = std::move(transition);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw UsageError("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count,
                                                      Rng& rng) const {
  const std::size_t n = items_.size();
  if (count > n) {
    throw UsageError("cannot sample " + std::to_string(count) +
                     " transitions from a buffer of " + std::to_string(n));
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::ranges::find(chosen, t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  return chosen;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count,
                                             Rng& rng) const {
  std::vector<Transition> batch;
  batch.reserve(count);
  for (auto i : sample_indices(count, rng)) batch.push_back(at(i));
  return batch;
}

// ------------------------------------------------------------ exploration

double EpsilonSchedule::at(std::uint64_t step) const {
  const double frac =
      static_cast<double>(std::min(step, decay_steps)) /
      static_cast<double>(decay_steps);
  return start - (start - end) * frac;
}

std::vector<double> encode_observation(const Observation& obs,
                                       std::uint32_t aoi_max,
                                       ObservationTransform transform) {
  std::vector<double> x(obs.aoi.size());
  const double cap = static_cast<double>(aoi_max);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::min(static_cast<double>(obs.aoi[i]), cap);
    if (transform == ObservationTransform::kLinear) {
      x[i] = a / cap;
    } else {
      x[i] = aoi_max > 1 ? std::log(a) / std::log(cap) : 0.0;
    }
  }
  return x;
}

Action greedy_action(std::span<const double> values, Rng& rng) {
  const double best = *std::ranges::max_element(values);
  std::size_t ties = 0;
  for (double v : values) ties += v == best;
  if (ties == 1) {
    return static_cast<Action>(std::ranges::max_element(values) -
                               values.begin());
  }
  std::size_t pick = rng.index(ties);
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (values[a] == best && pick-- == 0) return static_cast<Action>(a);
  }
  return Action::kNoMaintenance;
}

Action epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon) {
    return static_cast<Action>(rng.index(kNumActions));
  }
  return greedy_action(q, rng);
}

Action biased_epsilon_greedy(std::span<const double> q, double epsilon,
                             Rng& rng) {
  if (rng.uniform() < epsilon) return Action::kNoMaintenance;
  return epsilon_greedy(q, epsilon, rng);
}

// -------------------------------------------------------------------- DQN

DqnAgent::DqnAgent(std::size_t num_sensors, std::uint32_t aoi_max,
                   AgentConfig config, Rng& init_rng)
    : config_(std::move(config)),
      aoi_max_(aoi_max),
      online_(DenseNet::create({num_sensors, config_.hidden_units, kNumActions},
                               {Activation::kReLU, Activation::kIdentity},
                               init_rng)),
      target_(online_),
      optimizer_(OptimizerOptions::from(config_), online_.parameter_count()),
      buffer_(config_.buffer_capacity),
      schedule_{config_.epsilon_start, config_.epsilon_end,
                config_.epsilon_decay_steps} {
  config_.validate();
  if (config_.algorithm == Algorithm::kA2c) {
    throw UsageError("DqnAgent needs algorithm m-dqn or m-beg-dqn");
  }
}

std::vector<double> DqnAgent::encode(const Observation& obs) const {
  return encode_observation(obs, aoi_max_, config_.observation_transform);
}

std::vector<double> DqnAgent::q_values(const Observation& obs) const {
  return online_.forward(encode(obs));
}

std::vector<double> DqnAgent::target_q_values(const Observation& obs) const {
  return target_.forward(encode(obs));
}

Action DqnAgent::act_epsilon_greedy(const Observation& obs, std::uint64_t step,
                                    Rng& rng) const {
  return epsilon_greedy(q_values(obs), schedule_.at(step), rng);
}

Action DqnAgent::act_biased(const Observation& obs, std::uint64_t step,
                            Rng& rng) const {
  if (!biased()) {
    throw UsageError("biased exploration requires algorithm m-beg-dqn");
  }
  return biased_epsilon_greedy(q_values(obs), schedule_.at(step), rng);
}

Action DqnAgent::act(const Observation& obs, Rng& rng) const {
  return biased() ? act_biased(obs, steps_, rng)
                  : act_epsilon_greedy(obs, steps_, rng);
}

Action DqnAgent::act_greedy(const Observation& obs, Rng& rng) const {
  return greedy_action(q_values(obs), rng);
}

std::vector<double> DqnAgent::dqn_targets(
    std::span<const Transition> batch) const {
  if (batch.empty()) throw UsageError("dqn_targets: empty batch");
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    y[i] = t.reward;
    if (!t.terminal) {
      const auto q = target_q_values(t.next_observation);
      y[i] += config_.discount * *std::ranges::max_element(q);
    }
  }
  return y;
}

double DqnAgent::dqn_learn(std::span<const Transition> batch) {
  const auto targets = dqn_targets(batch);
  std::vector<double> grad(online_.parameter_count(), 0.0);
  std::vector<double> upstream(kNumActions);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = encode(batch[i].observation);
    const auto q = online_.forward(x);
    const std::size_t a = action_index(batch[i].action);
    const double err = q[a] - targets[i];
    loss += err * err * inv_n;
    std::ranges::fill(upstream, 0.0);
    upstream[a] = 2.0 * err * inv_n;
    online_.accumulate_gradient(x, upstream, grad);
  }
  optimizer_.step(online_.parameters(), grad);
  return loss;
}

std::optional<double> DqnAgent::learn_from_buffer(Rng& rng) {
  if (buffer_.size() < config_.batch_size) return std::nullopt;
  const auto batch = buffer_.sample(config_.batch_size, rng);
  return dqn_learn(batch);
}

void DqnAgent::sync_target() {
  std::ranges::copy(online_.parameters(), target_.parameters().begin());
}

std::optional<double> DqnAgent::observe(Transition transition, Rng& rng) {
  buffer_.push(std::move(transition));
  const auto loss = learn_from_buffer(rng);
  ++steps_;
  if (steps_ % config_.sync_period == 0) sync_target();
  return loss;
}

// ----------------------------------------------------------- actor-critic

std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::ranges::max_element(logits);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double discount, double bootstrap) {
  std::vector<double> out(rewards.size());
  double r = bootstrap;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    r = rewards[k] + discount * r;
    out[k] = r;
  }
  return out;
}

ActorCriticNet::ActorCriticNet(std::size_t num_inputs, bool critic_tanh)
    : trunk_({num_inputs, kTrunkHidden1, kTrunkHidden2},
             {Activation::kReLU, Activation::kReLU}),
      actor_({kTrunkHidden2, kNumActions}, {Activation::kIdentity}),
      critic_({kTrunkHidden2, kCriticHidden, 1},
              {Activation::kReLU,
               critic_tanh ? Activation::kTanh : Activation::kIdentity}) {}

ActorCriticNet::ActorCriticNet(DenseNet trunk, DenseNet actor, DenseNet critic)
    : trunk_(std::move(trunk)),
      actor_(std::move(actor)),
      critic_(std::move(critic)) {
  if (actor_.input_size() != trunk_.output_size() ||
      critic_.input_size() != trunk_.output_size()) {
    throw UsageError("actor-critic heads do not match the trunk output");
  }
  if (actor_.output_size() != kNumActions || critic_.output_size() != 1) {
    throw UsageError("actor head needs 3 outputs and critic head 1");
  }
}

void ActorCriticNet::initialize(Rng& rng) {
  trunk_.initialize(rng);
  actor_.initialize(rng);
  critic_.initialize(rng);
}

ActorCriticNet::Output ActorCriticNet::forward(
    std::span<const double> input) const {
  const auto features = trunk_.forward(input);
  Output out;
  out.logits = actor_.forward(features);
  out.probabilities = softmax(out.logits);
  out.value = critic_.forward(features)[0];
  return out;
}

ActorCriticNet::Gradients ActorCriticNet::zero_gradients() const {
  return Gradients{std::vector<double>(trunk_.parameter_count(), 0.0),
                   std::vector<double>(actor_.parameter_count(), 0.0),
                   std::vector<double>(critic_.parameter_count(), 0.0)};
}

void ActorCriticNet::accumulate_gradient(std::span<const double> input,
                                         std::span<const double> dlogits,
                                         double dvalue,
                                         Gradients& grads) const {
  const auto features = trunk_.forward(input);
  auto dfeatures = actor_.accumulate_gradient(features, dlogits, grads.actor);
  const double dv[1] = {dvalue};
  const auto from_critic =
      critic_.accumulate_gradient(features, dv, grads.critic);
  for (std::size_t k = 0; k < dfeatures.size(); ++k) {
    dfeatures[k] += from_critic[k];
  }
  trunk_.accumulate_gradient(input, dfeatures, grads.trunk);
}

std::size_t ActorCriticNet::parameter_count() const {
  return trunk_.parameter_count() + actor_.parameter_count() +
         critic_.parameter_count();
}

std::vector<double> ActorCriticNet::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), trunk_.parameters().begin(), trunk_.parameters().end());
  out.insert(out.end(), actor_.parameters().begin(), actor_.parameters().end());
  out.insert(out.end(), critic_.parameters().begin(),
             critic_.parameters().end());
  return out;
}

void ActorCriticNet::set_flat_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw UsageError("actor-critic parameter vector has the wrong length");
  }
  auto rest = params;
  for (DenseNet* net : {&trunk_, &actor_, &critic_}) {
    const auto n = net->parameter_count();
    std::ranges::copy(rest.first(n), net->parameters().begin());
    rest = rest.subspan(n);
  }
}

std::vector<double> ActorCriticNet::flatten(const Gradients& grads) const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), grads.trunk.begin(), grads.trunk.end());
  out.insert(out.end(), grads.actor.begin(), grads.actor.end());
  out.insert(out.end(), grads.critic.begin(), grads.critic.end());
  return out;
}

A2cAgent::A2cAgent(std::size_t num_sensors, std::uint32_t aoi_max,
                   AgentConfig config, Rng& init_rng)
    : config_(std::move(config)),
      aoi_max_(aoi_max),
      return_scale_(config_.effective_return_scale()),
      net_(num_sensors, config_.critic_tanh),
      trunk_optimizer_(OptimizerOptions::from(config_),
                       net_.trunk().parameter_count()),
      actor_optimizer_(OptimizerOptions::from(config_),
                       net_.actor().parameter_count()),
      critic_optimizer_(OptimizerOptions::from(config_),
                        net_.critic().parameter_count()) {
  config_.validate();
  net_.initialize(init_rng);
}

std::vector<double> A2cAgent::encode(const Observation& obs) const {
  return encode_observation(obs, aoi_max_, config_.observation_transform);
}

std::vector<double> A2cAgent::policy(const Observation& obs) const {
  return net_.forward(encode(obs)).probabilities;
}

double A2cAgent::value(const Observation& obs) const {
  return net_.forward(encode(obs)).value * return_scale_;
}

Action A2cAgent::sample_action(const Observation& obs, Rng& rng) const {
  const auto p = policy(obs);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t a = 0; a + 1 < p.size(); ++a) {
    cumulative += p[a];
    if (u < cumulative) return static_cast<Action>(a);
  }
  return static_cast<Action>(p.size() - 1);
}

Action A2cAgent::act_greedy(const Observation& obs, Rng& rng) const {
  return greedy_action(policy(obs), rng);
}

Rollout A2cAgent::a2c_rollout(
    Environment& env, Rng& rng,
    const std::function<void(const StepOutcome&)>& on_step) const {
  if (env.terminal()) throw UsageError("a2c_rollout on a terminal episode");
  Rollout rollout;
  rollout.steps.reserve(config_.rollout_length);
  Observation obs = env.observation();
  while (rollout.steps.size() < config_.rollout_length) {
    const Action a = sample_action(obs, rng);
    auto outcome = env.step(a);
    if (on_step) on_step(outcome);
    rollout.steps.push_back(RolloutStep{std::move(obs), a, outcome.reward});
    obs = std::move(outcome.next_observation);
    if (outcome.terminal) {
      rollout.terminated = true;
      break;
    }
  }
  rollout.bootstrap = rollout.terminated ? 0.0 : value(obs);
  return rollout;
}

A2cLosses A2cAgent::a2c_update(const Rollout& rollout) {
  if (rollout.steps.empty()) throw UsageError("a2c_update: empty rollout");
  // Returns are handled in units of return_scale so critic targets stay
  // inside the tanh range.
  const double gamma = config_.discount;
  const double beta = config_.entropy_coeff;
  auto grads = net_.zero_gradients();
  A2cLosses losses;
  double ret = rollout.bootstrap / return_scale_;
  std::vector<double> dlogits(kNumActions);
  for (std::size_t k = rollout.steps.size(); k-- > 0;) {
    const auto& step = rollout.steps[k];
    ret = step.reward / return_scale_ + gamma * ret;
    const auto x = encode(step.observation);
    const auto out = net_.forward(x);
    const double advantage = ret - out.value;
    const std::size_t a = action_index(step.action);
    const double p_a = std::max(out.probabilities[a], kProbabilityFloor);
    const double h = entropy(out.probabilities);
    losses.actor -= advantage * std::log(p_a) + beta * h;
    losses.critic += advantage * advantage;
    // d/dz of -(A ln p_a + beta H), with dH/dz_j = -p_j (ln p_j + H).
    for (std::size_t j = 0; j < kNumActions; ++j) {
      const double p = out.probabilities[j];
      const double dlogp = (j == a ? 1.0 : 0.0) - p;
      const double log_p = std::log(std::max(p, kProbabilityFloor));
      const double dh = -p * (log_p + h);
      dlogits[j] = -advantage * dlogp - beta * dh;
    }
    net_.accumulate_gradient(x, dlogits, -2.0 * advantage, grads);
  }
  // All three steps succeed or none is applied.
  const ActorCriticNet net_before = net_;
  const Optimizer trunk_before = trunk_optimizer_;
  const Optimizer actor_before = actor_optimizer_;
  const Optimizer critic_before = critic_optimizer_;
  try {
    trunk_optimizer_.step(net_.trunk().parameters(), grads.trunk);
    actor_optimizer_.step(net_.actor().parameters(), grads.actor);
    critic_optimizer_.step(net_.critic().parameters(), grads.critic);
  } catch (const NumericalError&) {
    net_ = net_before;
    trunk_optimizer_ = trunk_before;
    actor_optimizer_ = actor_before;
    critic_optimizer_ = critic_before;
    throw;
  }
  steps_ += rollout.steps.size();
  return losses;
}

}  // namespace aoim
