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

#include "aoim/policy.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "aoim/error.hpp"

namespace aoim {

namespace {

constexpr char kAgentMagic[8] = {'A', 'O', 'I', 'M', 'A', 'G', 'T', '1'};

std::size_t expected_net_count(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kDqn:
    case PolicyKind::kBiasedDqn:
      return 1;
    case PolicyKind::kA2c:
      return 3;
    default:
      return 0;
  }
}

}  // namespace

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kDqn:
      return "m-dqn";
    case PolicyKind::kBiasedDqn:
      return "m-beg-dqn";
    case PolicyKind::kA2c:
      return "m-a2c";
    case PolicyKind::kNever:
      return "never";
    case PolicyKind::kThreshold:
      return "threshold";
    case PolicyKind::kRandom:
      return "random";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::kDqn, PolicyKind::kBiasedDqn, PolicyKind::kA2c,
                 PolicyKind::kNever, PolicyKind::kThreshold,
                 PolicyKind::kRandom}) {
    if (policy_kind_name(k) == name) return k;
  }
  throw UsageError("unknown policy kind '" + std::string(name) + "'");
}

AgentCheckpoint checkpoint_of(const DqnAgent& agent) {
  AgentCheckpoint c;
  c.kind = agent.biased() ? PolicyKind::kBiasedDqn : PolicyKind::kDqn;
  c.num_sensors = static_cast<std::uint32_t>(agent.online_net().input_size());
  c.aoi_max = agent.aoi_max();
  c.transform = agent.config().observation_transform;
  c.step_count = agent.steps();
  c.epsilon = agent.epsilon();
  c.nets.push_back(agent.online_net());
  return c;
}

AgentCheckpoint checkpoint_of(const A2cAgent& agent) {
  AgentCheckpoint c;
  c.kind = PolicyKind::kA2c;
  c.num_sensors = static_cast<std::uint32_t>(agent.net().input_size());
  c.aoi_max = agent.aoi_max();
  c.transform = agent.config().observation_transform;
  c.step_count = agent.steps();
  c.parameter = agent.return_scale();
  c.nets = {agent.net().trunk(), agent.net().actor(), agent.net().critic()};
  return c;
}

AgentCheckpoint scripted_checkpoint(PolicyKind kind, std::uint32_t num_sensors,
                                    double parameter) {
  if (expected_net_count(kind) != 0) {
    throw UsageError("scripted checkpoints are never/threshold/random only");
  }
  if (num_sensors == 0) throw UsageError("num_sensors must be positive");
  if (kind == PolicyKind::kThreshold && !(parameter >= 1.0)) {
    throw UsageError("threshold rule needs an AoI limit of at least 1");
  }
  AgentCheckpoint c;
  c.kind = kind;
  c.num_sensors = num_sensors;
  c.parameter = parameter;
  return c;
}

void write_checkpoint(std::ostream& out, const AgentCheckpoint& c) {
  out.write(kAgentMagic, sizeof(kAgentMagic));
  wire::put_u8(out, static_cast<std::uint8_t>(c.kind));
  wire::put_u32(out, c.num_sensors);
  wire::put_u32(out, c.aoi_max);
  wire::put_u8(out, static_cast<std::uint8_t>(c.transform));
  wire::put_u64(out, c.step_count);
  wire::put_f64(out, c.epsilon);
  wire::put_f64(out, c.parameter);
  wire::put_u32(out, static_cast<std::uint32_t>(c.nets.size()));
  for (const auto& net : c.nets) write_net(out, net);
  if (!out) throw IoError("failed writing agent checkpoint");
}

AgentCheckpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kAgentMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kAgentMagic, sizeof(magic)) != 0) {
    throw IoError("not an agent checkpoint (bad magic)");
  }
  AgentCheckpoint c;
  const auto kind = wire::get_u8(in);
  if (kind > static_cast<std::uint8_t>(PolicyKind::kRandom)) {
    throw IoError("agent checkpoint: unknown kind " + std::to_string(kind));
  }
  c.kind = static_cast<PolicyKind>(kind);
  c.num_sensors = wire::get_u32(in);
  c.aoi_max = wire::get_u32(in);
  const auto transform = wire::get_u8(in);
  if (transform > 1) throw IoError("agent checkpoint: unknown transform");
  c.transform = static_cast<ObservationTransform>(transform);
  c.step_count = wire::get_u64(in);
  c.epsilon = wire::get_f64(in);
  c.parameter = wire::get_f64(in);
  const auto count = wire::get_u32(in);
  if (count != expected_net_count(c.kind)) {
    throw IoError("agent checkpoint: expected " +
                  std::to_string(expected_net_count(c.kind)) +
                  " networks for kind " +
                  std::string(policy_kind_name(c.kind)) + ", found " +
                  std::to_string(count));
  }
  for (std::uint32_t i = 0; i < count; ++i) c.nets.push_back(read_net(in));
  if (c.num_sensors == 0 || c.aoi_max == 0) {
    throw IoError("agent checkpoint: zero sensors or aoi_max");
  }
  if (!c.nets.empty() && c.nets.front().input_size() != c.num_sensors) {
    throw IoError("agent checkpoint: network input size disagrees with "
                  "num_sensors");
  }
  return c;
}

void save_checkpoint(const AgentCheckpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ckpt);
}

AgentCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

GreedyQPolicy::GreedyQPolicy(DenseNet net, std::uint32_t aoi_max,
                             ObservationTransform transform)
    : net_(std::move(net)), aoi_max_(aoi_max), transform_(transform) {
  if (net_.output_size() != kNumActions) {
    throw UsageError("Q-network must have 3 outputs");
  }
}

Action GreedyQPolicy::act(const Observation& obs, Rng& rng) const {
  return greedy_action(
      net_.forward(encode_observation(obs, aoi_max_, transform_)), rng);
}

GreedyActorPolicy::GreedyActorPolicy(ActorCriticNet net, std::uint32_t aoi_max,
                                     ObservationTransform transform)
    : net_(std::move(net)), aoi_max_(aoi_max), transform_(transform) {}

Action GreedyActorPolicy::act(const Observation& obs, Rng& rng) const {
  return greedy_action(
      net_.forward(encode_observation(obs, aoi_max_, transform_))
          .probabilities,
      rng);
}

Action UniformRandomPolicy::act(const Observation&, Rng& rng) const {
  return static_cast<Action>(rng.index(kNumActions));
}

Action ThresholdPolicy::act(const Observation& obs, Rng&) const {
  std::size_t stale = 0;
  for (auto a : obs.aoi) stale += a > limit_;
  if (stale == 0) return Action::kNoMaintenance;
  if (stale < obs.aoi.size()) return Action::kSensorsMaintenance;
  if (obs.aoi.size() == 1) {
    return (obs.aoi[0] - limit_) % 2 == 1 ? Action::kNetworkMaintenance
                                          : Action::kSensorsMaintenance;
  }
  return Action::kNetworkMaintenance;
}

std::unique_ptr<Policy> make_policy(const AgentCheckpoint& c) {
  switch (c.kind) {
    case PolicyKind::kDqn:
    case PolicyKind::kBiasedDqn:
      return std::make_unique<GreedyQPolicy>(c.nets.at(0), c.aoi_max,
                                             c.transform);
    case PolicyKind::kA2c:
      return std::make_unique<GreedyActorPolicy>(
          ActorCriticNet(c.nets.at(0), c.nets.at(1), c.nets.at(2)), c.aoi_max,
          c.transform);
    case PolicyKind::kNever:
      return std::make_unique<NeverMaintainPolicy>(c.num_sensors);
    case PolicyKind::kThreshold:
      return std::make_unique<ThresholdPolicy>(
          c.num_sensors, static_cast<std::uint32_t>(c.parameter));
    case PolicyKind::kRandom:
      return std::make_unique<UniformRandomPolicy>(c.num_sensors);
  }
  throw UsageError("unknown policy kind");
}

}  // namespace aoim
