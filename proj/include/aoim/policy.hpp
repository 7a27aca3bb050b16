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

// Greedy decision rules used for evaluation, and the agent checkpoint file.
//
// Agent checkpoint byte layout (little-endian):
//
//   offset  size  field
//   0       8     magic "AOIMAGT1"
//   8       1     u8 kind (0 m-dqn, 1 m-beg-dqn, 2 m-a2c, 3 never,
//                 4 threshold, 5 random)
//   9       4     u32 num_sensors
//   13      4     u32 aoi_max used for input encoding
//   17      1     u8 observation transform (0 linear, 1 log)
//   18      8     u64 step count
//   26      8     f64 exploration epsilon at that step
//   34      8     f64 kind parameter (A2C return scale, threshold rule
//                 AoI limit, otherwise 0)
//   42      4     u32 N, number of networks
//   46      ..    N network records in the format of neural.hpp
//
// DQN checkpoints hold the online net; A2C checkpoints hold trunk, actor
// and critic in that order; scripted kinds hold none.

#ifndef AOIM_POLICY_HPP_
#define AOIM_POLICY_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aoim/agents.hpp"
#include "aoim/config.hpp"
#include "aoim/env.hpp"
#include "aoim/neural.hpp"
#include "aoim/rng.hpp"

namespace aoim {

enum class PolicyKind : std::uint8_t {
  kDqn = 0,
  kBiasedDqn = 1,
  kA2c = 2,
  kNever = 3,
  kThreshold = 4,
  kRandom = 5,
};

std::string_view policy_kind_name(PolicyKind kind);
// Accepts the algorithm names plus "never", "threshold" and "random".
PolicyKind parse_policy_kind(std::string_view name);

struct AgentCheckpoint {
  PolicyKind kind = PolicyKind::kNever;
  std::uint32_t num_sensors = 0;
  std::uint32_t aoi_max = 1;
  ObservationTransform transform = ObservationTransform::kLog;
  std::uint64_t step_count = 0;
  double epsilon = 0.0;
  double parameter = 0.0;
  std::vector<DenseNet> nets;

  bool operator==(const AgentCheckpoint&) const = default;
};

AgentCheckpoint checkpoint_of(const DqnAgent& agent);
AgentCheckpoint checkpoint_of(const A2cAgent& agent);
AgentCheckpoint scripted_checkpoint(PolicyKind kind, std::uint32_t num_sensors,
                                    double parameter = 0.0);

void write_checkpoint(std::ostream& out, const AgentCheckpoint& ckpt);
AgentCheckpoint read_checkpoint(std::istream& in);
void save_checkpoint(const AgentCheckpoint& ckpt, const std::string& path);
AgentCheckpoint load_checkpoint(const std::string& path);

// Maps an AoI vector to an action with no learning side effects.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t input_size() const = 0;
  virtual Action act(const Observation& obs, Rng& rng) const = 0;
};

// Argmax of the online Q-network.
class GreedyQPolicy : public Policy {
 public:
  GreedyQPolicy(DenseNet net, std::uint32_t aoi_max,
                ObservationTransform transform);
  std::size_t input_size() const override { return net_.input_size(); }
  Action act(const Observation& obs, Rng& rng) const override;

 private:
  DenseNet net_;
  std::uint32_t aoi_max_;
  ObservationTransform transform_;
};

// Most probable action of the actor.
class GreedyActorPolicy : public Policy {
 public:
  GreedyActorPolicy(ActorCriticNet net, std::uint32_t aoi_max,
                    ObservationTransform transform);
  std::size_t input_size() const override { return net_.input_size(); }
  Action act(const Observation& obs, Rng& rng) const override;

 private:
  ActorCriticNet net_;
  std::uint32_t aoi_max_;
  ObservationTransform transform_;
};

class NeverMaintainPolicy : public Policy {
 public:
  explicit NeverMaintainPolicy(std::size_t num_sensors) : m_(num_sensors) {}
  std::size_t input_size() const override { return m_; }
  Action act(const Observation&, Rng&) const override {
    return Action::kNoMaintenance;
  }

 private:
  std::size_t m_;
};

class UniformRandomPolicy : public Policy {
 public:
  explicit UniformRandomPolicy(std::size_t num_sensors) : m_(num_sensors) {}
  std::size_t input_size() const override { return m_; }
  Action act(const Observation&, Rng& rng) const override;

 private:
  std::size_t m_;
};

// Scripted AoI rule: sensors whose AoI exceeds `limit` are stale. No stale
// sensor: no maintenance. Every sensor stale: network maintenance (with a
// single sensor the rule alternates between the two repairs). Otherwise:
// sensor maintenance.
class ThresholdPolicy : public Policy {
 public:
  ThresholdPolicy(std::size_t num_sensors, std::uint32_t limit)
      : m_(num_sensors), limit_(limit) {}
  std::size_t input_size() const override { return m_; }
  Action act(const Observation& obs, Rng& rng) const override;

 private:
  std::size_t m_;
  std::uint32_t limit_;
};

std::unique_ptr<Policy> make_policy(const AgentCheckpoint& ckpt);

}  // namespace aoim

#endif  // AOIM_POLICY_HPP_
