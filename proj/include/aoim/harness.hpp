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

// Experiment protocols: multi-session training with per-episode reward
// curves, and greedy fault-tracking evaluation (true positive rate by
// minimum fault duration).

#ifndef AOIM_HARNESS_HPP_
#define AOIM_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aoim/config.hpp"
#include "aoim/env.hpp"
#include "aoim/policy.hpp"

namespace aoim {

struct SessionResult {
  std::vector<double> episode_rewards;
  AgentCheckpoint final_checkpoint;
  std::uint64_t seed = 0;
};

struct TrainingHooks {
  // Called after every environment step.
  std::function<void(std::size_t episode, const StepOutcome&)> on_step;
  // Called once per finished episode with its accumulated reward.
  std::function<void(std::size_t episode, double reward)> on_episode;
};

// Runs `episodes` episodes of scenario.horizon slots with one agent. The
// exploration step counter and the replay memory persist across episodes.
SessionResult train_session(const ScenarioConfig& scenario,
                            const AgentConfig& agent, std::size_t episodes,
                            std::uint64_t seed,
                            const TrainingHooks& hooks = {});

// Sessions j = 0..sessions-1 use seed base_seed + j and run on up to `jobs`
// worker threads (0 = hardware concurrency). Results are in session order;
// `on_session_done` is called serialized, in completion order.
std::vector<SessionResult> train_sessions(
    const ScenarioConfig& scenario, const AgentConfig& agent,
    std::size_t sessions, std::size_t episodes, std::uint64_t base_seed,
    std::size_t jobs,
    const std::function<void(const SessionResult&)>& on_session_done = {});

struct CurveStat {
  double mean = 0.0;
  double ci_half_width = 0.0;
  std::size_t n_sessions = 0;
};

// Two-sided Student-t quantile t_{dof, p}.
double student_t_quantile(double p, double dof);

// Per-episode mean across sessions with a two-sided Student-t confidence
// half-width. Throws StatisticsError with fewer than two sessions or
// unequal lengths.
std::vector<CurveStat> aggregate_curves(std::span<const SessionResult> results,
                                        double confidence = 0.95);

struct TrajectorySlot {
  SystemState state;  // at the start of the slot
  Action action = Action::kNoMaintenance;
};

enum class FaultUnitType { kNetwork, kSensor };
enum class FaultEnd { kSelfHeal, kRepaired, kEpisodeEnd };

struct FaultRecord {
  FaultUnitType unit = FaultUnitType::kNetwork;
  std::size_t sensor = 0;  // meaningful for sensor faults only
  std::uint32_t start_slot = 0;
  std::uint32_t end_slot = 0;  // last faulty slot, inclusive
  FaultEnd cause_of_end = FaultEnd::kEpisodeEnd;
  bool detected = false;
  std::optional<std::uint32_t> detection_slot;

  std::uint32_t duration() const { return end_slot - start_slot + 1; }
};

// One record per maximal faulty interval per unit. A fault is detected when
// the matching maintenance (network: 1, sensor: 2) is issued during it.
std::vector<FaultRecord> track_faults(std::span<const TrajectorySlot> slots);

struct TprSeries {
  std::vector<std::optional<double>> tpr;  // absent where no faults
  std::vector<std::size_t> fault_counts;
  std::vector<std::size_t> detected_counts;
};

struct TprReport {
  std::vector<std::uint32_t> thresholds;
  TprSeries network;
  TprSeries sensor;
  TprSeries combined;
};

const std::vector<std::uint32_t>& default_tpr_thresholds();

TprReport tpr_from_records(std::span<const FaultRecord> records,
                           std::span<const std::uint32_t> thresholds);

struct EpisodeTrace {
  std::vector<TrajectorySlot> slots;
  double total_reward = 0.0;
};

// Greedy rollout of one full episode.
EpisodeTrace run_episode(const Policy& policy, Environment& env,
                         std::uint64_t env_seed, Rng& policy_rng);

// Episodes use env seeds derived from `seed`; the policy is never updated.
TprReport evaluate_tpr(const Policy& policy, const ScenarioConfig& scenario,
                       std::size_t episodes,
                       std::span<const std::uint32_t> thresholds,
                       std::uint64_t seed);

// Per-episode total reward of the policy.
std::vector<double> evaluate_reward(const Policy& policy,
                                    const ScenarioConfig& scenario,
                                    std::size_t episodes, std::uint64_t seed);

// Throws UsageError when the policy's input size differs from the
// scenario's sensor count.
void check_policy_shape(const Policy& policy, const ScenarioConfig& scenario);

// CSV output, floats with 9 significant digits.
std::string format_csv_double(double value);
void write_session_csv(const SessionResult& result, const std::string& path);
void write_curves_csv(std::span<const CurveStat> curves,
                      const std::string& path);
void write_tpr_csv(const TprReport& report, const std::string& path);

}  // namespace aoim

#endif  // AOIM_HARNESS_HPP_
