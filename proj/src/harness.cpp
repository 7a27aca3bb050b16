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

#include "aoim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "aoim/agents.hpp"
#include "aoim/error.hpp"

namespace aoim {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kActStream = 1;
constexpr std::uint64_t kEpisodeStreamBase = 2;
constexpr std::uint64_t kEvalPolicyStream = 1ULL << 40;

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

SessionResult train_dqn(const ScenarioConfig& scenario,
                        const AgentConfig& config, std::size_t episodes,
                        std::uint64_t seed, const TrainingHooks& hooks) {
  Rng init_rng(derive_seed(seed, kInitStream));
  Rng act_rng(derive_seed(seed, kActStream));
  DqnAgent agent(scenario.num_sensors, scenario.aoi_max, config, init_rng);
  Environment env(scenario);

  SessionResult result;
  result.seed = seed;
  result.episode_rewards.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    Observation obs = env.reset(derive_seed(seed, kEpisodeStreamBase + e)).first;
    double total = 0.0;
    bool done = false;
    while (!done) {
      const Action a = agent.act(obs, act_rng);
      auto out = env.step(a);
      total += out.reward;
      done = out.terminal;
      if (hooks.on_step) hooks.on_step(e, out);
      Observation next = out.next_observation;
      agent.observe(Transition{std::move(obs), a, out.reward,
                               std::move(out.next_observation), out.terminal},
                    act_rng);
      obs = std::move(next);
    }
    result.episode_rewards.push_back(total);
    if (hooks.on_episode) hooks.on_episode(e, total);
  }
  result.final_checkpoint = checkpoint_of(agent);
  return result;
}

SessionResult train_a2c(const ScenarioConfig& scenario,
                        const AgentConfig& config, std::size_t episodes,
                        std::uint64_t seed, const TrainingHooks& hooks) {
  Rng init_rng(derive_seed(seed, kInitStream));
  Rng act_rng(derive_seed(seed, kActStream));
  A2cAgent agent(scenario.num_sensors, scenario.aoi_max, config, init_rng);
  Environment env(scenario);

  SessionResult result;
  result.seed = seed;
  result.episode_rewards.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    env.reset(derive_seed(seed, kEpisodeStreamBase + e));
    double total = 0.0;
    while (!env.terminal()) {
      const auto rollout = agent.a2c_rollout(
          env, act_rng, [&](const StepOutcome& out) {
            if (hooks.on_step) hooks.on_step(e, out);
          });
      for (const auto& step : rollout.steps) total += step.reward;
      agent.a2c_update(rollout);
    }
    result.episode_rewards.push_back(total);
    if (hooks.on_episode) hooks.on_episode(e, total);
  }
  result.final_checkpoint = checkpoint_of(agent);
  return result;
}

void add_tpr(TprSeries& series, std::size_t count, std::size_t detected) {
  series.fault_counts.push_back(count);
  series.detected_counts.push_back(detected);
  if (count == 0) {
    series.tpr.push_back(std::nullopt);
  } else {
    series.tpr.push_back(static_cast<double>(detected) /
                         static_cast<double>(count));
  }
}

void record_unit_faults(std::span<const TrajectorySlot> slots,
                        FaultUnitType type, std::size_t sensor,
                        std::vector<FaultRecord>& out) {
  const Action repair = type == FaultUnitType::kNetwork
                            ? Action::kNetworkMaintenance
                            : Action::kSensorsMaintenance;
  const auto faulty = [&](std::size_t t) {
    const auto& s = slots[t].state;
    return (type == FaultUnitType::kNetwork ? s.network_health
                                            : s.sensor_health.at(sensor)) ==
           Health::kFaulty;
  };
  const std::size_t n = slots.size();
  std::size_t t = 0;
  while (t < n) {
    if (!faulty(t)) {
      ++t;
      continue;
    }
    FaultRecord r;
    r.unit = type;
    r.sensor = type == FaultUnitType::kSensor ? sensor : 0;
    r.start_slot = static_cast<std::uint32_t>(t);
    while (t < n && faulty(t)) {
      if (!r.detected && slots[t].action == repair) {
        r.detected = true;
        r.detection_slot = static_cast<std::uint32_t>(t);
      }
      ++t;
    }
    r.end_slot = static_cast<std::uint32_t>(t - 1);
    if (slots[t - 1].action == repair) {
      r.cause_of_end = FaultEnd::kRepaired;
    } else if (t == n) {
      r.cause_of_end = FaultEnd::kEpisodeEnd;
    } else {
      r.cause_of_end = FaultEnd::kSelfHeal;
    }
    out.push_back(r);
  }
}

}  // namespace

SessionResult train_session(const ScenarioConfig& scenario,
                            const AgentConfig& agent, std::size_t episodes,
                            std::uint64_t seed, const TrainingHooks& hooks) {
  scenario.validate();
  agent.validate();
  if (agent.algorithm == Algorithm::kA2c) {
    return train_a2c(scenario, agent, episodes, seed, hooks);
  }
  return train_dqn(scenario, agent, episodes, seed, hooks);
}

std::vector<SessionResult> train_sessions(
    const ScenarioConfig& scenario, const AgentConfig& agent,
    std::size_t sessions, std::size_t episodes, std::uint64_t base_seed,
    std::size_t jobs,
    const std::function<void(const SessionResult&)>& on_session_done) {
  if (sessions == 0) throw UsageError("at least one session is required");
  if (jobs == 0) jobs = std::max(1U, std::thread::hardware_concurrency());
  jobs = std::min(jobs, sessions);

  std::vector<SessionResult> results(sessions);
  std::vector<std::exception_ptr> errors(sessions);
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;

  const auto worker = [&] {
    for (std::size_t j = next++; j < sessions; j = next++) {
      try {
        results[j] = train_session(scenario, agent, episodes, base_seed + j);
        if (on_session_done) {
          std::lock_guard lock(done_mutex);
          on_session_done(results[j]);
        }
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return results;
}

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

std::vector<CurveStat> aggregate_curves(std::span<const SessionResult> results,
                                        double confidence) {
  if (results.size() < 2) {
    throw StatisticsError("confidence intervals need at least 2 sessions, got " +
                          std::to_string(results.size()));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw StatisticsError("confidence must lie in (0, 1)");
  }
  const std::size_t episodes = results.front().episode_rewards.size();
  for (const auto& r : results) {
    if (r.episode_rewards.size() != episodes) {
      throw StatisticsError("sessions have different episode counts");
    }
  }
  const auto n = static_cast<double>(results.size());
  const double t = student_t_quantile(0.5 + confidence / 2.0, n - 1.0);

  std::vector<CurveStat> curves(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    double sum = 0.0;
    for (const auto& r : results) sum += r.episode_rewards[i];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : results) {
      const double d = r.episode_rewards[i] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / (n - 1.0));
    curves[i] = CurveStat{mean, t * sd / std::sqrt(n), results.size()};
  }
  return curves;
}

std::vector<FaultRecord> track_faults(std::span<const TrajectorySlot> slots) {
  std::vector<FaultRecord> records;
  if (slots.empty()) return records;
  record_unit_faults(slots, FaultUnitType::kNetwork, 0, records);
  const std::size_t m = slots.front().state.sensor_health.size();
  for (std::size_t i = 0; i < m; ++i) {
    record_unit_faults(slots, FaultUnitType::kSensor, i, records);
  }
  return records;
}

const std::vector<std::uint32_t>& default_tpr_thresholds() {
  static const std::vector<std::uint32_t> thresholds{1, 4, 8, 12, 16, 20};
  return thresholds;
}

TprReport tpr_from_records(std::span<const FaultRecord> records,
                           std::span<const std::uint32_t> thresholds) {
  TprReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  for (auto d : thresholds) {
    std::size_t counts[2] = {0, 0};
    std::size_t detected[2] = {0, 0};
    for (const auto& r : records) {
      if (r.duration() < d) continue;
      const int k = r.unit == FaultUnitType::kNetwork ? 0 : 1;
      ++counts[k];
      detected[k] += r.detected;
    }
    add_tpr(report.network, counts[0], detected[0]);
    add_tpr(report.sensor, counts[1], detected[1]);
    add_tpr(report.combined, counts[0] + counts[1], detected[0] + detected[1]);
  }
  return report;
}

void check_policy_shape(const Policy& policy, const ScenarioConfig& scenario) {
  if (policy.input_size() != scenario.num_sensors) {
    throw UsageError("checkpoint expects " +
                     std::to_string(policy.input_size()) +
                     " input dimensions but the scenario has " +
                     std::to_string(scenario.num_sensors) + " sensors");
  }
}

EpisodeTrace run_episode(const Policy& policy, Environment& env,
                         std::uint64_t env_seed, Rng& policy_rng) {
  EpisodeTrace trace;
  auto [obs, state] = env.reset(env_seed);
  trace.slots.reserve(env.config().horizon);
  bool done = false;
  while (!done) {
    const Action a = policy.act(obs, policy_rng);
    trace.slots.push_back(TrajectorySlot{std::move(state), a});
    auto out = env.step(a);
    trace.total_reward += out.reward;
    done = out.terminal;
    obs = std::move(out.next_observation);
    state = std::move(out.truth_next_state);
  }
  return trace;
}

TprReport evaluate_tpr(const Policy& policy, const ScenarioConfig& scenario,
                       std::size_t episodes,
                       std::span<const std::uint32_t> thresholds,
                       std::uint64_t seed) {
  check_policy_shape(policy, scenario);
  Environment env(scenario);
  Rng policy_rng(derive_seed(seed, kEvalPolicyStream));
  std::vector<FaultRecord> records;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto trace = run_episode(policy, env, derive_seed(seed, e), policy_rng);
    const auto faults = track_faults(trace.slots);
    records.insert(records.end(), faults.begin(), faults.end());
  }
  return tpr_from_records(records, thresholds);
}

std::vector<double> evaluate_reward(const Policy& policy,
                                    const ScenarioConfig& scenario,
                                    std::size_t episodes, std::uint64_t seed) {
  check_policy_shape(policy, scenario);
  Environment env(scenario);
  Rng policy_rng(derive_seed(seed, kEvalPolicyStream));
  std::vector<double> rewards;
  rewards.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    rewards.push_back(
        run_episode(policy, env, derive_seed(seed, e), policy_rng)
            .total_reward);
  }
  return rewards;
}

std::string format_csv_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_session_csv(const SessionResult& result, const std::string& path) {
  auto out = open_csv(path);
  out << "episode,reward\n";
  for (std::size_t i = 0; i < result.episode_rewards.size(); ++i) {
    out << i << ',' << format_csv_double(result.episode_rewards[i]) << '\n';
  }
  finish_csv(out, path);
}

void write_curves_csv(std::span<const CurveStat> curves,
                      const std::string& path) {
  auto out = open_csv(path);
  out << "episode,mean_reward,ci_half_width,n_sessions\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    out << i << ',' << format_csv_double(curves[i].mean) << ','
        << format_csv_double(curves[i].ci_half_width) << ','
        << curves[i].n_sessions << '\n';
  }
  finish_csv(out, path);
}

void write_tpr_csv(const TprReport& report, const std::string& path) {
  auto out = open_csv(path);
  out << "fault_type,threshold,tpr,fault_count\n";
  const std::pair<const char*, const TprSeries*> series[] = {
      {"network", &report.network},
      {"sensor", &report.sensor},
      {"combined", &report.combined}};
  for (const auto& [name, s] : series) {
    for (std::size_t k = 0; k < report.thresholds.size(); ++k) {
      out << name << ',' << report.thresholds[k] << ',';
      if (s->tpr[k]) out << format_csv_double(*s->tpr[k]);
      out << ',' << s->fault_counts[k] << '\n';
    }
  }
  finish_csv(out, path);
}

}  // namespace aoim
