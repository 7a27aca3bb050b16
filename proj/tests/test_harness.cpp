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

#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "aoim/error.hpp"
#include "aoim/harness.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aoim;
using aoim::testing::no_fault_scenario;

namespace {

class ConstantPolicy : public Policy {
 public:
  ConstantPolicy(std::size_t m, Action a) : m_(m), a_(a) {}
  std::size_t input_size() const override { return m_; }
  Action act(const Observation&, Rng&) const override { return a_; }

 private:
  std::size_t m_;
  Action a_;
};

AgentConfig small_agent(Algorithm algo) {
  AgentConfig a;
  a.algorithm = algo;
  a.hidden_units = 16;
  a.batch_size = 8;
  a.buffer_capacity = 1000;
  a.sync_period = 50;
  a.epsilon_decay_steps = 200;
  a.learning_rate = 1e-3;
  a.discount = 0.9;
  a.rollout_length = 8;
  return a;
}

ScenarioConfig small_faulty(std::size_t m, std::uint32_t horizon) {
  auto c = aoim::testing::mixed_scenario(m);
  c.horizon = horizon;
  c.aoi_max = horizon;
  return c;
}

TrajectorySlot slot(std::size_t m, bool net_faulty,
                    std::set<std::size_t> faulty_sensors,
                    Action a = Action::kNoMaintenance) {
  SystemState s = SystemState::all_healthy(m);
  if (net_faulty) s.network_health = Health::kFaulty;
  for (auto i : faulty_sensors) s.sensor_health[i] = Health::kFaulty;
  return TrajectorySlot{s, a};
}

SessionResult session_with(std::vector<double> rewards) {
  SessionResult r;
  r.episode_rewards = std::move(rewards);
  return r;
}

}  // namespace

TEST_CASE("fault-free episode of a never-maintain policy earns the horizon") {
  for (std::uint32_t horizon : {1u, 37u, 5000u}) {
    const auto c = no_fault_scenario(4, horizon);
    const auto r = evaluate_reward(NeverMaintainPolicy(4), c, 3, 1);
    for (double v : r) CHECK(v == double(horizon));
  }
}

TEST_CASE("always maintaining a fault-free system costs a factor of 101") {
  const auto c = no_fault_scenario(4, 1000);
  const auto r =
      evaluate_reward(ConstantPolicy(4, Action::kSensorsMaintenance), c, 2, 1);
  for (double v : r) CHECK(v == doctest::Approx(1000.0 / 101).epsilon(1e-12));
}

TEST_CASE("training is deterministic given the seed") {
  for (Algorithm algo : {Algorithm::kDqn, Algorithm::kBiasedDqn,
                         Algorithm::kA2c}) {
    CAPTURE(algorithm_name(algo));
    const auto c = small_faulty(2, 60);
    const auto a = train_session(c, small_agent(algo), 3, 42);
    const auto b = train_session(c, small_agent(algo), 3, 42);
    CHECK(a.episode_rewards == b.episode_rewards);
    CHECK(a.final_checkpoint == b.final_checkpoint);
    const auto other = train_session(c, small_agent(algo), 3, 43);
    CHECK(other.episode_rewards != a.episode_rewards);
  }
}

TEST_CASE("episode reward equals the sum of step rewards") {
  for (Algorithm algo : {Algorithm::kBiasedDqn, Algorithm::kA2c}) {
    const auto c = small_faulty(3, 80);
    std::vector<double> sums(4, 0.0);
    std::vector<std::size_t> steps(4, 0);
    std::vector<double> reported(4, -1.0);
    TrainingHooks hooks;
    hooks.on_step = [&](std::size_t e, const StepOutcome& o) {
      sums[e] += o.reward;
      ++steps[e];
    };
    hooks.on_episode = [&](std::size_t e, double r) { reported[e] = r; };
    const auto res = train_session(c, small_agent(algo), 4, 7, hooks);
    for (std::size_t e = 0; e < 4; ++e) {
      CHECK(steps[e] == 80);
      CHECK(res.episode_rewards[e] == sums[e]);
      CHECK(reported[e] == sums[e]);
    }
  }
}

TEST_CASE("parallel sessions match serial ones") {
  const auto c = small_faulty(2, 40);
  const auto agent = small_agent(Algorithm::kBiasedDqn);
  std::vector<std::uint64_t> done;
  const auto par = train_sessions(c, agent, 3, 2, 100, 3,
                                  [&](const SessionResult& r) {
                                    done.push_back(r.seed);
                                  });
  REQUIRE(par.size() == 3);
  CHECK(done.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(par[j].seed == 100 + j);
    const auto serial = train_session(c, agent, 2, 100 + j);
    CHECK(par[j].episode_rewards == serial.episode_rewards);
  }
}

TEST_CASE("confidence intervals") {
  SUBCASE("identical sessions") {
    std::vector<SessionResult> r{session_with({1, 2}), session_with({1, 2}),
                                 session_with({1, 2})};
    const auto c = aggregate_curves(r);
    CHECK(c[0].ci_half_width == 0.0);
    CHECK(c[1].mean == 2.0);
    CHECK(c[1].n_sessions == 3);
  }
  SUBCASE("two sessions") {
    std::vector<SessionResult> r{session_with({4000}), session_with({5000})};
    const auto c = aggregate_curves(r);
    CHECK(c[0].mean == 4500.0);
    // t(1 dof, 0.975) = 12.7062 from tables; s = 707.1068.
    CHECK(c[0].ci_half_width ==
          doctest::Approx(12.7062 * 707.1068 / std::sqrt(2.0)).epsilon(1e-5));
    CHECK(c[0].ci_half_width == doctest::Approx(6353.10).epsilon(1e-6));
  }
  SUBCASE("twenty sessions with unit sample variance") {
    Rng rng(3);
    std::vector<double> x(20);
    for (auto& v : x) v = rng.uniform();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 20;
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / 19);
    std::vector<SessionResult> r;
    for (double v : x) r.push_back(session_with({(v - mean) / sd}));
    const auto c = aggregate_curves(r);
    CHECK(c[0].ci_half_width == doctest::Approx(2.093 / std::sqrt(20.0))
                                    .epsilon(1e-3));
    CHECK(c[0].ci_half_width == doctest::Approx(0.468).epsilon(1e-3));
  }
  SUBCASE("too few sessions") {
    std::vector<SessionResult> one{session_with({1})};
    CHECK_THROWS_AS(aggregate_curves(one), StatisticsError);
    std::vector<SessionResult> ragged{session_with({1}), session_with({1, 2})};
    CHECK_THROWS_AS(aggregate_curves(ragged), StatisticsError);
  }
}

TEST_CASE("fault tracking examples") {
  SUBCASE("network fault detected mid-interval") {
    std::vector<TrajectorySlot> t;
    for (int k = 0; k < 30; ++k) {
      const bool faulty = k >= 10 && k <= 20;
      t.push_back(slot(2, faulty, {},
                       k == 13 ? Action::kNetworkMaintenance
                               : Action::kNoMaintenance));
    }
    const auto rec = track_faults(t);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].unit == FaultUnitType::kNetwork);
    CHECK(rec[0].start_slot == 10);
    CHECK(rec[0].end_slot == 20);
    CHECK(rec[0].duration() == 11);
    CHECK(rec[0].detected);
    CHECK(rec[0].detection_slot == 13u);
  }
  SUBCASE("sensor fault that heals by itself") {
    std::vector<TrajectorySlot> t;
    for (int k = 0; k < 15; ++k) {
      t.push_back(slot(3, false,
                       k >= 5 && k <= 9 ? std::set<std::size_t>{1}
                                        : std::set<std::size_t>{},
                       k == 7 ? Action::kNetworkMaintenance
                              : Action::kNoMaintenance));
    }
    const auto rec = track_faults(t);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].unit == FaultUnitType::kSensor);
    CHECK(rec[0].sensor == 1);
    CHECK_FALSE(rec[0].detected);
    CHECK_FALSE(rec[0].detection_slot.has_value());
    CHECK(rec[0].cause_of_end == FaultEnd::kSelfHeal);
  }
  SUBCASE("permanent fault left alone") {
    std::vector<TrajectorySlot> t;
    for (int k = 0; k < 20; ++k) t.push_back(slot(1, k >= 4, {}));
    const auto rec = track_faults(t);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].end_slot == 19);
    CHECK(rec[0].cause_of_end == FaultEnd::kEpisodeEnd);
    CHECK_FALSE(rec[0].detected);
  }
  SUBCASE("repair ends the interval") {
    std::vector<TrajectorySlot> t;
    t.push_back(slot(2, false, {}));
    t.push_back(slot(2, false, {0, 1}));
    t.push_back(slot(2, false, {0, 1}, Action::kSensorsMaintenance));
    t.push_back(slot(2, false, {}));
    const auto rec = track_faults(t);
    REQUIRE(rec.size() == 2);
    for (const auto& r : rec) {
      CHECK(r.detected);
      CHECK(r.cause_of_end == FaultEnd::kRepaired);
      CHECK(r.duration() == 2);
    }
  }
}

TEST_CASE("fault records partition each unit's faulty slots") {
  auto c = aoim::testing::mixed_scenario(3);
  c.horizon = 3000;
  UniformRandomPolicy policy(3);
  Environment env(c);
  Rng prng(4);
  const auto trace = run_episode(policy, env, 5, prng);
  const auto rec = track_faults(trace.slots);
  // unit index 0 = network, 1 + i = sensor i
  std::vector<std::vector<int>> cover(4, std::vector<int>(trace.slots.size()));
  for (const auto& r : rec) {
    const std::size_t u = r.unit == FaultUnitType::kNetwork ? 0 : 1 + r.sensor;
    for (auto k = r.start_slot; k <= r.end_slot; ++k) ++cover[u][k];
    if (r.detected) {
      const Action want = r.unit == FaultUnitType::kNetwork
                              ? Action::kNetworkMaintenance
                              : Action::kSensorsMaintenance;
      CHECK(trace.slots[*r.detection_slot].action == want);
    }
  }
  for (std::size_t k = 0; k < trace.slots.size(); ++k) {
    const auto& s = trace.slots[k].state;
    REQUIRE(cover[0][k] == (s.network_health == Health::kFaulty ? 1 : 0));
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(cover[1 + i][k] == (s.sensor_health[i] == Health::kFaulty ? 1 : 0));
    }
  }
  CHECK(rec.size() > 50);
}

TEST_CASE("TPR of scripted policies") {
  auto c = preset("permanent_faults").scenario;
  c.horizon = 1000;
  c.aoi_max = 1000;
  const std::vector<std::uint32_t> th{1, 2, 3, 4, 8};

  SUBCASE("threshold rule detects every fault that outlives its lag") {
    ThresholdPolicy oracle(4, 2);
    const auto rep = evaluate_tpr(oracle, c, 30, th, 11);
    REQUIRE(rep.combined.fault_counts[2] > 50);
    for (std::size_t k = 2; k < th.size(); ++k) {
      if (rep.combined.tpr[k]) CHECK(*rep.combined.tpr[k] == 1.0);
    }
    CHECK(*rep.network.tpr[2] == 1.0);
    CHECK(*rep.sensor.tpr[2] == 1.0);
  }
  SUBCASE("never maintaining detects nothing") {
    NeverMaintainPolicy never(4);
    const auto rep = evaluate_tpr(never, c, 10, th, 11);
    for (const auto* s : {&rep.network, &rep.sensor, &rep.combined}) {
      for (const auto& v : s->tpr) {
        if (v) CHECK(*v == 0.0);
      }
    }
    CHECK(rep.combined.fault_counts[0] > 0);
  }
}

TEST_CASE("TPR report bookkeeping") {
  auto c = aoim::testing::mixed_scenario(3);
  c.horizon = 500;
  UniformRandomPolicy policy(3);
  const auto& th = default_tpr_thresholds();
  const auto rep = evaluate_tpr(policy, c, 5, th, 3);
  for (const auto* s : {&rep.network, &rep.sensor, &rep.combined}) {
    REQUIRE(s->tpr.size() == th.size());
    for (std::size_t k = 0; k < th.size(); ++k) {
      if (k > 0) CHECK(s->fault_counts[k] <= s->fault_counts[k - 1]);
      CHECK(s->detected_counts[k] <= s->fault_counts[k]);
      CHECK(s->tpr[k].has_value() == (s->fault_counts[k] > 0));
      if (s->tpr[k]) {
        CHECK(*s->tpr[k] >= 0.0);
        CHECK(*s->tpr[k] <= 1.0);
      }
    }
  }
  for (std::size_t k = 0; k < th.size(); ++k) {
    CHECK(rep.combined.fault_counts[k] ==
          rep.network.fault_counts[k] + rep.sensor.fault_counts[k]);
  }
  std::vector<FaultRecord> none;
  const auto empty = tpr_from_records(none, th);
  for (const auto& v : empty.combined.tpr) CHECK_FALSE(v.has_value());
}

TEST_CASE("greedy evaluation leaves the checkpoint unchanged") {
  const auto c = small_faulty(2, 60);
  const auto res = train_session(c, small_agent(Algorithm::kBiasedDqn), 2, 9);
  const auto ckpt = res.final_checkpoint;
  const auto policy = make_policy(ckpt);
  evaluate_tpr(*policy, c, 3, default_tpr_thresholds(), 1);
  evaluate_reward(*policy, c, 3, 1);
  CHECK(ckpt == res.final_checkpoint);
}

TEST_CASE("shape mismatch names both dimensions") {
  const auto c = small_faulty(3, 20);
  NeverMaintainPolicy p(2);
  try {
    evaluate_reward(p, c, 1, 1);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("CSV outputs") {
  const auto dir = aoim::testing::scratch_dir("harness_csv");
  SessionResult r = session_with({1.0 / 3.0, 2.0});
  write_session_csv(r, (dir / "s.csv").string());
  const auto lines = aoim::testing::read_lines(dir / "s.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "episode,reward");
  CHECK(lines[1] == "0,0.333333333");
  CHECK(lines[2] == "1,2");

  std::vector<SessionResult> two{session_with({4000}), session_with({5000})};
  write_curves_csv(aggregate_curves(two), (dir / "c.csv").string());
  const auto curves = aoim::testing::read_lines(dir / "c.csv");
  CHECK(curves[0] == "episode,mean_reward,ci_half_width,n_sessions");
  CHECK(curves[1].rfind("0,4500,6353.1", 0) == 0);

  std::vector<FaultRecord> recs(1);
  recs[0].start_slot = 0;
  recs[0].end_slot = 5;
  recs[0].detected = true;
  write_tpr_csv(tpr_from_records(recs, default_tpr_thresholds()),
                (dir / "t.csv").string());
  const auto tpr = aoim::testing::read_lines(dir / "t.csv");
  REQUIRE(tpr.size() == 1 + 3 * 6);
  CHECK(tpr[0] == "fault_type,threshold,tpr,fault_count");
  CHECK(tpr[1] == "network,1,1,1");
  CHECK(tpr[3] == "network,8,,0");
  CHECK(tpr[7] == "sensor,1,,0");
  CHECK(tpr[13] == "combined,1,1,1");
}
