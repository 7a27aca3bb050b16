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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "aoim/agents.hpp"
#include "aoim/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aoim;
using aoim::testing::within_sigmas;

namespace {

AgentConfig dqn_config(Algorithm algo = Algorithm::kDqn) {
  AgentConfig c;
  c.algorithm = algo;
  c.hidden_units = 16;
  c.batch_size = 4;
  c.buffer_capacity = 100;
  c.sync_period = 5;
  return c;
}

// Makes the online net output `q` for every input.
void pin_q(DqnAgent& agent, const std::array<double, 3>& q) {
  auto& net = agent.online_net();
  std::ranges::fill(net.parameters(), 0.0);
  auto b = net.biases(net.num_layers() - 1);
  std::ranges::copy(q, b.begin());
}

Observation obs(std::initializer_list<std::uint32_t> v) { return {v}; }

Transition make_transition(Action a, double r, bool terminal) {
  return Transition{obs({1, 2}), a, r, obs({2, 3}), terminal};
}

std::array<int, 3> tally(int n, auto draw) {
  std::array<int, 3> c{};
  for (int k = 0; k < n; ++k) ++c[action_index(draw())];
  return c;
}

}  // namespace

TEST_CASE("linear exploration schedule") {
  EpsilonSchedule s{1.0, 0.01, 400000};
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(200000) == doctest::Approx(0.505).epsilon(1e-12));
  CHECK(s.at(400000) == doctest::Approx(0.01));
  CHECK(s.at(10000000) == doctest::Approx(0.01));
}

TEST_CASE("observation encodings") {
  const auto lin = encode_observation(obs({1, 250, 500, 900}), 500,
                                      ObservationTransform::kLinear);
  CHECK(lin[0] == doctest::Approx(0.002));
  CHECK(lin[1] == doctest::Approx(0.5));
  CHECK(lin[2] == doctest::Approx(1.0));
  CHECK(lin[3] == doctest::Approx(1.0));
  const auto lg = encode_observation(obs({1, 10, 100}), 100,
                                     ObservationTransform::kLog);
  CHECK(lg[0] == doctest::Approx(0.0));
  CHECK(lg[1] == doctest::Approx(0.5));
  CHECK(lg[2] == doctest::Approx(1.0));
}

TEST_CASE("epsilon-greedy examples") {
  Rng rng(1);
  const std::vector<double> q{0.1, 0.9, 0.2};
  const int n = 100000;
  const auto uniform = tally(n, [&] { return epsilon_greedy(q, 1.0, rng); });
  for (int c : uniform) CHECK(within_sigmas(c, n, 1.0 / 3));
  const auto greedy = tally(n, [&] { return epsilon_greedy(q, 0.0, rng); });
  CHECK(greedy[1] == n);

  Rng init(2);
  auto cfg = dqn_config();
  cfg.epsilon_start = cfg.epsilon_end = 0.0;
  DqnAgent agent(2, 100, cfg, init);
  pin_q(agent, {0.1, 0.9, 0.2});
  for (int k = 0; k < 1000; ++k) {
    REQUIRE(agent.act_epsilon_greedy(obs({3, 4}), k, rng) ==
            Action::kNetworkMaintenance);
  }
}

TEST_CASE("greedy ties are broken uniformly") {
  Rng rng(3);
  const std::vector<double> q{0.5, 0.2, 0.5};
  const int n = 60000;
  const auto c = tally(n, [&] { return greedy_action(q, rng); });
  CHECK(c[1] == 0);
  CHECK(within_sigmas(c[0], n, 0.5));
}

TEST_CASE("biased exploration examples") {
  Rng init(4), rng(5);
  auto cfg = dqn_config(Algorithm::kBiasedDqn);
  DqnAgent agent(2, 100, cfg, init);
  pin_q(agent, {0.0, 0.1, 0.7});
  const auto o = obs({2, 2});

  const int n = 100000;
  const auto always_none = tally(1000, [&] {
    return biased_epsilon_greedy(agent.q_values(o), 1.0, rng);
  });
  CHECK(always_none[0] == 1000);

  // Two-stage tree: bias draw, then epsilon-greedy with the same epsilon.
  const double eps = 0.5;
  const double p0 = eps + (1 - eps) * (eps / 3);
  const double p1 = (1 - eps) * (eps / 3);
  const double p2 = (1 - eps) * ((1 - eps) + eps / 3);
  CHECK(p0 == doctest::Approx(0.5833).epsilon(1e-3));
  CHECK(p2 == doctest::Approx(0.3333).epsilon(1e-3));
  const auto c = tally(n, [&] {
    return biased_epsilon_greedy(agent.q_values(o), eps, rng);
  });
  CHECK(within_sigmas(c[0], n, p0));
  CHECK(within_sigmas(c[1], n, p1));
  CHECK(within_sigmas(c[2], n, p2));

  DqnAgent plain(2, 100, dqn_config(), init);
  CHECK_THROWS_AS(plain.act_biased(o, 0, rng), UsageError);
}

TEST_CASE("biased exploration reduces to greedy at epsilon zero") {
  Rng init(6);
  auto cfg = dqn_config(Algorithm::kBiasedDqn);
  cfg.epsilon_start = cfg.epsilon_end = 0.0;
  DqnAgent agent(3, 100, cfg, init);
  Rng r1(7), r2(8), inputs(9);
  for (int k = 0; k < 2000; ++k) {
    const Observation o{{std::uint32_t(1 + inputs.index(100)),
                         std::uint32_t(1 + inputs.index(100)),
                         std::uint32_t(1 + inputs.index(100))}};
    REQUIRE(agent.act_biased(o, 0, r1) == agent.act_epsilon_greedy(o, 0, r2));
  }
}

TEST_CASE("dqn targets") {
  Rng init(10);
  auto cfg = dqn_config();
  cfg.discount = 0.999;
  DqnAgent agent(2, 100, cfg, init);
  pin_q(agent, {10.0, 3.0, -1.0});
  agent.sync_target();
  pin_q(agent, {0.0, 0.0, 0.0});
  const std::vector<Transition> batch{
      make_transition(Action::kNoMaintenance, 0.4, true),
      make_transition(Action::kNoMaintenance, 1.0, false)};
  const auto y = agent.dqn_targets(batch);
  CHECK(y[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(10.99).epsilon(1e-12));

  cfg.discount = 0.0;
  DqnAgent myopic(2, 100, cfg, init);
  const auto y0 = myopic.dqn_targets(batch);
  CHECK(y0[0] == doctest::Approx(0.4));
  CHECK(y0[1] == doctest::Approx(1.0));
}

TEST_CASE("dqn learning step") {
  Rng init(11);
  auto cfg = dqn_config();
  cfg.optimizer = OptimizerKind::kSgd;
  cfg.learning_rate = 0.01;
  cfg.discount = 0.0;

  SUBCASE("already fitted batch") {
    DqnAgent agent(2, 100, cfg, init);
    pin_q(agent, {0.5, 0.5, 0.5});
    const auto before = agent.online_net();
    const std::vector<Transition> batch{
        make_transition(Action::kNoMaintenance, 0.5, false),
        make_transition(Action::kSensorsMaintenance, 0.5, true)};
    CHECK(agent.dqn_learn(batch) == 0.0);
    CHECK(agent.online_net() == before);
  }
  SUBCASE("hand computed loss") {
    DqnAgent agent(2, 100, cfg, init);
    pin_q(agent, {0.0, 0.2, 0.0});
    const std::vector<Transition> one{
        make_transition(Action::kNetworkMaintenance, 1.0, true)};
    CHECK(agent.dqn_learn(one) == doctest::Approx(0.64).epsilon(1e-12));
  }
  SUBCASE("fixed batch loss does not increase") {
    DqnAgent agent(2, 100, cfg, init);
    std::vector<Transition> batch;
    Rng r(12);
    for (int k = 0; k < 8; ++k) {
      batch.push_back(Transition{obs({std::uint32_t(1 + r.index(50)),
                                      std::uint32_t(1 + r.index(50))}),
                                 static_cast<Action>(r.index(3)), r.uniform(),
                                 obs({1, 1}), false});
    }
    double last = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 100; ++step) {
      const double loss = agent.dqn_learn(batch);
      REQUIRE(loss <= last + 1e-12);
      last = loss;
    }
  }
  CHECK_THROWS_AS(DqnAgent(2, 100, cfg, init).dqn_learn({}), UsageError);
}

TEST_CASE("learning waits for a full batch") {
  Rng init(13), rng(14);
  auto cfg = dqn_config();
  cfg.batch_size = 3;
  DqnAgent agent(2, 100, cfg, init);
  CHECK_FALSE(agent.observe(make_transition(Action::kNoMaintenance, 1, false),
                            rng));
  CHECK_FALSE(agent.observe(make_transition(Action::kNoMaintenance, 1, false),
                            rng));
  CHECK(agent.observe(make_transition(Action::kNoMaintenance, 1, false), rng));
  CHECK(agent.steps() == 3);
}

TEST_CASE("target network starts equal and syncs on schedule") {
  Rng init(15), rng(16), inputs(17);
  auto cfg = dqn_config();
  cfg.batch_size = 1;
  cfg.sync_period = 5;
  cfg.learning_rate = 1e-2;
  DqnAgent agent(2, 100, cfg, init);
  CHECK(agent.target_net() == agent.online_net());

  DenseNet frozen = agent.target_net();
  for (int t = 1; t <= 23; ++t) {
    agent.observe(Transition{obs({std::uint32_t(1 + inputs.index(9)), 1}),
                             static_cast<Action>(inputs.index(3)), 1.0,
                             obs({1, 1}), false},
                  rng);
    if (t % 5 == 0) {
      REQUIRE(agent.target_net() == agent.online_net());
      frozen = agent.target_net();
    } else {
      REQUIRE(agent.target_net() == frozen);
      REQUIRE_FALSE(agent.target_net() == agent.online_net());
    }
  }
  agent.sync_target();
  for (int k = 0; k < 100; ++k) {
    const Observation o{{std::uint32_t(1 + inputs.index(99)),
                         std::uint32_t(1 + inputs.index(99))}};
    REQUIRE(agent.q_values(o) == agent.target_q_values(o));
  }
}

TEST_CASE("replay memory evicts the oldest entry") {
  ReplayBuffer buf(3);
  for (int k = 0; k < 4; ++k) {
    buf.push(make_transition(Action::kNoMaintenance, k, false));
  }
  REQUIRE(buf.size() == 3);
  CHECK(buf.at(0).reward == 1);
  CHECK(buf.at(1).reward == 2);
  CHECK(buf.at(2).reward == 3);
  for (int k = 4; k < 9; ++k) {
    buf.push(make_transition(Action::kNoMaintenance, k, false));
  }
  CHECK(buf.at(0).reward == 6);
  CHECK(buf.at(2).reward == 8);
  CHECK_THROWS_AS(buf.at(3), UsageError);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample_indices(4, rng), UsageError);
}

TEST_CASE("replay sampling is uniform and without replacement") {
  ReplayBuffer buf(100);
  for (int k = 0; k < 100; ++k) {
    buf.push(make_transition(Action::kNoMaintenance, k, false));
  }
  Rng rng(18);
  const int n = 100000;
  std::vector<int> hits(100, 0);
  for (int k = 0; k < n; ++k) ++hits[buf.sample_indices(1, rng)[0]];
  for (int h : hits) CHECK(within_sigmas(h, n, 0.01));

  for (int k = 0; k < 200; ++k) {
    const auto idx = buf.sample_indices(32, rng);
    REQUIRE(std::set<std::size_t>(idx.begin(), idx.end()).size() == 32);
  }
}

TEST_CASE("greedy action is invariant to positive output scaling") {
  Rng init(19), rng(20), inputs(21);
  DqnAgent agent(3, 100, dqn_config(), init);
  std::vector<Observation> probes;
  for (int k = 0; k < 200; ++k) {
    probes.push_back(Observation{{std::uint32_t(1 + inputs.index(100)),
                                  std::uint32_t(1 + inputs.index(100)),
                                  std::uint32_t(1 + inputs.index(100))}});
  }
  std::vector<Action> before;
  for (const auto& o : probes) before.push_back(agent.act_greedy(o, rng));
  auto& net = agent.online_net();
  const std::size_t last = net.num_layers() - 1;
  for (double& w : net.weights(last)) w *= 3.7;
  for (double& b : net.biases(last)) b *= 3.7;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    REQUIRE(agent.act_greedy(probes[k], rng) == before[k]);
  }
}

TEST_CASE("softmax, entropy and returns") {
  const std::vector<double> z{0.0, 0.0, 0.0};
  const auto p = softmax(z);
  CHECK(entropy(p) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(entropy(p) == doctest::Approx(1.0986).epsilon(1e-4));
  const auto big = softmax(std::vector<double>{1000.0, 0.0, -1000.0});
  CHECK(big[0] == doctest::Approx(1.0));

  const auto r = discounted_returns(std::vector<double>{1.0, 1.0}, 0.999, 10.0);
  CHECK(r[0] == doctest::Approx(1 + 0.999 + 0.999 * 0.999 * 10).epsilon(1e-12));
  CHECK(r[0] == doctest::Approx(11.97901).epsilon(1e-7));
  CHECK(r[1] == doctest::Approx(1 + 0.999 * 10).epsilon(1e-12));
}

TEST_CASE("actor outputs a probability distribution") {
  Rng init(22), inputs(23);
  ActorCriticNet net(4, true);
  net.initialize(init);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x(4);
    for (auto& v : x) v = inputs.uniform();
    const auto out = net.forward(x);
    double s = 0.0;
    for (double p : out.probabilities) {
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
      s += p;
    }
    REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(out.value) < 1.0);
  }
}

TEST_CASE("actor-critic gradient matches finite differences") {
  Rng init(24);
  ActorCriticNet net(4, true);
  net.initialize(init);
  const std::vector<double> x{0.1, 0.7, 0.3, 0.9};
  const std::vector<double> dlogits{0.3, -0.5, 0.2};
  const double dvalue = -0.8;
  auto grads = net.zero_gradients();
  net.accumulate_gradient(x, dlogits, dvalue, grads);
  const auto analytic = net.flatten(grads);

  auto probe = net;
  auto params = net.flat_parameters();
  const auto objective = [&](const std::vector<double>& p) {
    probe.set_flat_parameters(p);
    const auto out = probe.forward(x);
    double s = dvalue * out.value;
    for (std::size_t j = 0; j < 3; ++j) s += dlogits[j] * out.logits[j];
    return s;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + 1e-5;
    const double up = objective(params);
    params[i] = keep - 1e-5;
    const double down = objective(params);
    params[i] = keep;
    const double fd = (up - down) / 2e-5;
    const double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
    worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("a2c rollouts") {
  Rng init(25), rng(26);
  auto cfg = dqn_config(Algorithm::kA2c);
  cfg.rollout_length = 3;
  auto scenario = aoim::testing::mixed_scenario(2);
  scenario.horizon = 50;
  A2cAgent agent(2, scenario.aoi_max, cfg, init);
  Environment env(scenario);

  SUBCASE("episode ends after one step") {
    env.reset(1);
    env.restore(SystemState::all_healthy(2), obs({1, 1}), scenario.horizon - 1);
    const auto r = agent.a2c_rollout(env, rng);
    CHECK(r.steps.size() == 1);
    CHECK(r.bootstrap == 0.0);
    CHECK(r.terminated);
  }
  SUBCASE("mid-episode rollout bootstraps from the critic") {
    env.reset(2);
    const auto r = agent.a2c_rollout(env, rng);
    CHECK(r.steps.size() == 3);
    CHECK_FALSE(r.terminated);
    CHECK(r.bootstrap == agent.value(env.observation()));
    CHECK(r.steps[0].observation == obs({1, 1}));
  }
}

TEST_CASE("a2c update losses") {
  Rng init(27);
  auto cfg = dqn_config(Algorithm::kA2c);
  cfg.return_scale = 1.0;
  cfg.optimizer = OptimizerKind::kSgd;
  cfg.learning_rate = 0.1;

  SUBCASE("single terminal step with a zero critic") {
    A2cAgent agent(2, 100, cfg, init);
    std::ranges::fill(agent.net().critic().parameters(), 0.0);
    Rollout r;
    r.steps.push_back(RolloutStep{obs({1, 1}), Action::kNoMaintenance, 1.0});
    r.terminated = true;
    CHECK(agent.value(obs({1, 1})) == 0.0);
    const auto losses = agent.a2c_update(r);
    CHECK(losses.critic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(agent.steps() == 1);
  }
  SUBCASE("zero advantage leaves the actor untouched") {
    cfg.entropy_coeff = 0.0;
    A2cAgent agent(2, 100, cfg, init);
    std::ranges::fill(agent.net().critic().parameters(), 0.0);
    const auto actor = agent.net().actor();
    const auto trunk = agent.net().trunk();
    Rollout r;
    r.steps.push_back(RolloutStep{obs({3, 1}), Action::kSensorsMaintenance, 0.0});
    r.terminated = true;
    const auto losses = agent.a2c_update(r);
    CHECK(losses.actor == 0.0);
    CHECK(agent.net().actor() == actor);
    CHECK(agent.net().trunk() == trunk);
  }
  SUBCASE("non-finite parameters abort the whole update") {
    A2cAgent agent(2, 100, cfg, init);
    agent.net().critic().biases(1)[0] =
        std::numeric_limits<double>::quiet_NaN();
    const auto before = agent.net().flat_parameters();
    Rollout r;
    r.steps.push_back(RolloutStep{obs({1, 2}), Action::kNoMaintenance, 1.0});
    r.terminated = true;
    CHECK_THROWS_AS(agent.a2c_update(r), NumericalError);
    const auto after = agent.net().flat_parameters();
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
      REQUIRE((after[i] == before[i] ||
               (std::isnan(after[i]) && std::isnan(before[i]))));
    }
    CHECK(agent.steps() == 0);
  }
}
