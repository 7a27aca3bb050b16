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

// Exercises the shared library through its C header only.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "aoim/aoim.h"
#include "doctest.h"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

aoim_config* make_config(const char* preset) {
  aoim_config* c = nullptr;
  REQUIRE(aoim_config_preset(preset, &c) == AOIM_OK);
  return c;
}

std::string get(const aoim_config* c, const char* key) {
  char buf[128];
  size_t needed = 0;
  REQUIRE(aoim_config_get(c, key, buf, sizeof buf, &needed) == AOIM_OK);
  return std::string(buf, needed - 1);
}

}  // namespace

TEST_CASE("version and presets") {
  CHECK(std::strlen(aoim_version()) > 0);
  REQUIRE(aoim_preset_count() == 4);
  CHECK(std::string(aoim_preset_name(0)) == "permanent_faults");
  CHECK(aoim_preset_name(4) == nullptr);
  aoim_config* c = nullptr;
  CHECK(aoim_config_preset("unknown", &c) == AOIM_ERR_CONFIG);
  CHECK(c == nullptr);
  CHECK(std::string(aoim_last_error()).find("unknown") != std::string::npos);
}

TEST_CASE("config get, set and persistence") {
  aoim_config* c = make_config("intermittent_network");
  CHECK(get(c, "network_chain.p11") == "0.9");
  CHECK(aoim_config_set(c, "horizon", "77") == AOIM_OK);
  CHECK(get(c, "horizon") == "77");
  CHECK(aoim_config_set(c, "horizon", "-3") == AOIM_ERR_CONFIG);
  CHECK(get(c, "horizon") == "77");
  CHECK(aoim_config_set(c, "no_such_key", "1") == AOIM_ERR_CONFIG);

  char tiny[2];
  size_t needed = 0;
  CHECK(aoim_config_get(c, "learning_rate", tiny, sizeof tiny, &needed) ==
        AOIM_ERR_USAGE);
  CHECK(needed == get(c, "learning_rate").size() + 1);
  CHECK(std::stod(get(c, "learning_rate")) == 1e-4);

  const auto dir = aoim::testing::scratch_dir("capi_config");
  const auto path = (dir / "x.conf").string();
  REQUIRE(aoim_config_save(c, path.c_str()) == AOIM_OK);
  aoim_config* back = nullptr;
  REQUIRE(aoim_config_load(path.c_str(), &back) == AOIM_OK);
  CHECK(get(back, "horizon") == "77");
  CHECK(aoim_config_validate(back) == AOIM_OK);
  CHECK(aoim_config_load((dir / "missing").string().c_str(), &back) ==
        AOIM_ERR_IO);
  aoim_config_free(back);
  aoim_config_free(c);
  aoim_config_free(nullptr);
}

TEST_CASE("environment stepping") {
  aoim_config* c = make_config("permanent_faults");
  REQUIRE(aoim_config_set(c, "horizon", "5") == AOIM_OK);
  aoim_env* env = nullptr;
  REQUIRE(aoim_env_create(c, &env) == AOIM_OK);
  REQUIRE(aoim_env_num_sensors(env) == 4);
  std::vector<uint32_t> aoi(4, 0);
  REQUIRE(aoim_env_reset(env, 3, aoi.data(), aoi.size()) == AOIM_OK);
  CHECK(aoi == std::vector<uint32_t>{1, 1, 1, 1});
  CHECK(aoim_env_reset(env, 3, aoi.data(), 2) == AOIM_ERR_USAGE);

  double reward = 0, total = 0;
  int terminal = 0, steps = 0;
  while (!terminal) {
    REQUIRE(aoim_env_step(env, AOIM_ACTION_NONE, &reward, aoi.data(),
                          aoi.size(), &terminal) == AOIM_OK);
    total += reward;
    ++steps;
  }
  CHECK(steps == 5);
  CHECK(total > 0);
  CHECK(aoim_env_step(env, 0, &reward, aoi.data(), aoi.size(), &terminal) ==
        AOIM_ERR_USAGE);
  CHECK(aoim_env_step(env, 7, &reward, aoi.data(), aoi.size(), &terminal) ==
        AOIM_ERR_USAGE);

  uint8_t sensors[4];
  uint8_t net = 9;
  CHECK(aoim_env_truth(env, sensors, 4, &net) == AOIM_OK);
  CHECK(net <= 1);

  const uint32_t fresh[4] = {1, 1, 1, 1};
  CHECK(aoim_reward(c, AOIM_ACTION_NETWORK, fresh, 4, &reward) == AOIM_OK);
  CHECK(std::abs(reward - 1.0 / 101) < 1e-12);
  aoim_env_free(env);
  aoim_config_free(c);
}

TEST_CASE("training writes sessions, checkpoints and curves") {
  aoim_config* c = make_config("permanent_faults");
  REQUIRE(aoim_config_set(c, "num_sensors", "2") == AOIM_OK);
  REQUIRE(aoim_config_set(c, "horizon", "40") == AOIM_OK);
  const auto dir = aoim::testing::scratch_dir("capi_train");
  aoim_train_options o{};
  o.algorithm = "m-dqn";
  o.sessions = 2;
  o.episodes = 3;
  o.seed = 5;
  o.jobs = 2;
  const std::string out = dir.string();
  o.output_dir = out.c_str();
  int calls = 0;
  auto cb = [](void* user, uint64_t, uint32_t episodes, double, double,
               double) {
    ++*static_cast<int*>(user);
    CHECK(episodes == 3);
  };
  REQUIRE(aoim_train(c, &o, cb, &calls) == AOIM_OK);
  CHECK(calls == 2);
  CHECK(fs::exists(dir / "sessions" / "5.csv"));
  CHECK(fs::exists(dir / "sessions" / "6.csv"));
  CHECK(fs::exists(dir / "curves.csv"));
  CHECK(aoim::testing::read_lines(dir / "sessions" / "6.csv").size() == 4);

  aoim_policy* p = nullptr;
  REQUIRE(aoim_policy_load((dir / "checkpoints" / "5.ckpt").string().c_str(),
                           &p) == AOIM_OK);
  CHECK(aoim_policy_input_size(p) == 2);
  CHECK(std::string(aoim_policy_kind(p)) == "m-dqn");
  const uint32_t aoi[2] = {3, 1};
  int action = -1;
  CHECK(aoim_policy_act(p, aoi, 2, 0, &action) == AOIM_OK);
  CHECK(action >= 0);
  CHECK(action <= 2);
  CHECK(aoim_policy_act(p, aoi, 1, 0, &action) == AOIM_ERR_USAGE);

  double mean = 0, half = -1;
  CHECK(aoim_evaluate_reward(p, c, 3, 1, &mean, &half) == AOIM_OK);
  CHECK(mean > 0);
  CHECK(half >= 0);
  aoim_policy_free(p);

  o.algorithm = "q-learning";
  CHECK(aoim_train(c, &o, nullptr, nullptr) == AOIM_ERR_USAGE);
  CHECK(std::string(aoim_last_error()).find("q-learning") != std::string::npos);
  aoim_config_free(c);
}

TEST_CASE("scripted policies and the TPR study") {
  aoim_config* c = make_config("permanent_faults");
  REQUIRE(aoim_config_set(c, "horizon", "300") == AOIM_OK);
  aoim_policy* never = nullptr;
  REQUIRE(aoim_policy_scripted("never", 4, 0, &never) == AOIM_OK);
  const auto dir = aoim::testing::scratch_dir("capi_tpr");
  const uint32_t th[] = {1, 4, 8, 12, 16, 20};
  const auto csv = (dir / "tpr.csv").string();
  REQUIRE(aoim_evaluate_tpr(never, c, 5, th, 6, 1, csv.c_str()) == AOIM_OK);
  const auto lines = aoim::testing::read_lines(csv);
  CHECK(lines.size() == 19);

  aoim_policy* small = nullptr;
  REQUIRE(aoim_policy_scripted("never", 2, 0, &small) == AOIM_OK);
  CHECK(aoim_evaluate_tpr(small, c, 5, th, 6, 1, csv.c_str()) ==
        AOIM_ERR_USAGE);
  CHECK(std::string(aoim_last_error()).find("2 input") != std::string::npos);

  const auto saved = (dir / "never.ckpt").string();
  REQUIRE(aoim_policy_save(never, saved.c_str()) == AOIM_OK);
  aoim_policy* back = nullptr;
  REQUIRE(aoim_policy_load(saved.c_str(), &back) == AOIM_OK);
  CHECK(std::string(aoim_policy_kind(back)) == "never");
  CHECK(aoim_policy_scripted("oracle", 4, 0, &small) != AOIM_OK);
  aoim_policy_free(back);
  aoim_policy_free(small);
  aoim_policy_free(never);
  aoim_config_free(c);
}
