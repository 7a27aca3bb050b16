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

// aoi_maintain: train maintenance agents, evaluate checkpoints and write the
// scenario presets. Built on the C API only.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "aoim/aoim.h"

namespace {

constexpr uint32_t kDeskSessions = 5;
constexpr uint32_t kDeskEpisodes = 30;
constexpr uint32_t kDeskHorizon = 1000;
constexpr uint32_t kPaperSessions = 20;
constexpr uint32_t kPaperEpisodes = 150;
constexpr uint32_t kPaperTprEpisodes = 1000;

struct Failure {
  std::string message;
};

void check(aoim_status s, const std::string& context) {
  if (s != AOIM_OK) throw Failure{context + ": " + aoim_last_error()};
}

struct ConfigDeleter {
  void operator()(aoim_config* c) const { aoim_config_free(c); }
};
struct PolicyDeleter {
  void operator()(aoim_policy* p) const { aoim_policy_free(p); }
};
using ConfigPtr = std::unique_ptr<aoim_config, ConfigDeleter>;
using PolicyPtr = std::unique_ptr<aoim_policy, PolicyDeleter>;

bool is_preset(const std::string& name) {
  for (size_t i = 0; i < aoim_preset_count(); ++i) {
    if (name == aoim_preset_name(i)) return true;
  }
  return false;
}

std::string config_get(const aoim_config* c, const char* key) {
  size_t needed = 0;
  aoim_config_get(c, key, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(aoim_config_get(c, key, buf.data(), buf.size(), &needed), key);
  buf.resize(needed - 1);
  return buf;
}

void config_set(aoim_config* c, const std::string& key,
                const std::string& value) {
  check(aoim_config_set(c, key.c_str(), value.c_str()), "--set " + key);
}

struct ScenarioOptions {
  std::string scenario = "permanent_faults";
  bool paper_scale = false;
  std::optional<uint32_t> horizon;
  std::vector<std::string> overrides;
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& o) {
  cmd->add_option("--scenario", o.scenario,
                  "Preset name or path to a key = value config file")
      ->capture_default_str();
  cmd->add_flag("--paper-scale", o.paper_scale,
                "Keep the preset horizon and use full-length runs");
  cmd->add_option("--horizon", o.horizon, "Episode length in slots");
  cmd->add_option("--set", o.overrides,
                  "Override a config value, key=value (repeatable)");
}

// Loads the scenario, then applies the desk-scale horizon and overrides.
// aoi_max follows the horizon when the two were equal.
ConfigPtr resolve_config(const ScenarioOptions& o) {
  aoim_config* raw = nullptr;
  if (is_preset(o.scenario)) {
    check(aoim_config_preset(o.scenario.c_str(), &raw), "preset");
  } else {
    check(aoim_config_load(o.scenario.c_str(), &raw), o.scenario);
  }
  ConfigPtr config(raw);

  std::optional<uint32_t> horizon = o.horizon;
  if (!horizon && !o.paper_scale) horizon = kDeskHorizon;
  if (horizon) {
    const bool tied =
        config_get(config.get(), "horizon") == config_get(config.get(), "aoi_max");
    config_set(config.get(), "horizon", std::to_string(*horizon));
    if (tied) config_set(config.get(), "aoi_max", std::to_string(*horizon));
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Failure{"--set expects key=value, got '" + kv + "'"};
    }
    config_set(config.get(), kv.substr(0, eq), kv.substr(eq + 1));
  }
  check(aoim_config_validate(config.get()), "configuration");
  return config;
}

uint64_t resolve_seed(const std::optional<uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("AOI_MAINTAIN_SEED")) {
    try {
      size_t used = 0;
      const uint64_t s = std::stoull(env, &used);
      if (used == std::string(env).size()) return s;
    } catch (const std::exception&) {
    }
    throw Failure{std::string("AOI_MAINTAIN_SEED is not an integer: ") + env};
  }
  std::random_device rd;
  const uint64_t s = (static_cast<uint64_t>(rd()) << 32) | rd();
  std::printf("seed: %llu\n", static_cast<unsigned long long>(s));
  return s;
}

std::vector<uint32_t> parse_thresholds(const std::string& text) {
  std::vector<uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const unsigned long v = std::stoul(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(static_cast<uint32_t>(v));
    } catch (const std::exception&) {
      throw Failure{"invalid threshold '" + item + "'"};
    }
  }
  if (out.empty()) throw Failure{"no thresholds given"};
  return out;
}

PolicyPtr load_policy(const std::string& path) {
  aoim_policy* raw = nullptr;
  check(aoim_policy_load(path.c_str(), &raw), path);
  return PolicyPtr(raw);
}

void on_session(void*, uint64_t seed, uint32_t episodes, double first,
                double last, double mean) {
  std::printf(
      "session seed=%llu episodes=%u first=%.6g last=%.6g mean=%.6g\n",
      static_cast<unsigned long long>(seed), episodes, first, last, mean);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information driven IoT maintenance agents"};
  app.require_subcommand(1);

  // train
  ScenarioOptions train_scn;
  std::string algo = "m-beg-dqn";
  std::optional<uint32_t> sessions, episodes;
  std::optional<uint64_t> train_seed;
  uint32_t jobs = 0;
  std::string train_out = "run";
  auto* train = app.add_subcommand("train", "Train agents over several sessions");
  add_scenario_options(train, train_scn);
  train->add_option("--algo", algo, "m-dqn, m-beg-dqn or m-a2c")
      ->capture_default_str();
  train->add_option("--sessions", sessions, "Training sessions")
      ->check(CLI::PositiveNumber);
  train->add_option("--episodes", episodes, "Episodes per session")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_seed, "Base seed; session j uses seed+j");
  train->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  train->add_option("--out", train_out, "Output directory")
      ->capture_default_str();

  // tpr
  ScenarioOptions tpr_scn;
  std::string tpr_ckpt, tpr_out = "tpr.csv", thresholds = "1,4,8,12,16,20";
  std::optional<uint32_t> tpr_episodes;
  std::optional<uint64_t> tpr_seed;
  auto* tpr = app.add_subcommand("tpr", "Fault detection rate by duration");
  add_scenario_options(tpr, tpr_scn);
  tpr->add_option("--checkpoint", tpr_ckpt, "Agent checkpoint")->required();
  tpr->add_option("--episodes", tpr_episodes, "Evaluation episodes")
      ->check(CLI::PositiveNumber);
  tpr->add_option("--thresholds", thresholds, "Comma separated durations")
      ->capture_default_str();
  tpr->add_option("--seed", tpr_seed, "Evaluation seed");
  tpr->add_option("--out", tpr_out, "Output CSV")->capture_default_str();

  // eval-reward
  ScenarioOptions eval_scn;
  std::string eval_ckpt;
  std::optional<uint32_t> eval_episodes;
  std::optional<uint64_t> eval_seed;
  auto* eval = app.add_subcommand("eval-reward",
                                  "Greedy mean episode reward of a checkpoint");
  add_scenario_options(eval, eval_scn);
  eval->add_option("--checkpoint", eval_ckpt, "Agent checkpoint")->required();
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes")
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  // presets
  std::string presets_out = "presets";
  auto* presets = app.add_subcommand("presets", "Write the scenario presets");
  presets->add_option("--out", presets_out, "Output directory")
      ->capture_default_str();

  // baseline
  std::string baseline_kind;
  uint32_t baseline_sensors = 4;
  double baseline_limit = 8;
  std::string baseline_out;
  auto* baseline = app.add_subcommand(
      "baseline", "Write a scripted policy checkpoint for comparisons");
  baseline->add_option("--kind", baseline_kind, "never, random or threshold")
      ->required();
  baseline->add_option("--sensors", baseline_sensors, "Number of sensors")
      ->capture_default_str();
  baseline->add_option("--limit", baseline_limit,
                       "AoI limit of the threshold rule")
      ->capture_default_str();
  baseline->add_option("--out", baseline_out, "Output checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      ConfigPtr config = resolve_config(train_scn);
      aoim_train_options opts{};
      opts.algorithm = algo.c_str();
      opts.sessions = sessions.value_or(train_scn.paper_scale ? kPaperSessions
                                                              : kDeskSessions);
      opts.episodes = episodes.value_or(train_scn.paper_scale ? kPaperEpisodes
                                                              : kDeskEpisodes);
      opts.seed = resolve_seed(train_seed);
      opts.jobs = jobs;
      opts.output_dir = train_out.c_str();
      const aoim_status s = aoim_train(config.get(), &opts, on_session, nullptr);
      if (s == AOIM_ERR_USAGE) {
        std::fprintf(stderr, "error: %s\n%s", aoim_last_error(),
                     train->help().c_str());
        return 2;
      }
      check(s, "train");
    } else if (*tpr) {
      ConfigPtr config = resolve_config(tpr_scn);
      PolicyPtr policy = load_policy(tpr_ckpt);
      const auto th = parse_thresholds(thresholds);
      const uint32_t n = tpr_episodes.value_or(
          tpr_scn.paper_scale ? kPaperTprEpisodes : kDeskEpisodes);
      check(aoim_evaluate_tpr(policy.get(), config.get(), n, th.data(),
                              th.size(), resolve_seed(tpr_seed),
                              tpr_out.c_str()),
            "tpr");
      std::printf("wrote %s\n", tpr_out.c_str());
    } else if (*eval) {
      ConfigPtr config = resolve_config(eval_scn);
      PolicyPtr policy = load_policy(eval_ckpt);
      const uint32_t n = eval_episodes.value_or(
          eval_scn.paper_scale ? kPaperEpisodes : kDeskEpisodes);
      double mean = 0.0, half = 0.0;
      check(aoim_evaluate_reward(policy.get(), config.get(), n,
                                 resolve_seed(eval_seed), &mean, &half),
            "eval-reward");
      std::printf("mean_reward=%.9g ci95_half_width=%.9g episodes=%u\n", mean,
                  half, n);
    } else if (*presets) {
      std::error_code ec;
      std::filesystem::create_directories(presets_out, ec);
      if (ec) throw Failure{presets_out + ": " + ec.message()};
      for (size_t i = 0; i < aoim_preset_count(); ++i) {
        const std::string name = aoim_preset_name(i);
        aoim_config* raw = nullptr;
        check(aoim_config_preset(name.c_str(), &raw), name);
        ConfigPtr config(raw);
        const auto path =
            (std::filesystem::path(presets_out) / (name + ".conf")).string();
        check(aoim_config_save(config.get(), path.c_str()), path);
        std::printf("wrote %s\n", path.c_str());
      }
    } else if (*baseline) {
      aoim_policy* raw = nullptr;
      check(aoim_policy_scripted(baseline_kind.c_str(), baseline_sensors,
                                 baseline_limit, &raw),
            "baseline");
      PolicyPtr policy(raw);
      check(aoim_policy_save(policy.get(), baseline_out.c_str()), baseline_out);
      std::printf("wrote %s\n", baseline_out.c_str());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return 1;
  }
  return 0;
}
