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

#include "aoim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aoim/error.hpp"

namespace aoim {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(std::string(key) + ": expected a real number, got '" +
                      std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(std::string(key) +
                      ": expected a nonnegative integer, got '" +
                      std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" +
                    std::string(text) + "'");
}

void check_probability(std::string_view field, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(field) + " must lie in [0, 1], got " +
                      format_double(p));
  }
}

bool set_scenario_value(ScenarioConfig& c, std::string_view key,
                        std::string_view value) {
  if (key == "num_sensors") {
    c.num_sensors = parse_unsigned(key, value);
  } else if (key == "sensor_chain.p00") {
    c.sensor_chain.p00 = parse_double(key, value);
  } else if (key == "sensor_chain.p11") {
    c.sensor_chain.p11 = parse_double(key, value);
  } else if (key == "network_chain.p00") {
    c.network_chain.p00 = parse_double(key, value);
  } else if (key == "network_chain.p11") {
    c.network_chain.p11 = parse_double(key, value);
  } else if (key == "gen_prob_healthy") {
    c.gen_prob_healthy = parse_double(key, value);
  } else if (key == "gen_prob_faulty") {
    c.gen_prob_faulty = parse_double(key, value);
  } else if (key == "deliver_prob_healthy") {
    c.deliver_prob_healthy = parse_double(key, value);
  } else if (key == "deliver_prob_faulty") {
    c.deliver_prob_faulty = parse_double(key, value);
  } else if (key == "maintenance_costs") {
    std::array<double, 3> costs{};
    std::size_t n = 0;
    std::string_view rest = value;
    while (true) {
      const auto comma = rest.find(',');
      if (n == costs.size()) {
        throw ConfigError("maintenance_costs: expected exactly 3 values");
      }
      costs[n++] = parse_double(key, trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (n != costs.size()) {
      throw ConfigError("maintenance_costs: expected exactly 3 values");
    }
    c.maintenance_costs = costs;
  } else if (key == "weight_cost") {
    c.weight_cost = parse_double(key, value);
  } else if (key == "weight_aoi") {
    c.weight_aoi = parse_double(key, value);
  } else if (key == "horizon") {
    c.horizon = static_cast<std::uint32_t>(parse_unsigned(key, value));
  } else if (key == "aoi_max") {
    c.aoi_max = static_cast<std::uint32_t>(parse_unsigned(key, value));
  } else if (key == "reward_uses_pre_transition_aoi") {
    c.reward_uses_pre_transition_aoi = parse_bool(key, value);
  } else if (key.starts_with("sensor_chain.")) {
    // sensor_chain.<index>.p00 / sensor_chain.<index>.p11
    auto rest = key.substr(13);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos) return false;
    const auto field = rest.substr(dot + 1);
    if (field != "p00" && field != "p11") return false;
    const auto index = parse_unsigned(key, rest.substr(0, dot));
    auto [it, inserted] =
        c.sensor_chain_overrides.try_emplace(index, c.sensor_chain);
    (field == "p00" ? it->second.p00 : it->second.p11) =
        parse_double(key, value);
  } else {
    return false;
  }
  return true;
}

bool set_agent_value(AgentConfig& c, std::string_view key,
                     std::string_view value) {
  if (key == "algorithm") {
    try {
      c.algorithm = parse_algorithm(value);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("algorithm: ") + e.what());
    }
  } else if (key == "discount") {
    c.discount = parse_double(key, value);
  } else if (key == "optimizer") {
    if (value == "adam") {
      c.optimizer = OptimizerKind::kAdam;
    } else if (value == "sgd") {
      c.optimizer = OptimizerKind::kSgd;
    } else {
      throw ConfigError("optimizer: expected adam or sgd, got '" +
                        std::string(value) + "'");
    }
  } else if (key == "learning_rate") {
    c.learning_rate = parse_double(key, value);
  } else if (key == "adam_beta1") {
    c.adam_beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    c.adam_beta2 = parse_double(key, value);
  } else if (key == "adam_epsilon") {
    c.adam_epsilon = parse_double(key, value);
  } else if (key == "grad_clip_norm") {
    c.grad_clip_norm = parse_double(key, value);
  } else if (key == "observation_transform") {
    if (value == "linear") {
      c.observation_transform = ObservationTransform::kLinear;
    } else if (value == "log") {
      c.observation_transform = ObservationTransform::kLog;
    } else {
      throw ConfigError("observation_transform: expected linear or log, got '" +
                        std::string(value) + "'");
    }
  } else if (key == "hidden_units") {
    c.hidden_units = parse_unsigned(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_unsigned(key, value);
  } else if (key == "buffer_capacity") {
    c.buffer_capacity = parse_unsigned(key, value);
  } else if (key == "sync_period") {
    c.sync_period = parse_unsigned(key, value);
  } else if (key == "epsilon_start") {
    c.epsilon_start = parse_double(key, value);
  } else if (key == "epsilon_end") {
    c.epsilon_end = parse_double(key, value);
  } else if (key == "epsilon_decay_steps") {
    c.epsilon_decay_steps = parse_unsigned(key, value);
  } else if (key == "rollout_length") {
    c.rollout_length = parse_unsigned(key, value);
  } else if (key == "return_scale") {
    c.return_scale = parse_double(key, value);
  } else if (key == "entropy_coeff") {
    c.entropy_coeff = parse_double(key, value);
  } else if (key == "critic_tanh") {
    c.critic_tanh = parse_bool(key, value);
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

const TwoStateChain& ScenarioConfig::chain_for_sensor(
    std::size_t sensor) const {
  const auto it = sensor_chain_overrides.find(sensor);
  return it == sensor_chain_overrides.end() ? sensor_chain : it->second;
}

void ScenarioConfig::validate() const {
  if (num_sensors == 0) throw ConfigError("num_sensors must be positive");
  check_probability("sensor_chain.p00", sensor_chain.p00);
  check_probability("sensor_chain.p11", sensor_chain.p11);
  check_probability("network_chain.p00", network_chain.p00);
  check_probability("network_chain.p11", network_chain.p11);
  for (const auto& [index, chain] : sensor_chain_overrides) {
    const auto prefix = "sensor_chain." + std::to_string(index);
    if (index >= num_sensors) {
      throw ConfigError(prefix + ": sensor index out of range for num_sensors=" +
                        std::to_string(num_sensors));
    }
    check_probability(prefix + ".p00", chain.p00);
    check_probability(prefix + ".p11", chain.p11);
  }
  check_probability("gen_prob_healthy", gen_prob_healthy);
  check_probability("gen_prob_faulty", gen_prob_faulty);
  check_probability("deliver_prob_healthy", deliver_prob_healthy);
  check_probability("deliver_prob_faulty", deliver_prob_faulty);
  if (!(gen_prob_healthy > gen_prob_faulty)) {
    throw ConfigError(
        "gen_prob_healthy must exceed gen_prob_faulty (healthy sensors "
        "generate more often)");
  }
  if (!(deliver_prob_healthy > deliver_prob_faulty)) {
    throw ConfigError(
        "deliver_prob_healthy must exceed deliver_prob_faulty (a healthy "
        "network delivers more often)");
  }
  if (maintenance_costs[0] != 0.0) {
    throw ConfigError("maintenance_costs[0] must be 0 (No-maintenance is free)");
  }
  for (double c : maintenance_costs) {
    if (!(c >= 0.0)) throw ConfigError("maintenance_costs must be nonnegative");
  }
  if (!(weight_cost > 0.0)) throw ConfigError("weight_cost must be positive");
  if (!(weight_aoi > 0.0)) throw ConfigError("weight_aoi must be positive");
  if (horizon == 0) throw ConfigError("horizon must be positive");
  if (aoi_max == 0) throw ConfigError("aoi_max must be at least 1");
}

std::string_view algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kDqn:
      return "m-dqn";
    case Algorithm::kBiasedDqn:
      return "m-beg-dqn";
    case Algorithm::kA2c:
      return "m-a2c";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "m-dqn") return Algorithm::kDqn;
  if (name == "m-beg-dqn") return Algorithm::kBiasedDqn;
  if (name == "m-a2c") return Algorithm::kA2c;
  throw UsageError("unknown algorithm '" + std::string(name) +
                   "' (expected m-dqn, m-beg-dqn or m-a2c)");
}

double AgentConfig::effective_return_scale() const {
  return return_scale > 0.0 ? return_scale : 1.0 / (1.0 - discount);
}

void AgentConfig::validate() const {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw ConfigError("discount must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) {
    throw ConfigError("adam_beta1 must lie in [0, 1)");
  }
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam_beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (!(grad_clip_norm >= 0.0)) {
    throw ConfigError("grad_clip_norm must be nonnegative");
  }
  if (hidden_units == 0) throw ConfigError("hidden_units must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (buffer_capacity == 0) {
    throw ConfigError("buffer_capacity must be positive");
  }
  if (sync_period == 0) throw ConfigError("sync_period must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) {
    throw ConfigError("epsilon_start must lie in [0, 1]");
  }
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start)) {
    throw ConfigError("epsilon_end must lie in [0, epsilon_start]");
  }
  if (epsilon_decay_steps == 0) {
    throw ConfigError("epsilon_decay_steps must be positive");
  }
  if (rollout_length == 0) throw ConfigError("rollout_length must be positive");
  if (!(return_scale >= 0.0)) {
    throw ConfigError("return_scale must be nonnegative (0 selects automatic)");
  }
  if (!(entropy_coeff >= 0.0)) {
    throw ConfigError("entropy_coeff must be nonnegative");
  }
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues values;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{}
                                        : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (!values.emplace(std::string(key), std::string(value)).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                        std::string(key) + "'");
    }
  }
  return values;
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [key, value] : values) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

KeyValues to_key_values(const ScenarioConfig& c) {
  KeyValues kv;
  kv["num_sensors"] = std::to_string(c.num_sensors);
  kv["sensor_chain.p00"] = format_double(c.sensor_chain.p00);
  kv["sensor_chain.p11"] = format_double(c.sensor_chain.p11);
  kv["network_chain.p00"] = format_double(c.network_chain.p00);
  kv["network_chain.p11"] = format_double(c.network_chain.p11);
  for (const auto& [index, chain] : c.sensor_chain_overrides) {
    const auto prefix = "sensor_chain." + std::to_string(index);
    kv[prefix + ".p00"] = format_double(chain.p00);
    kv[prefix + ".p11"] = format_double(chain.p11);
  }
  kv["gen_prob_healthy"] = format_double(c.gen_prob_healthy);
  kv["gen_prob_faulty"] = format_double(c.gen_prob_faulty);
  kv["deliver_prob_healthy"] = format_double(c.deliver_prob_healthy);
  kv["deliver_prob_faulty"] = format_double(c.deliver_prob_faulty);
  kv["maintenance_costs"] = format_double(c.maintenance_costs[0]) + "," +
                            format_double(c.maintenance_costs[1]) + "," +
                            format_double(c.maintenance_costs[2]);
  kv["weight_cost"] = format_double(c.weight_cost);
  kv["weight_aoi"] = format_double(c.weight_aoi);
  kv["horizon"] = std::to_string(c.horizon);
  kv["aoi_max"] = std::to_string(c.aoi_max);
  kv["reward_uses_pre_transition_aoi"] =
      c.reward_uses_pre_transition_aoi ? "true" : "false";
  return kv;
}

KeyValues to_key_values(const AgentConfig& c) {
  KeyValues kv;
  kv["algorithm"] = std::string(algorithm_name(c.algorithm));
  kv["discount"] = format_double(c.discount);
  kv["optimizer"] = c.optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  kv["learning_rate"] = format_double(c.learning_rate);
  kv["adam_beta1"] = format_double(c.adam_beta1);
  kv["adam_beta2"] = format_double(c.adam_beta2);
  kv["adam_epsilon"] = format_double(c.adam_epsilon);
  kv["grad_clip_norm"] = format_double(c.grad_clip_norm);
  kv["observation_transform"] =
      c.observation_transform == ObservationTransform::kLog ? "log" : "linear";
  kv["hidden_units"] = std::to_string(c.hidden_units);
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["buffer_capacity"] = std::to_string(c.buffer_capacity);
  kv["sync_period"] = std::to_string(c.sync_period);
  kv["epsilon_start"] = format_double(c.epsilon_start);
  kv["epsilon_end"] = format_double(c.epsilon_end);
  kv["epsilon_decay_steps"] = std::to_string(c.epsilon_decay_steps);
  kv["rollout_length"] = std::to_string(c.rollout_length);
  kv["return_scale"] = format_double(c.return_scale);
  kv["entropy_coeff"] = format_double(c.entropy_coeff);
  kv["critic_tanh"] = c.critic_tanh ? "true" : "false";
  return kv;
}

KeyValues to_key_values(const RunConfig& config) {
  auto kv = to_key_values(config.scenario);
  kv.merge(to_key_values(config.agent));
  return kv;
}

namespace {

void assign(RunConfig& config, std::string_view key, std::string_view value) {
  if (set_scenario_value(config.scenario, key, value)) return;
  if (set_agent_value(config.agent, key, value)) return;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

void set_config_value(RunConfig& config, std::string_view key,
                      std::string_view value) {
  RunConfig updated = config;
  assign(updated, key, value);
  updated.scenario.validate();
  updated.agent.validate();
  config = std::move(updated);
}

RunConfig run_config_from_key_values(const KeyValues& values,
                                     const RunConfig& base) {
  RunConfig config = base;
  // Plain sensor_chain.* first so per-sensor overrides start from it.
  for (const auto& [key, value] : values) {
    if (key == "sensor_chain.p00" || key == "sensor_chain.p11") {
      assign(config, key, value);
    }
  }
  for (const auto& [key, value] : values) {
    if (key == "sensor_chain.p00" || key == "sensor_chain.p11") continue;
    assign(config, key, value);
  }
  config.scenario.validate();
  config.agent.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return run_config_from_key_values(parse_key_values(buf.str()));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << format_key_values(to_key_values(config));
  if (!out) throw IoError("failed writing config file '" + path + "'");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "permanent_faults", "intermittent_network", "intermittent_sensors",
      "intermittent_all"};
  return names;
}

RunConfig preset(std::string_view name) {
  RunConfig config;
  auto& s = config.scenario;
  s.num_sensors = 4;
  s.gen_prob_healthy = 1.0;
  s.gen_prob_faulty = 0.0;
  s.deliver_prob_healthy = 0.99;
  s.deliver_prob_faulty = 0.0;
  s.maintenance_costs = {0.0, 100.0, 100.0};
  s.weight_cost = 1.0;
  s.weight_aoi = 1.0;
  s.horizon = 5000;
  s.aoi_max = 5000;
  s.sensor_chain = {0.999, 1.0};
  s.network_chain = {0.999, 1.0};

  auto& a = config.agent;
  a.discount = 0.999;
  a.learning_rate = 1e-4;
  a.buffer_capacity = 500000;
  a.sync_period = 20000;
  a.epsilon_start = 1.0;
  a.epsilon_end = 0.01;
  a.epsilon_decay_steps = 400000;

  if (name == "permanent_faults") {
  } else if (name == "intermittent_network") {
    s.network_chain.p11 = 0.9;
  } else if (name == "intermittent_sensors") {
    s.sensor_chain.p11 = 0.9;
  } else if (name == "intermittent_all") {
    s.network_chain.p11 = 0.9;
    s.sensor_chain.p11 = 0.9;
  } else {
    throw ConfigError("unknown scenario preset '" + std::string(name) + "'");
  }
  return config;
}

}  // namespace aoim
