#include "stubborn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "stubborn/errors.hpp"

namespace stubborn {

using nlohmann::json;

namespace {

template <typename T>
T as(const std::string& key, const json& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has a value of the wrong type: " + v.dump());
  }
}

FixedHandicaps& fixed(RunConfig& c) {
  if (!std::holds_alternative<FixedHandicaps>(c.env.handicap_mode)) c.env.handicap_mode = FixedHandicaps{};
  return std::get<FixedHandicaps>(c.env.handicap_mode);
}

RandomizedHandicaps& randomized(RunConfig& c) {
  if (!std::holds_alternative<RandomizedHandicaps>(c.env.handicap_mode)) {
    c.env.handicap_mode = RandomizedHandicaps{};
  }
  return std::get<RandomizedHandicaps>(c.env.handicap_mode);
}

AveragedBase& averaged(RunConfig& c) {
  if (!std::holds_alternative<AveragedBase>(c.probe.base_mode)) c.probe.base_mode = AveragedBase{};
  return std::get<AveragedBase>(c.probe.base_mode);
}

// Handicap and probe-base parameters are remembered across mode switches so
// key order in a file does not matter.
struct Pending {
  FixedHandicaps fixed;
  RandomizedHandicaps randomized;
  AveragedBase averaged;
};

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"env.turns_per_episode",
       [](RunConfig& c, const std::string& k, const json& v) { c.env.turns_per_episode = as<int>(k, v); }},
      {"env.reward_low",
       [](RunConfig& c, const std::string& k, const json& v) { c.env.reward_low = as<double>(k, v); }},
      {"env.reward_high",
       [](RunConfig& c, const std::string& k, const json& v) { c.env.reward_high = as<double>(k, v); }},
      {"env.handicap_mode",
       [](RunConfig& c, const std::string& k, const json& v) {
         const auto mode = as<std::string>(k, v);
         if (mode == "fixed") {
           fixed(c);
         } else if (mode == "randomized") {
           randomized(c);
         } else {
           throw ConfigError("config key 'env.handicap_mode' must be \"fixed\" or \"randomized\"");
         }
       }},
      {"env.handicap_a",
       [](RunConfig& c, const std::string& k, const json& v) { fixed(c).a = as<double>(k, v); }},
      {"env.handicap_b",
       [](RunConfig& c, const std::string& k, const json& v) { fixed(c).b = as<double>(k, v); }},
      {"env.handicap_min",
       [](RunConfig& c, const std::string& k, const json& v) { randomized(c).min = as<double>(k, v); }},
      {"env.handicap_max",
       [](RunConfig& c, const std::string& k, const json& v) { randomized(c).max = as<double>(k, v); }},
      {"env.observe_own_handicap",
       [](RunConfig& c, const std::string& k, const json& v) { c.env.observe_own_handicap = as<bool>(k, v); }},
      {"env.strict_observation",
       [](RunConfig& c, const std::string& k, const json& v) { c.env.strict_observation = as<bool>(k, v); }},
      {"train.generations",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.generations = as<int>(k, v); }},
      {"train.episodes_per_generation",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.episodes_per_generation = as<int>(k, v);
       }},
      {"train.gamma", [](RunConfig& c, const std::string& k, const json& v) { c.train.gamma = as<double>(k, v); }},
      {"train.gae_lambda",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.gae_lambda = as<double>(k, v); }},
      {"train.clip", [](RunConfig& c, const std::string& k, const json& v) { c.train.clip = as<double>(k, v); }},
      {"train.learning_rate",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.learning_rate = as<double>(k, v); }},
      {"train.epochs_per_generation",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.epochs_per_generation = as<int>(k, v);
       }},
      {"train.minibatch_count",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.minibatch_count = as<int>(k, v); }},
      {"train.entropy_coefficient",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.entropy_coefficient = as<double>(k, v);
       }},
      {"train.value_coefficient",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.value_coefficient = as<double>(k, v);
       }},
      {"train.hidden", [](RunConfig& c, const std::string& k, const json& v) { c.train.hidden = as<int>(k, v); }},
      {"train.seeds",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array of integers");
         c.train.seeds.clear();
         for (const auto& s : v) c.train.seeds.push_back(as<std::uint64_t>(k, s));
       }},
      {"train.probe_interval",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.probe_interval = as<int>(k, v); }},
      {"train.checkpoint_interval",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.checkpoint_interval = as<int>(k, v);
       }},
      {"train.write_traces",
       [](RunConfig& c, const std::string& k, const json& v) { c.train.write_traces = as<bool>(k, v); }},
      {"probe.n_values",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array of integers");
         c.probe.n_values.clear();
         for (const auto& n : v) c.probe.n_values.push_back(as<int>(k, n));
       }},
      {"probe.d_values",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array of numbers");
         c.probe.d_values.clear();
         for (const auto& d : v) c.probe.d_values.push_back(as<double>(k, d));
       }},
      {"probe.base_mode",
       [](RunConfig& c, const std::string& k, const json& v) {
         const auto mode = as<std::string>(k, v);
         if (mode == "symmetric") {
           c.probe.base_mode = SymmetricBase{};
         } else if (mode == "averaged") {
           averaged(c);
         } else {
           throw ConfigError("config key 'probe.base_mode' must be \"symmetric\" or \"averaged\"");
         }
       }},
      {"probe.samples",
       [](RunConfig& c, const std::string& k, const json& v) { averaged(c).samples = as<int>(k, v); }},
      {"probe.mirror",
       [](RunConfig& c, const std::string& k, const json& v) { c.probe.mirror = as<bool>(k, v); }},
      {"run.seed",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.train.seeds = {as<std::uint64_t>(k, v)};
       }},
      {"run.out",
       [](RunConfig& c, const std::string& k, const json& v) { c.out = as<std::string>(k, v); }},
      {"run.jobs", [](RunConfig& c, const std::string& k, const json& v) { c.train.jobs = as<int>(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  train.validate();
  probe.validate();
  if (out.empty()) throw ConfigError("run.out must not be empty");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_key(RunConfig& config, const std::string& key, const json& value) {
  for (const auto& [name, set] : setters()) {
    if (name == key) {
      set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

json parse_flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
  }
  if (text.find(',') != std::string::npos) {
    json arr = json::array();
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) arr.push_back(parse_flag_value(item));
    return arr;
  }
  return text;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a flat JSON object of dotted keys");
  // Modes first so that their parameters land in the right variant.
  for (const char* mode_key : {"env.handicap_mode", "probe.base_mode"}) {
    if (j.contains(mode_key)) apply_key(config, mode_key, j.at(mode_key));
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "env.handicap_mode" || key == "probe.base_mode") continue;
    apply_key(config, key, value);
  }
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["env.turns_per_episode"] = c.env.turns_per_episode;
  j["env.reward_low"] = c.env.reward_low;
  j["env.reward_high"] = c.env.reward_high;
  if (const auto* f = std::get_if<FixedHandicaps>(&c.env.handicap_mode)) {
    j["env.handicap_mode"] = "fixed";
    j["env.handicap_a"] = f->a;
    j["env.handicap_b"] = f->b;
  } else {
    const auto& r = std::get<RandomizedHandicaps>(c.env.handicap_mode);
    j["env.handicap_mode"] = "randomized";
    j["env.handicap_min"] = r.min;
    j["env.handicap_max"] = r.max;
  }
  j["env.observe_own_handicap"] = c.env.observe_own_handicap;
  j["env.strict_observation"] = c.env.strict_observation;
  j["train.generations"] = c.train.generations;
  j["train.episodes_per_generation"] = c.train.episodes_per_generation;
  j["train.gamma"] = c.train.gamma;
  j["train.gae_lambda"] = c.train.gae_lambda;
  j["train.clip"] = c.train.clip;
  j["train.learning_rate"] = c.train.learning_rate;
  j["train.epochs_per_generation"] = c.train.epochs_per_generation;
  j["train.minibatch_count"] = c.train.minibatch_count;
  j["train.entropy_coefficient"] = c.train.entropy_coefficient;
  j["train.value_coefficient"] = c.train.value_coefficient;
  j["train.hidden"] = c.train.hidden;
  j["train.seeds"] = c.train.seeds;
  j["train.probe_interval"] = c.train.probe_interval;
  j["train.checkpoint_interval"] = c.train.checkpoint_interval;
  j["train.write_traces"] = c.train.write_traces;
  j["probe.n_values"] = c.probe.n_values;
  j["probe.d_values"] = c.probe.d_values;
  if (const auto* a = std::get_if<AveragedBase>(&c.probe.base_mode)) {
    j["probe.base_mode"] = "averaged";
    j["probe.samples"] = a->samples;
  } else {
    j["probe.base_mode"] = "symmetric";
  }
  j["probe.mirror"] = c.probe.mirror;
  j["run.out"] = c.out.string();
  j["run.jobs"] = c.train.jobs;
  return j;
}

}  // namespace stubborn
