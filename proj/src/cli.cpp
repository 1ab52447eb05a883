#include "stubborn/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "stubborn/chart.hpp"
#include "stubborn/config.hpp"
#include "stubborn/errors.hpp"
#include "stubborn/probe.hpp"
#include "stubborn/telemetry.hpp"
#include "stubborn/trainer.hpp"

namespace stubborn {

namespace fs = std::filesystem;

PolicySpec parse_policy(const std::string& text) {
  if (text == "left") return AlwaysLeft{};
  if (text == "right") return AlwaysRight{};
  if (text == "uniform") return UniformRandom{};
  if (text == "greedy") return GreedyEstimate{};
  if (text.rfind("ckpt:", 0) == 0) return Learned{load_checkpoint(text.substr(5))};
  if (text.rfind("stubborn", 0) == 0) {
    ThresholdStubborn s;
    const auto first = text.find(':');
    if (first != std::string::npos) {
      const auto second = text.find(':', first + 1);
      try {
        s.k = std::stoi(text.substr(first + 1, second - first - 1));
        if (second != std::string::npos) s.margin = std::stod(text.substr(second + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad stubborn policy '" + text + "', expected stubborn:K:MARGIN");
      }
    }
    if (s.k < 0 || !(s.margin >= 0.0)) throw ConfigError("stubborn policy needs k >= 0 and margin >= 0");
    return s;
  }
  throw ConfigError("unknown policy '" + text +
                    "' (expected left|right|uniform|greedy|stubborn:K:MARGIN|ckpt:PATH)");
}

namespace {

// Flags shared by every subcommand: --config, --set and one --<key> per config key.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string handicap;
  CLI::Option* handicap_opt = nullptr;
  bool mirror = false;
  CLI::Option* mirror_opt = nullptr;

  void attach(CLI::App* app, bool episodes_alias = true) {
    app->add_option("--config", config_file, "JSON file of dotted config keys");
    app->add_option("--set", sets, "Override a config key, KEY=VALUE (repeatable)");
    for (const auto& key : config_keys()) {
      options[key] = app->add_option("--" + key, values[key])->group("Config keys");
    }
    const std::pair<const char*, const char*> aliases[] = {
        {"--seed", "run.seed"},
        {"--out", "run.out"},
        {"--jobs", "run.jobs"},
        {"--generations", "train.generations"},
        {"--episodes", "train.episodes_per_generation"},
        {"--turns", "env.turns_per_episode"},
        {"--n", "probe.n_values"},
        {"--d", "probe.d_values"},
    };
    for (const auto& [flag, key] : aliases) {
      if (!episodes_alias && std::string(flag) == "--episodes") continue;
      alias_values[key] = std::make_unique<std::string>();
      alias_options[key] = app->add_option(flag, *alias_values[key], std::string("Same as --") + key);
    }
    handicap_opt = app->add_option("--handicap", handicap, "Set both fixed handicaps");
    mirror_opt = app->add_flag("--mirror", mirror, "Same as --probe.mirror true");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);

    std::vector<std::pair<std::string, nlohmann::json>> overrides;
    for (const auto& key : config_keys()) {
      if (options.at(key)->count() > 0) overrides.emplace_back(key, parse_flag_value(values.at(key)));
      if (auto it = alias_options.find(key); it != alias_options.end() && it->second->count() > 0) {
        overrides.emplace_back(key, parse_flag_value(*alias_values.at(key)));
      }
    }
    if (handicap_opt->count() > 0) {
      overrides.emplace_back("env.handicap_mode", "fixed");
      overrides.emplace_back("env.handicap_a", parse_flag_value(handicap));
      overrides.emplace_back("env.handicap_b", parse_flag_value(handicap));
    }
    if (mirror_opt->count() > 0) overrides.emplace_back("probe.mirror", true);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), parse_flag_value(s.substr(eq + 1)));
    }
    // A single value for a list key becomes a one-element list.
    for (auto& [key, value] : overrides) {
      if ((key == "probe.n_values" || key == "probe.d_values" || key == "train.seeds") &&
          !value.is_array()) {
        value = nlohmann::json::array({value});
      }
    }
    for (const char* mode : {"env.handicap_mode", "probe.base_mode"}) {
      for (const auto& [key, value] : overrides) {
        if (key == mode) apply_key(cfg, key, value);
      }
    }
    for (const auto& [key, value] : overrides) {
      if (key != "env.handicap_mode" && key != "probe.base_mode") apply_key(cfg, key, value);
    }
    cfg.validate();
    return cfg;
  }

  std::map<std::string, std::unique_ptr<std::string>> alias_values;
  std::map<std::string, CLI::Option*> alias_options;
};

std::uint64_t run_seed(const RunConfig& cfg) { return cfg.train.seeds.front(); }

int cmd_train(const ConfigFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  fs::create_directories(cfg.out);
  write_text_file(cfg.out / "config.resolved", to_json(cfg).dump(2) + "\n");

  const bool multi = cfg.train.seeds.size() > 1;
  for (std::uint64_t seed : cfg.train.seeds) {
    const fs::path dir = multi ? cfg.out / ("seed-" + std::to_string(seed)) : cfg.out;
    const int every = std::max(1, cfg.train.generations / 10);
    auto progress = [&](const GenerationReport& r, const MetricsRow&) {
      if (r.generation % every == 0 || r.generation + 1 == cfg.train.generations) {
        out << "seed " << seed << " generation " << r.generation
            << " mean_episode_reward " << format_real(r.mean_episode_reward) << " agreement_rate "
            << format_real(r.agreement_rate) << '\n';
      }
    };
    train(cfg.env, cfg.train, cfg.probe, seed, dir, progress);
    out << "wrote " << dir.string() << '\n';
  }
  return kExitOk;
}

struct ProbeArgs {
  std::string ckpt_a, ckpt_b, policy, policy_a, policy_b;
};

int cmd_probe(const ConfigFlags& flags, const ProbeArgs& args, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  auto pick = [&](const std::string& ckpt, const std::string& specific) -> std::string {
    if (!ckpt.empty()) return "ckpt:" + ckpt;
    if (!specific.empty()) return specific;
    return args.policy;
  };
  const std::string a = pick(args.ckpt_a, args.policy_a);
  const std::string b = pick(args.ckpt_b, args.policy_b);
  if (a.empty() || b.empty()) {
    throw ConfigError("probe needs --ckpt-a/--ckpt-b, --policy-a/--policy-b or --policy");
  }
  const PolicySpec policy_a = parse_policy(a);
  const PolicySpec policy_b = parse_policy(b);
  const ZetaMatrix z = zeta_sweep(policy_a, policy_b, cfg.probe, cfg.env);

  write_zeta_csv(z, cfg.out / "zeta.csv");
  ZetaBars bars{cfg.probe.n_values, cfg.probe.d_values, {}};
  for (Agent agent : {Agent::A, Agent::B}) {
    for (const auto& e : z.entries[agent]) bars.values[agent].push_back(e.zeta);
  }
  write_text_file(cfg.out / "zeta_bars.svg", zeta_bars_svg(bars));

  out << "agent,n,d,zeta\n";
  for (Agent agent : {Agent::A, Agent::B}) {
    for (const auto& e : z.entries[agent]) {
      out << (agent == Agent::A ? 'a' : 'b') << ',' << e.n << ',' << e.d << ','
          << format_real(e.zeta) << '\n';
    }
  }
  return kExitOk;
}

struct EvalArgs {
  std::string policy_a = "greedy";
  std::string policy_b = "greedy";
  int episodes = 1000;
};

int cmd_eval(const ConfigFlags& flags, const EvalArgs& args, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  if (args.episodes < 1) throw ConfigError("--episodes must be >= 1");
  const Actor a = make_actor(parse_policy(args.policy_a));
  const Actor b = make_actor(parse_policy(args.policy_b));
  const std::uint64_t base = derive_seed(run_seed(cfg), "eval");

  TraceSink sink(cfg.out / "traces-eval.jsonl");
  std::vector<TraceRecord> records;
  records.reserve(static_cast<std::size_t>(args.episodes) * cfg.env.turns_per_episode);
  for (int e = 0; e < args.episodes; ++e) {
    const EpisodeTrace t = run_episode(cfg.env, episode_seed(base, e), a, b);
    for (const auto& turn : t.turns) {
      records.push_back({e, 0, turn});
      append_trace(sink, records.back());
    }
    sink.end_episode();
  }

  const TraceSummary s = summarize(records);
  double paid = 0.0;
  int paid_skirmishes = 0;
  std::map<int, int> lengths;
  for (const auto& r : records) {
    if (r.turn.event != Event::Disagree) {
      paid += r.turn.reward;
      ++paid_skirmishes;
      ++lengths[r.turn.turn_in_skirmish + 1];
    } else if (r.turn.turn_index + 1 == cfg.env.turns_per_episode) {
      ++lengths[r.turn.turn_in_skirmish + 1];  // cut off by the episode end
    }
  }

  out << "policies " << args.policy_a << " vs " << args.policy_b << ", " << s.episodes
      << " episodes\n";
  out << "mean_episode_reward " << format_real(s.mean_episode_reward) << '\n';
  out << "mean_skirmish_reward "
      << format_real(paid_skirmishes > 0 ? paid / paid_skirmishes : 0.0) << '\n';
  out << "agreement_rate " << format_real(s.agreement_rate) << '\n';
  out << "mean_skirmish_length " << format_real(s.mean_skirmish_length) << '\n';
  out << "skirmish_length_histogram\n";
  for (const auto& [len, count] : lengths) out << "  " << len << ' ' << count << '\n';
  return kExitOk;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  return paths;
}

int cmd_analyze(const std::string& pattern, const std::string& metrics_arg, std::ostream& out,
                std::ostream& err) {
  const auto files = expand_glob(pattern);
  if (files.empty()) {
    err << "analyze: no trace files match '" << pattern << "'\n";
    return kExitUsage;
  }
  const fs::path metrics_file =
      metrics_arg.empty() ? files.front().parent_path() / "metrics.csv" : fs::path(metrics_arg);
  const CsvTable table = read_csv(metrics_file);
  const auto gen_col = table.column("generation");
  if (!gen_col) throw FormatError(metrics_file.string() + " has no generation column");
  std::map<int, const std::vector<std::string>*> by_generation;
  for (const auto& row : table.rows) by_generation[std::stoi(row.at(*gen_col))] = &row;

  int checked = 0;
  int mismatches = 0;
  long skirmishes = 0;
  long turns = 0;
  for (const auto& file : files) {
    const auto records = read_traces(file);
    // Group by generation, keeping file order within each.
    std::map<int, std::vector<TraceRecord>> groups;
    for (const auto& r : records) groups[r.generation].push_back(r);
    for (const auto& [gen, recs] : groups) {
      const TraceSummary s = summarize(recs);
      skirmishes += s.skirmishes;
      turns += s.turns;
      const auto it = by_generation.find(gen);
      if (it == by_generation.end()) {
        out << "MISMATCH generation " << gen << ": no row in " << metrics_file.string() << '\n';
        ++mismatches;
        continue;
      }
      const std::pair<const char*, double> fields[] = {
          {"mean_episode_reward", s.mean_episode_reward},
          {"mean_skirmish_length", s.mean_skirmish_length},
          {"agreement_rate", s.agreement_rate},
      };
      for (const auto& [name, recomputed] : fields) {
        const auto col = table.column(name);
        if (!col) throw FormatError(metrics_file.string() + " has no " + name + " column");
        const std::string& stored = it->second->at(*col);
        if (stored != format_real(recomputed)) {
          out << "MISMATCH generation " << gen << ' ' << name << ": metrics " << stored
              << ", traces " << format_real(recomputed) << '\n';
          ++mismatches;
        }
      }
      ++checked;
    }
  }
  out << "generations checked " << checked << ", skirmishes " << skirmishes << ", turns " << turns
      << ", mean skirmish length "
      << format_real(skirmishes > 0 ? static_cast<double>(turns) / skirmishes : 0.0) << '\n';
  if (mismatches > 0) {
    out << mismatches << " mismatch(es)\n";
    return kExitMismatch;
  }
  out << "OK\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stubborn: two-agent cooperative game lab"};
  app.name(args.empty() ? "stubborn" : args.front());
  app.require_subcommand(1);

  ConfigFlags train_flags, probe_flags, eval_flags;
  auto* train_cmd = app.add_subcommand("train", "Self-play training of two learned policies");
  train_flags.attach(train_cmd);

  auto* probe_cmd = app.add_subcommand("probe", "Measure zeta(n, d) for a pair of policies");
  probe_flags.attach(probe_cmd);
  ProbeArgs probe_args;
  probe_cmd->add_option("--ckpt-a", probe_args.ckpt_a, "Checkpoint for agent A");
  probe_cmd->add_option("--ckpt-b", probe_args.ckpt_b, "Checkpoint for agent B");
  probe_cmd->add_option("--policy", probe_args.policy, "Policy for both agents");
  probe_cmd->add_option("--policy-a", probe_args.policy_a, "Policy for agent A");
  probe_cmd->add_option("--policy-b", probe_args.policy_b, "Policy for agent B");

  auto* eval_cmd = app.add_subcommand("eval", "Roll out a policy pairing and report rewards");
  eval_flags.attach(eval_cmd, false);
  EvalArgs eval_args;
  eval_cmd->add_option("--policy-a", eval_args.policy_a, "Policy for agent A");
  eval_cmd->add_option("--policy-b", eval_args.policy_b, "Policy for agent B");
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episodes to play");

  auto* analyze_cmd = app.add_subcommand("analyze", "Recompute metrics from traces and verify them");
  std::string pattern, metrics_path;
  analyze_cmd->add_option("traces", pattern, "Glob of trace files")->required();
  analyze_cmd->add_option("--metrics", metrics_path, "metrics.csv (default: next to the traces)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*probe_cmd) return cmd_probe(probe_flags, probe_args, out);
    if (*eval_cmd) return cmd_eval(eval_flags, eval_args, out);
    if (*analyze_cmd) return cmd_analyze(pattern, metrics_path, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace stubborn
