// Command-line front end: run, attack, check, compare, gen-graph.
//
// Exit codes: 0 success, 1 invariant failure, 2 configuration or input error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pushsum/adversary.hpp"
#include "pushsum/config.hpp"
#include "pushsum/harness.hpp"
#include "pushsum/trace_io.hpp"

namespace {

using namespace pushsum;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct ConfigFlags {
  std::string config_file;
  std::string scenario;
  std::string graph;
  std::string protocol;
  double spread = 0.0;
  double threshold = 0.0;
  std::size_t rounds = 0;
  std::string seeds;
  std::string out;
  std::size_t target = 0;
  double low = 0.0;
  double high = 0.0;
  bool serial = false;

  CLI::Option* o_spread = nullptr;
  CLI::Option* o_threshold = nullptr;
  CLI::Option* o_rounds = nullptr;
  CLI::Option* o_target = nullptr;
  CLI::Option* o_low = nullptr;
  CLI::Option* o_high = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON experiment config");
    app->add_option("--scenario", scenario, "Preset: default, fig3, fig4, fig5");
    app->add_option("--graph", graph, "\"demo\" or path to a digraph JSON file");
    app->add_option("--protocol", protocol, "Protocol tag");
    o_spread = app->add_option("--M", spread, "Spread parameter M");
    o_threshold = app->add_option("--c", threshold, "Eavesdropper error threshold c");
    o_rounds = app->add_option("--rounds", rounds, "Rounds per run");
    app->add_option("--seed", seeds, "Comma-separated seed list");
    app->add_option("--out", out, "Output directory");
    o_target = app->add_option("--target", target, "Eavesdropper target node (1-based)");
    o_low = app->add_option("--initial-low", low, "Lower end of U(low, high) initial values");
    o_high = app->add_option("--initial-high", high, "Upper end of U(low, high) initial values");
    app->add_flag("--serial", serial, "Run seeds on one thread (reference path)");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!scenario.empty()) c = scenario_preset(scenario);
    if (!config_file.empty()) c = load_config(config_file);
    if (!graph.empty()) {
      if (graph == "demo") c.graph = DemoGraph{};
      else c.graph = GraphFile{graph};
    }
    if (!protocol.empty()) c.protocol = protocol;
    if (o_spread->count()) {
      if (!(spread > 0.0)) throw ConfigError("M", "must be positive");
      c.spread = spread;
    }
    if (o_threshold->count()) {
      if (!(threshold > 0.0)) throw ConfigError("c", "must be positive");
      c.threshold = threshold;
    }
    if (o_rounds->count()) {
      if (rounds < 2) throw ConfigError("rounds", "need at least 2 rounds");
      c.rounds = rounds;
    }
    if (!seeds.empty()) c.seeds = parse_seed_list(seeds);
    if (!out.empty()) c.output_dir = out;
    if (o_target->count()) c.target = target;
    if (o_low->count()) c.initial.low = low;
    if (o_high->count()) c.initial.high = high;
    if (!(c.initial.low < c.initial.high)) throw ConfigError("initial", "low must be below high");
    return c;
  }
};

int cmd_run(const ConfigFlags& flags) {
  const ExperimentConfig config = flags.resolve();
  const auto result =
      run_scenario(config, ProtocolRegistry::with_builtins(),
                   flags.serial ? Execution::kSerial : Execution::kParallel);
  bool ok = true;
  for (const auto& seed : config.seeds) {
    const auto path = result.directory / ("seed-" + std::to_string(seed)) / "trace.jsonl";
    const auto report = check_invariants(path);
    if (!report.all_passed()) {
      ok = false;
      std::cerr << "invariants failed for seed " << seed << ": " << report.to_json().dump() << "\n";
    }
  }
  std::cout << "wrote " << result.directory.string() << "\n"
            << "all seeds converged: " << (result.all_converged ? "yes" : "no") << "\n"
            << "eavesdropper exceedance fraction (post-transient, c=" << config.threshold
            << "): " << result.exceedance_fraction << "\n";
  return ok ? kExitOk : kExitFailure;
}

int cmd_attack(const std::string& trace_file, std::size_t target, double threshold,
               const std::string& out_dir, const std::string& coalition_text) {
  std::ifstream in(trace_file);
  if (!in) throw TraceFormatError(0, "cannot open " + trace_file);
  const Trace trace = read_trace(in);
  const auto report = attack_report(trace, eavesdrop(trace, NodeId(target)), threshold);
  json j = to_json(report);

  if (!coalition_text.empty()) {
    std::vector<NodeId> coalition;
    for (const auto id : parse_seed_list(coalition_text)) coalition.emplace_back(id);
    const auto view = build_coalition_view(trace, coalition);
    const auto horizon = trace.rounds.size() - 1;
    const auto estimate = coalition_reconstruct(view, NodeId(target), horizon);
    j["coalition"] = {{"members", parse_seed_list(coalition_text)},
                      {"horizon", horizon},
                      {"estimate", estimate ? json(*estimate) : json(nullptr)}};
  }

  if (out_dir.empty()) {
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  const auto dir = resolve_output_dir(out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "attack.json") << j.dump(2) << "\n";
  std::ofstream csv(dir / "attack.csv");
  write_attack_csv(csv, report);
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_check(const std::string& trace_file) {
  const auto report = check_invariants(std::filesystem::path(trace_file));
  for (const auto& r : report.results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
  }
  return report.all_passed() ? kExitOk : kExitFailure;
}

int cmd_compare(const ConfigFlags& flags, const std::string& protocols_text) {
  ExperimentConfig config = flags.resolve();
  std::vector<std::string> protocols = config.protocols;
  if (!protocols_text.empty()) {
    protocols.clear();
    std::stringstream ss(protocols_text);
    std::string tag;
    while (std::getline(ss, tag, ',')) {
      if (!tag.empty()) protocols.push_back(tag);
    }
  }
  const auto cmp = compare_protocols(config, protocols);
  std::cout << "wrote " << cmp.csv_path.string() << "\n";
  return kExitOk;
}

int cmd_gen_graph(std::size_t n, double prob, std::uint64_t seed, const std::string& out) {
  const Digraph g = random_strongly_connected(n, prob, seed);
  const std::string text = to_json(g).dump() + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out) << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-sum consensus simulator with privacy attacks"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "Run a scenario and write its output bundle");
  run_flags.attach(run);

  std::string attack_trace, attack_out, attack_coalition;
  std::size_t attack_target = 5;
  double attack_c = 500.0;
  auto* attack = app.add_subcommand("attack", "Run the eavesdropper on a stored trace");
  attack->add_option("--trace", attack_trace, "Trace file (JSON lines)")->required();
  attack->add_option("--target", attack_target, "Target node (1-based)");
  attack->add_option("--c", attack_c, "Error threshold c");
  attack->add_option("--out", attack_out, "Directory for attack.json / attack.csv");
  attack->add_option("--coalition", attack_coalition,
                     "Comma-separated honest-but-curious nodes; adds a reconstruction estimate");

  std::string check_trace;
  auto* check = app.add_subcommand("check", "Check the invariant suite on a stored trace");
  check->add_option("trace", check_trace, "Trace file (JSON lines)")->required();

  ConfigFlags compare_flags;
  std::string compare_protocols_text;
  auto* compare = app.add_subcommand("compare", "Compare MSE curves across protocols");
  compare_flags.attach(compare);
  compare->add_option("--protocols", compare_protocols_text, "Comma-separated protocol tags");

  std::size_t gen_n = 5;
  double gen_prob = 0.3;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-graph", "Generate a random strongly connected digraph");
  gen->add_option("--n", gen_n, "Node count (> 2)");
  gen->add_option("--prob", gen_prob, "Probability of each extra edge");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*attack) {
      return cmd_attack(attack_trace, attack_target, attack_c, attack_out, attack_coalition);
    }
    if (*check) return cmd_check(check_trace);
    if (*compare) return cmd_compare(compare_flags, compare_protocols_text);
    if (*gen) return cmd_gen_graph(gen_n, gen_prob, gen_seed, gen_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TraceFormatError& e) {
    std::cerr << "bad trace: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
