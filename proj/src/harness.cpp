#include "pushsum/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pushsum/trace_io.hpp"

namespace pushsum {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) { return json(v).dump(); }

fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      return fs::path(root) / p;
    }
  }
  return p;
}

namespace {

struct Prepared {
  Digraph graph;
  std::size_t target = 0;
};

Prepared prepare(const ExperimentConfig& config, const ProtocolRegistry& registry) {
  Prepared p;
  p.graph = resolve_graph(config.graph);
  if (!p.graph.usable_for_protocol()) throw ConfigError("graph", "protocol runs need N > 2");
  if (!is_strongly_connected(p.graph)) {
    throw ConfigError("graph",
                      "digraph is not strongly connected; every node must reach every other");
  }
  if (!registry.contains(config.protocol)) {
    try {
      registry.get(config.protocol);
    } catch (const ProtocolError& e) {
      throw ConfigError("protocol", e.what());
    }
  }
  if (config.target < 1 || config.target > p.graph.size()) {
    throw ConfigError("target", "must name a node in 1.." + std::to_string(p.graph.size()));
  }
  p.target = config.target;
  return p;
}

SeedRun run_one(const ExperimentConfig& config, const Prepared& prep, std::uint64_t seed,
                const ProtocolRegistry& registry) {
  SeedRun r;
  r.seed = seed;
  const auto x0 =
      uniform_initial_values(prep.graph.size(), config.initial.low, config.initial.high, seed);
  r.trace = run_protocol(prep.graph, x0, config.protocol, config.rounds, config.spread, seed,
                         registry);
  r.metrics = run_metrics(r.trace, registry);
  try {
    r.ergodicity = forward_product(r.trace, config.rounds - 1, Execution::kSerial, registry);
  } catch (const AnalysisError&) {
    r.ergodicity.reset();
  }
  r.attack = attack_report(r.trace, eavesdrop(r.trace, NodeId(prep.target)), config.threshold);
  return r;
}

}  // namespace

std::vector<SeedRun> run_seeds(const ExperimentConfig& config, Execution exec,
                               const ProtocolRegistry& registry) {
  const Prepared prep = prepare(config, registry);
  const std::size_t count = config.seeds.size();
  std::vector<SeedRun> runs(count);
  if (exec == Execution::kSerial) {
    for (std::size_t s = 0; s < count; ++s) {
      runs[s] = run_one(config, prep, config.seeds[s], registry);
    }
    return runs;
  }
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long s = 0; s < n; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    try {
      runs[idx] = run_one(config, prep, config.seeds[idx], registry);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

void write_estimates_csv(std::ostream& out, const Trace& trace, const RunMetrics& metrics,
                         const ProtocolRegistry& registry) {
  const Protocol& proto = registry.get(trace.protocol);
  out << "k,node,estimate,abs_error\n";
  for (std::size_t k = 0; k <= trace.rounds.size(); ++k) {
    const auto est = proto.estimates(trace.state_at(k));
    for (std::size_t i = 0; i < est.size(); ++i) {
      out << k << ',' << (i + 1) << ',';
      if (est[i]) out << format_number(*est[i]) << ',' << format_number(std::abs(*est[i] - metrics.mean));
      else out << ',';
      out << '\n';
    }
  }
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ScenarioSummary run_scenario(const ExperimentConfig& config, const ProtocolRegistry& registry,
                             Execution exec) {
  const auto runs = run_seeds(config, exec, registry);
  const std::string hash = config_hash(config);
  const std::string hash_line = "# config_hash: " + hash + "\n";

  ScenarioSummary out;
  out.directory = resolve_output_dir(config.output_dir);
  fs::create_directories(out.directory);

  json seeds = json::array();
  std::size_t converged = 0;
  std::size_t exceeding = 0;
  for (const auto& run : runs) {
    const fs::path dir = out.directory / ("seed-" + std::to_string(run.seed));
    fs::create_directories(dir);

    std::ostringstream trace_text;
    write_trace(trace_text, run.trace, {{"config_hash", hash}});
    write_file(dir / "trace.jsonl", trace_text.str());

    std::ostringstream est;
    est << hash_line;
    write_estimates_csv(est, run.trace, run.metrics, registry);
    write_file(dir / "estimates.csv", est.str());

    json attack = to_json(run.attack);
    attack["config_hash"] = hash;
    const auto post = run.attack.post_transient_exceedances(config.transient);
    attack["post_transient_exceedance_rounds"] = post;
    write_file(dir / "attack.json", attack.dump(2) + "\n");
    std::ostringstream attack_csv;
    attack_csv << hash_line;
    write_attack_csv(attack_csv, run.attack);
    write_file(dir / "attack.csv", attack_csv.str());

    const auto conv = run.metrics.convergence_round(config.tolerance);
    json ergo_summary = {{"config_hash", hash},
                         {"convergence_round", optional_json(conv)},
                         {"epsilon", nullptr},
                         {"final_delta", nullptr}};
    std::ostringstream ergo_csv;
    ergo_csv << hash_line << "k,delta,bound,mse\n";
    if (run.ergodicity) {
      const auto& e = *run.ergodicity;
      ergo_summary["epsilon"] = e.epsilon;
      ergo_summary["final_delta"] = e.final_delta();
      for (std::size_t k = 1; k <= e.delta.size(); ++k) {
        ergo_csv << k << ',' << format_number(e.delta[k - 1]) << ','
                 << format_number(e.bound[k - 1]) << ',';
        if (run.metrics.mse[k]) ergo_csv << format_number(*run.metrics.mse[k]);
        ergo_csv << '\n';
      }
    }
    write_file(dir / "ergodicity.csv", ergo_csv.str());
    write_file(dir / "ergodicity.json", ergo_summary.dump(2) + "\n");

    if (conv) ++converged;
    if (!post.empty()) ++exceeding;
    seeds.push_back({{"seed", run.seed},
                     {"x0", run.trace.x0},
                     {"mean", run.metrics.mean},
                     {"convergence_round", optional_json(conv)},
                     {"final_max_error", optional_json(run.metrics.max_abs_error(config.rounds))},
                     {"final_delta", run.ergodicity ? json(run.ergodicity->final_delta()) : json()},
                     {"attack",
                      {{"target", config.target},
                       {"final_error", optional_json(run.attack.final_error)},
                       {"exceedances", run.attack.exceedance_rounds.size()},
                       {"post_transient_exceedances", post.size()}}}});
  }

  out.all_converged = converged == runs.size();
  out.exceedance_fraction =
      runs.empty() ? 0.0 : static_cast<double>(exceeding) / static_cast<double>(runs.size());
  out.summary = {{"config", to_json(config)},
                 {"config_hash", hash},
                 {"seeds", seeds},
                 {"all_converged", out.all_converged},
                 {"exceedance_fraction", out.exceedance_fraction},
                 {"metadata", {{"generated_at", timestamp_utc()}}}};
  write_file(out.directory / "summary.json", out.summary.dump(2) + "\n");
  return out;
}

// --- Invariants ------------------------------------------------------------------------

bool InvariantReport::all_passed() const {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

json InvariantReport::to_json() const {
  json items = json::array();
  for (const auto& r : results) {
    items.push_back({{"invariant", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  return {{"all_passed", all_passed()}, {"results", items}};
}

namespace {

InvariantResult check_conservation(const Trace& trace, const Protocol& proto) {
  InvariantResult r{"conservation", true, ""};
  std::array<double, 2> expected = proto.conserved_sums(trace.initial);
  double total = 0.0;
  for (double v : trace.x0) total += v;
  const auto n = static_cast<double>(trace.node_count());
  if (trace.protocol == kPushSumTag) expected = {total, n};
  if (trace.protocol == kDecomposedTag) expected = {2.0 * total, 2.0 * n};
  for (std::size_t k = 0; k <= trace.rounds.size(); ++k) {
    const auto sums = proto.conserved_sums(trace.state_at(k));
    for (int l = 0; l < 2; ++l) {
      const double drift = std::abs(sums[l] - expected[l]) / std::max(1.0, std::abs(expected[l]));
      if (drift > kConservationTolerance) {
        r.passed = false;
        r.detail = "component " + std::to_string(l + 1) + " drifts by " + format_number(drift) +
                   " (relative) at round " + std::to_string(k);
        return r;
      }
    }
  }
  return r;
}

InvariantResult check_stochasticity(const Trace& trace) {
  InvariantResult r{"column-stochasticity", true, ""};
  const std::size_t n = trace.node_count();
  for (const auto& rec : trace.rounds) {
    const auto& w = rec.weights;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = w.alpha[i];
      double l1 = std::abs(w.alpha[i]);
      for (std::size_t j = 0; j < n; ++j) {
        sum += w.p(j, i);
        l1 += std::abs(w.p(j, i));
      }
      if (std::abs(sum - 1.0) > kStochasticityTolerance * std::max(1.0, l1)) {
        r.passed = false;
        r.detail = "round " + std::to_string(rec.k) + ", column " + std::to_string(i + 1) +
                   " sums to " + format_number(sum);
        return r;
      }
      if (rec.k == 0) continue;
      const auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
      bool bad = !trace.graph.out_neighbors(i).empty() && !in_open_unit(w.p(i, i));
      for (const std::size_t j : trace.graph.out_neighbors(i)) bad = bad || !in_open_unit(w.p(j, i));
      if (trace.protocol == kDecomposedTag) bad = bad || !in_open_unit(w.alpha[i]);
      if (bad) {
        r.passed = false;
        r.detail = "round " + std::to_string(rec.k) + ", column " + std::to_string(i + 1) +
                   " has a weight outside (0,1)";
        return r;
      }
    }
  }
  return r;
}

InvariantResult check_zero_pattern(const Trace& trace) {
  InvariantResult r{"zero-pattern", true, ""};
  const auto& g = trace.graph;
  const std::size_t n = g.size();
  for (const auto& rec : trace.rounds) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || g.has_edge(j, i) || rec.weights.p(j, i) == 0.0) continue;
        r.passed = false;
        r.detail = "round " + std::to_string(rec.k) + ": weight on non-edge (" +
                   std::to_string(j + 1) + "," + std::to_string(i + 1) + ")";
        return r;
      }
    }
    for (const auto& t : rec.transmitted) {
      if (!g.has_edge(t.to.index(), t.from.index())) {
        r.passed = false;
        r.detail = "round " + std::to_string(rec.k) + ": transmission over non-edge " +
                   std::to_string(t.from.value()) + "->" + std::to_string(t.to.value());
        return r;
      }
    }
  }
  return r;
}

InvariantResult check_replay(const Trace& trace, const ProtocolRegistry& registry) {
  InvariantResult r{"replay-consistency", true, ""};
  // Products must be weight times the sender's exchanged value, nothing else.
  for (std::size_t k = 0; k < trace.rounds.size(); ++k) {
    const auto& x = exchanged_values(trace.state_at(k));
    for (const auto& t : trace.rounds[k].transmitted) {
      const double expect =
          trace.rounds[k].weights.p(t.to.index(), t.from.index()) * x[t.component - 1][t.from.index()];
      if (t.value != expect) {
        r.passed = false;
        r.detail = "round " + std::to_string(k) + ": product " + std::to_string(t.from.value()) +
                   "->" + std::to_string(t.to.value()) + " (l=" + std::to_string(t.component) +
                   ") is not weight x exchanged value";
        return r;
      }
    }
  }
  if (const auto bad = first_replay_mismatch(trace, registry)) {
    r.passed = false;
    r.detail = "round " + std::to_string(*bad) + " does not replay from the recorded weights";
  }
  return r;
}

InvariantResult check_bound(const Trace& trace, const ProtocolRegistry& registry) {
  InvariantResult r{"ergodicity-bound", true, ""};
  if (trace.rounds.size() < 2) {
    r.detail = "skipped: fewer than two rounds";
    return r;
  }
  try {
    const auto rep = forward_product(trace, trace.rounds.size() - 1, Execution::kParallel, registry);
    for (std::size_t k = 0; k < rep.delta.size(); ++k) {
      if (rep.delta[k] > rep.bound[k] + kBoundSlack) {
        r.passed = false;
        r.detail = "delta(T_" + std::to_string(k + 1) + ") = " + format_number(rep.delta[k]) +
                   " exceeds bound " + format_number(rep.bound[k]);
        return r;
      }
    }
    r.detail = "final delta " + format_number(rep.final_delta());
  } catch (const AnalysisError& e) {
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

}  // namespace

InvariantReport check_invariants(const Trace& trace, const ProtocolRegistry& registry) {
  const Protocol& proto = registry.get(trace.protocol);
  InvariantReport rep;
  rep.results.push_back(check_conservation(trace, proto));
  rep.results.push_back(check_stochasticity(trace));
  rep.results.push_back(check_zero_pattern(trace));
  rep.results.push_back(check_replay(trace, registry));
  rep.results.push_back(check_bound(trace, registry));
  return rep;
}

InvariantReport check_invariants(const fs::path& trace_file, const ProtocolRegistry& registry) {
  std::ifstream in(trace_file);
  if (!in) throw TraceFormatError(0, "cannot open " + trace_file.string());
  return check_invariants(read_trace(in), registry);
}

// --- Comparison --------------------------------------------------------------------------

ProtocolComparison compare_protocols(const ExperimentConfig& config,
                                     const std::vector<std::string>& protocols,
                                     const ProtocolRegistry& registry) {
  if (protocols.empty()) throw ConfigError("protocols", "must not be empty");
  for (const auto& tag : protocols) registry.get(tag);

  ProtocolComparison cmp;
  cmp.protocols = protocols;
  cmp.seeds = config.seeds;
  for (const auto& tag : protocols) {
    ExperimentConfig c = config;
    c.protocol = tag;
    const auto runs = run_seeds(c, Execution::kParallel, registry);
    for (const auto& run : runs) {
      cmp.initial_values[tag].push_back(run.trace.x0);
      cmp.mse[tag].push_back(run.metrics.mse);
    }
  }

  const fs::path dir = resolve_output_dir(config.output_dir);
  fs::create_directories(dir);
  const std::string hash_line = "# config_hash: " + config_hash(config) + "\n";

  std::ostringstream csv;
  csv << hash_line << "seed,k";
  for (const auto& tag : protocols) csv << ",mse_" << tag;
  csv << '\n';
  for (std::size_t s = 0; s < cmp.seeds.size(); ++s) {
    for (std::size_t k = 0; k <= config.rounds; ++k) {
      csv << cmp.seeds[s] << ',' << k;
      for (const auto& tag : protocols) {
        csv << ',';
        if (const auto& v = cmp.mse[tag][s][k]) csv << format_number(*v);
      }
      csv << '\n';
    }
  }
  cmp.csv_path = dir / "mse_comparison.csv";
  write_file(cmp.csv_path, csv.str());

  std::ostringstream init;
  init << hash_line << "seed,node,x0\n";
  const auto& reference = cmp.initial_values[protocols.front()];
  for (std::size_t s = 0; s < cmp.seeds.size(); ++s) {
    for (std::size_t i = 0; i < reference[s].size(); ++i) {
      init << cmp.seeds[s] << ',' << (i + 1) << ',' << format_number(reference[s][i]) << '\n';
    }
  }
  write_file(dir / "initial_values.csv", init.str());
  return cmp;
}

}  // namespace pushsum
