#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushsum/adversary.hpp"
#include "pushsum/analysis.hpp"
#include "pushsum/config.hpp"
#include "pushsum/protocol.hpp"

namespace pushsum {

/// Environment variable naming the root for relative output directories.
inline constexpr const char* kOutputRootEnv = "PUSHSUM_OUTPUT_ROOT";

/// Output directory after applying kOutputRootEnv to relative paths.
std::filesystem::path resolve_output_dir(const std::string& dir);

/// Everything computed for one seed, before anything touches the disk.
struct SeedRun {
  std::uint64_t seed = 0;
  Trace trace;
  RunMetrics metrics;
  std::optional<ErgodicityReport> ergodicity;
  AttackReport attack;
};

/// Runs every seed of `config`. Seeds are independent; kParallel spreads them
/// across OpenMP threads, kSerial is the reference loop. Results are ordered by
/// seed position in the config either way.
std::vector<SeedRun> run_seeds(const ExperimentConfig& config, Execution exec,
                               const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

struct ScenarioSummary {
  std::filesystem::path directory;
  nlohmann::json summary;
  bool all_converged = false;
  double exceedance_fraction = 0.0;
};

/// Writes per-seed traces, estimate CSVs, attack and ergodicity reports plus
/// summary.json. Throws ConfigError for an unusable configuration (including
/// a graph that is not strongly connected).
ScenarioSummary run_scenario(const ExperimentConfig& config,
                             const ProtocolRegistry& registry = ProtocolRegistry::with_builtins(),
                             Execution exec = Execution::kParallel);

struct InvariantResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantResult> results;
  bool all_passed() const;
  nlohmann::json to_json() const;
};

/// Tolerances used by the invariant suite.
inline constexpr double kConservationTolerance = 1e-9;     // relative
inline constexpr double kStochasticityTolerance = 1e-12;   // scaled by max(1, column l1 norm)
inline constexpr double kBoundSlack = 1e-12;

/// conservation, column-stochasticity, zero-pattern, replay-consistency,
/// ergodicity-bound.
InvariantReport check_invariants(const Trace& trace,
                                 const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());
/// Throws TraceFormatError naming the first malformed record.
InvariantReport check_invariants(const std::filesystem::path& trace_file,
                                 const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

struct ProtocolComparison {
  std::vector<std::string> protocols;
  std::vector<std::uint64_t> seeds;
  /// x0 used per (protocol, seed).
  std::map<std::string, std::vector<std::vector<double>>> initial_values;
  /// mse[protocol][seed position][k]
  std::map<std::string, std::vector<std::vector<std::optional<double>>>> mse;
  std::filesystem::path csv_path;
};

/// Runs each protocol on the same seeds and initial values and writes
/// mse_comparison.csv (seed,k,mse_<tag>...) and initial_values.csv.
/// Throws ProtocolError for an unregistered tag.
ProtocolComparison compare_protocols(const ExperimentConfig& config,
                                     const std::vector<std::string>& protocols,
                                     const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

/// Shortest round-trip text for a double, used by every CSV writer.
std::string format_number(double v);

void write_estimates_csv(std::ostream& out, const Trace& trace, const RunMetrics& metrics,
                         const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

}  // namespace pushsum
