#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pushsum/graph.hpp"

namespace pushsum {

/// Configuration problem; `field()` names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DemoGraph {
  friend bool operator==(const DemoGraph&, const DemoGraph&) = default;
};
struct GraphFile {
  std::string path;
  friend bool operator==(const GraphFile&, const GraphFile&) = default;
};
struct GeneratedGraph {
  std::size_t n = 5;
  double extra_edge_prob = 0.3;
  std::uint64_t seed = 1;
  friend bool operator==(const GeneratedGraph&, const GeneratedGraph&) = default;
};
using GraphSource = std::variant<DemoGraph, GraphFile, GeneratedGraph>;

struct InitialDistribution {
  double low = 0.0;
  double high = 50.0;
  friend bool operator==(const InitialDistribution&, const InitialDistribution&) = default;
};

/// Experiment definition. JSON schema (all keys optional, unknown keys rejected):
///   graph:     "demo" | {"file": path} | {"generate": {n, extra_edge_prob, seed}}
///   protocol:  registered tag (default "decomposed")
///   protocols: tags for comparisons (default ["push_sum", "decomposed"])
///   initial:   {"distribution": "uniform", "low": 0, "high": 50}
///   M: 100, c: 500, rounds: 500, seeds: [1, 2, 3], output_dir: "out",
///   target: 5, transient: 50, tolerance: 1e-8,
///   L: 10 (accepted for plug-in baselines, unused by built-ins)
struct ExperimentConfig {
  GraphSource graph = DemoGraph{};
  std::string protocol = "decomposed";
  std::vector<std::string> protocols = {"push_sum", "decomposed"};
  InitialDistribution initial;
  double spread = 100.0;     // M
  double threshold = 500.0;  // c
  std::size_t rounds = 500;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "out";
  std::size_t target = 5;
  std::size_t transient = 50;
  double tolerance = 1e-8;
  std::optional<std::size_t> offset_rounds;  // L

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Throws ConfigError with the failing field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Named presets: "default", "fig3", "fig4", "fig5".
ExperimentConfig scenario_preset(const std::string& name);

Digraph resolve_graph(const GraphSource& source);

/// Parses "1,2,3" into seeds; throws ConfigError("seeds", ...).
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace pushsum
