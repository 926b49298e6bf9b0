#include "pushsum/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pushsum {

using nlohmann::json;

nlohmann::json to_json(const ExperimentConfig& c) {
  json graph = std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, DemoGraph>) {
          return "demo";
        } else if constexpr (std::is_same_v<T, GraphFile>) {
          return {{"file", g.path}};
        } else {
          return {{"generate",
                   {{"n", g.n}, {"extra_edge_prob", g.extra_edge_prob}, {"seed", g.seed}}}};
        }
      },
      c.graph);
  json j = {{"graph", graph},
            {"protocol", c.protocol},
            {"protocols", c.protocols},
            {"initial",
             {{"distribution", "uniform"}, {"low", c.initial.low}, {"high", c.initial.high}}},
            {"M", c.spread},
            {"c", c.threshold},
            {"rounds", c.rounds},
            {"seeds", c.seeds},
            {"output_dir", c.output_dir},
            {"target", c.target},
            {"transient", c.transient},
            {"tolerance", c.tolerance}};
  if (c.offset_rounds) j["L"] = *c.offset_rounds;
  return j;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where.empty() ? key : where + "." + key, "wrong type");
  }
}

double positive(const json& j, const std::string& key) {
  const auto v = get<double>(j, key, "");
  if (!(v > 0.0)) throw ConfigError(key, "must be positive");
  return v;
}

std::size_t count(const json& j, const std::string& key, const std::string& where = "") {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(where.empty() ? key : where + "." + key, "must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

GraphSource graph_from_json(const json& g) {
  if (g.is_string()) {
    if (g.get<std::string>() != "demo") throw ConfigError("graph", "string form must be \"demo\"");
    return DemoGraph{};
  }
  if (!g.is_object() || g.size() != 1) {
    throw ConfigError("graph", "expected \"demo\", {\"file\": ...} or {\"generate\": {...}}");
  }
  if (g.contains("file")) return GraphFile{get<std::string>(g, "file", "graph")};
  if (!g.contains("generate")) throw ConfigError("graph", "unknown graph source");
  const auto& gen = g.at("generate");
  if (!gen.is_object()) throw ConfigError("graph.generate", "must be an object");
  reject_unknown(gen, {"n", "extra_edge_prob", "seed"}, "graph.generate");
  GeneratedGraph out;
  if (gen.contains("n")) out.n = count(gen, "n", "graph.generate");
  if (gen.contains("extra_edge_prob")) {
    out.extra_edge_prob = get<double>(gen, "extra_edge_prob", "graph.generate");
  }
  if (gen.contains("seed")) out.seed = get<std::uint64_t>(gen, "seed", "graph.generate");
  if (out.n <= 2) throw ConfigError("graph.generate.n", "must exceed 2");
  if (!(out.extra_edge_prob >= 0.0 && out.extra_edge_prob <= 1.0)) {
    throw ConfigError("graph.generate.extra_edge_prob", "must lie in [0, 1]");
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  reject_unknown(j, {"graph", "protocol", "protocols", "initial", "M", "c", "rounds", "seeds",
                     "output_dir", "target", "transient", "tolerance", "L"},
                 "");
  ExperimentConfig c;
  if (j.contains("graph")) c.graph = graph_from_json(j.at("graph"));
  if (j.contains("protocol")) c.protocol = get<std::string>(j, "protocol", "");
  if (j.contains("protocols")) {
    c.protocols = get<std::vector<std::string>>(j, "protocols", "");
    if (c.protocols.empty()) throw ConfigError("protocols", "must not be empty");
  }
  if (j.contains("initial")) {
    const auto& init = j.at("initial");
    if (!init.is_object()) throw ConfigError("initial", "must be an object");
    reject_unknown(init, {"distribution", "low", "high"}, "initial");
    if (init.contains("distribution") &&
        get<std::string>(init, "distribution", "initial") != "uniform") {
      throw ConfigError("initial.distribution", "only \"uniform\" is supported");
    }
    if (init.contains("low")) c.initial.low = get<double>(init, "low", "initial");
    if (init.contains("high")) c.initial.high = get<double>(init, "high", "initial");
    if (!(c.initial.low < c.initial.high)) throw ConfigError("initial", "low must be below high");
  }
  if (j.contains("M")) c.spread = positive(j, "M");
  if (j.contains("c")) c.threshold = positive(j, "c");
  if (j.contains("rounds")) {
    c.rounds = count(j, "rounds");
    if (c.rounds < 2) throw ConfigError("rounds", "need at least 2 rounds");
  }
  if (j.contains("seeds")) {
    c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "");
    if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  }
  if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir", "");
  if (j.contains("target")) {
    c.target = count(j, "target");
    if (c.target == 0) throw ConfigError("target", "node ids are 1-based");
  }
  if (j.contains("transient")) c.transient = count(j, "transient");
  if (j.contains("tolerance")) c.tolerance = positive(j, "tolerance");
  if (j.contains("L")) c.offset_rounds = count(j, "L");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("<file>", path + " is not valid JSON");
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig scenario_preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "default" || name == "fig3") {
    c.protocol = "decomposed";
  } else if (name == "fig5") {
    c.protocol = "push_sum";
  } else if (name == "fig4") {
    c.protocols = {"push_sum", "decomposed"};
    c.offset_rounds = 10;
  } else {
    throw ConfigError("scenario", "unknown scenario '" + name +
                                      "' (known: default, fig3, fig4, fig5)");
  }
  c.output_dir = "out/" + name;
  return c;
}

Digraph resolve_graph(const GraphSource& source) {
  return std::visit(
      [](const auto& g) -> Digraph {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, DemoGraph>) {
          return demo_digraph();
        } else if constexpr (std::is_same_v<T, GraphFile>) {
          std::ifstream in(g.path);
          if (!in) throw ConfigError("graph.file", "cannot open " + g.path);
          json j = json::parse(in, nullptr, false);
          if (j.is_discarded()) throw ConfigError("graph.file", g.path + " is not valid JSON");
          try {
            return digraph_from_json(j);
          } catch (const GraphError& e) {
            throw ConfigError("graph.file", e.what());
          }
        } else {
          return random_strongly_connected(g.n, g.extra_edge_prob, g.seed);
        }
      },
      source);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.front() == '-') {
      throw ConfigError("seeds", "'" + item + "' is not a non-negative integer");
    }
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seeds", "no seeds given");
  return seeds;
}

}  // namespace pushsum
