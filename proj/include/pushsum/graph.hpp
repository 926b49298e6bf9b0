#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pushsum {

/// 1-based node identifier as used on every external surface.
/// Storage is 0-based; use index() to address vectors.
class NodeId {
 public:
  constexpr NodeId() = default;
  constexpr explicit NodeId(std::size_t one_based) : id_(one_based) {}

  static constexpr NodeId from_index(std::size_t zero_based) { return NodeId(zero_based + 1); }

  constexpr std::size_t value() const { return id_; }
  constexpr std::size_t index() const { return id_ - 1; }

  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  std::size_t id_ = 0;
};

/// Directed edge (receiver, sender): node `sender` can push to node `receiver`.
struct Edge {
  NodeId receiver;
  NodeId sender;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Immutable directed graph without self-loops. Neighbor lists are sorted.
class Digraph {
 public:
  /// Throws GraphError on self-loops or endpoints outside 1..n.
  static Digraph build(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Nodes that send to `v` (0-based indices).
  std::span<const std::size_t> in_neighbors(std::size_t v) const { return in_[v]; }
  /// Nodes that receive from `v` (0-based indices).
  std::span<const std::size_t> out_neighbors(std::size_t v) const { return out_[v]; }

  bool has_edge(std::size_t receiver, std::size_t sender) const;

  /// Protocol runs need more than two nodes.
  bool usable_for_protocol() const { return n_ > 2; }

  friend bool operator==(const Digraph& a, const Digraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;  // sorted, deduplicated
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

/// Tarjan SCC; true iff a single component spans all nodes.
bool is_strongly_connected(const Digraph& g);

/// Hamiltonian ring over a seeded permutation, then every other ordered pair
/// added independently with probability `extra_edge_prob`.
Digraph random_strongly_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed);

/// Fixed 5-node demo topology used by the bundled scenarios.
Digraph demo_digraph();

/// {"n": int, "edges": [[receiver, sender], ...]}
nlohmann::json to_json(const Digraph& g);
Digraph digraph_from_json(const nlohmann::json& j);

}  // namespace pushsum
