#include "pushsum/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "pushsum/rng.hpp"

namespace pushsum {

Digraph Digraph::build(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) throw GraphError("digraph needs at least one node");
  Digraph g;
  g.n_ = n;
  g.edges_.assign(edges.begin(), edges.end());
  for (const auto& e : g.edges_) {
    const auto r = e.receiver.value();
    const auto s = e.sender.value();
    if (r < 1 || r > n || s < 1 || s > n) {
      throw GraphError("edge (" + std::to_string(r) + "," + std::to_string(s) +
                       ") has an endpoint outside 1.." + std::to_string(n));
    }
    if (r == s) throw GraphError("self-loop at node " + std::to_string(r));
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  g.in_.assign(n, {});
  g.out_.assign(n, {});
  for (const auto& e : g.edges_) {
    g.in_[e.receiver.index()].push_back(e.sender.index());
    g.out_[e.sender.index()].push_back(e.receiver.index());
  }
  for (auto& v : g.in_) std::sort(v.begin(), v.end());
  for (auto& v : g.out_) std::sort(v.begin(), v.end());
  return g;
}

bool Digraph::has_edge(std::size_t receiver, std::size_t sender) const {
  const auto& outs = out_[sender];
  return std::binary_search(outs.begin(), outs.end(), receiver);
}

bool is_strongly_connected(const Digraph& g) {
  const std::size_t n = g.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::size_t components = 0;

  // Iterative Tarjan: frames hold (node, next out-neighbor position).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto outs = g.out_neighbors(v);
      if (pos < outs.size()) {
        const std::size_t w = outs[pos++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const std::size_t parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        ++components;
        std::size_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
        } while (w != done);
      }
    }
  }
  return components == 1;
}

Digraph random_strongly_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed) {
  if (n <= 2) throw GraphError("random_strongly_connected needs n > 2");
  if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0)) {
    throw GraphError("extra_edge_prob must lie in [0, 1]");
  }
  auto rng = substream(seed, 0, 0, Purpose::kTopology);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Edge> edges;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t sender = order[k];
    const std::size_t receiver = order[(k + 1) % n];
    present[receiver][sender] = true;
    edges.push_back({NodeId::from_index(receiver), NodeId::from_index(sender)});
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      if (r == s || present[r][s]) continue;
      if (coin(rng) < extra_edge_prob) {
        edges.push_back({NodeId::from_index(r), NodeId::from_index(s)});
      }
    }
  }
  return Digraph::build(n, edges);
}

Digraph demo_digraph() {
  const std::vector<Edge> edges = {
      {NodeId(2), NodeId(1)}, {NodeId(3), NodeId(2)}, {NodeId(4), NodeId(3)},
      {NodeId(5), NodeId(4)}, {NodeId(1), NodeId(5)}, {NodeId(3), NodeId(1)},
      {NodeId(5), NodeId(2)},
  };
  return Digraph::build(5, edges);
}

nlohmann::json to_json(const Digraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back({e.receiver.value(), e.sender.value()});
  return {{"n", g.size()}, {"edges", edges}};
}

Digraph digraph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
    throw GraphError("graph JSON must be an object with \"n\" and \"edges\"");
  }
  if (!j.at("n").is_number_unsigned()) throw GraphError("graph \"n\" must be a positive integer");
  const auto n = j.at("n").get<std::size_t>();
  std::vector<Edge> edges;
  for (const auto& pair : j.at("edges")) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer()) {
      throw GraphError("each edge must be a [receiver, sender] integer pair");
    }
    const auto r = pair[0].get<long long>();
    const auto s = pair[1].get<long long>();
    if (r < 1 || s < 1) throw GraphError("edge endpoints are 1-based");
    edges.push_back({NodeId(static_cast<std::size_t>(r)), NodeId(static_cast<std::size_t>(s))});
  }
  return Digraph::build(n, edges);
}

}  // namespace pushsum
