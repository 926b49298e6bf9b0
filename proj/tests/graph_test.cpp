#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pushsum/graph.hpp"

namespace pushsum {
namespace {

std::vector<Edge> edges(std::initializer_list<std::pair<int, int>> pairs) {
  std::vector<Edge> out;
  for (const auto& [r, s] : pairs) {
    out.push_back({NodeId(static_cast<std::size_t>(r)), NodeId(static_cast<std::size_t>(s))});
  }
  return out;
}

TEST(Digraph, RingHasOneInAndOneOutNeighbor) {
  const auto g = Digraph::build(3, edges({{2, 1}, {3, 2}, {1, 3}}));
  for (std::size_t v = 0; v < 3; ++v) {
    EXPECT_EQ(g.in_neighbors(v).size(), 1u);
    EXPECT_EQ(g.out_neighbors(v).size(), 1u);
  }
  EXPECT_EQ(g.out_neighbors(0)[0], 1u);  // 1 -> 2
  EXPECT_EQ(g.in_neighbors(0)[0], 2u);   // 3 -> 1
  EXPECT_TRUE(g.usable_for_protocol());
}

TEST(Digraph, TwoNodesIsValidButNotUsable) {
  const auto g = Digraph::build(2, edges({{2, 1}, {1, 2}}));
  EXPECT_TRUE(is_strongly_connected(g));
  EXPECT_FALSE(g.usable_for_protocol());
}

TEST(Digraph, RejectsSelfLoop) {
  EXPECT_THROW(Digraph::build(3, edges({{1, 1}})), GraphError);
}

TEST(Digraph, RejectsOutOfRangeEndpoint) {
  EXPECT_THROW(Digraph::build(3, edges({{4, 1}})), GraphError);
  EXPECT_THROW(Digraph::build(3, edges({{0, 1}})), GraphError);
}

TEST(Digraph, DuplicateEdgesCollapse) {
  const auto g = Digraph::build(3, edges({{2, 1}, {2, 1}, {3, 2}, {1, 3}}));
  EXPECT_EQ(g.edges().size(), 3u);
}

TEST(StrongConnectivity, Examples) {
  EXPECT_TRUE(is_strongly_connected(Digraph::build(3, edges({{2, 1}, {3, 2}, {1, 3}}))));
  EXPECT_FALSE(is_strongly_connected(Digraph::build(3, edges({{2, 1}, {3, 1}}))));
  EXPECT_TRUE(is_strongly_connected(demo_digraph()));
}

TEST(StrongConnectivity, AgreesWithReachabilityOracleExhaustivelyUpToFourNodes) {
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        if (r != s) slots.emplace_back(r, s);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
      std::vector<Edge> es;
      for (std::size_t b = 0; b < slots.size(); ++b) {
        if (mask >> b & 1) {
          es.push_back({NodeId::from_index(slots[b].first), NodeId::from_index(slots[b].second)});
        }
      }
      const auto g = Digraph::build(n, es);
      ASSERT_EQ(is_strongly_connected(g), oracle::all_pairs_reachable(oracle::adjacency_of(g)))
          << "n=" << n << " mask=" << mask;
    }
  }
}

TEST(RandomStronglyConnected, RingOnlyAtZeroProbability) {
  const auto g = random_strongly_connected(5, 0.0, 11);
  EXPECT_EQ(g.edges().size(), 5u);
  for (std::size_t v = 0; v < 5; ++v) {
    EXPECT_EQ(g.in_neighbors(v).size(), 1u);
    EXPECT_EQ(g.out_neighbors(v).size(), 1u);
  }
  EXPECT_TRUE(is_strongly_connected(g));
}

TEST(RandomStronglyConnected, CompleteAtProbabilityOne) {
  EXPECT_EQ(random_strongly_connected(5, 1.0, 3).edges().size(), 20u);
}

TEST(RandomStronglyConnected, SeedSevenEightNodes) {
  const auto g = random_strongly_connected(8, 0.3, 7);
  EXPECT_TRUE(is_strongly_connected(g));
  EXPECT_TRUE(oracle::all_pairs_reachable(oracle::adjacency_of(g)));
}

TEST(RandomStronglyConnected, AlwaysStronglyConnectedAndDeterministic) {
  std::mt19937_64 pick(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + pick() % 10;
    const double prob = static_cast<double>(pick() % 101) / 100.0;
    const std::uint64_t seed = pick();
    const auto a = random_strongly_connected(n, prob, seed);
    const auto b = random_strongly_connected(n, prob, seed);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(oracle::all_pairs_reachable(oracle::adjacency_of(a)));
  }
}

TEST(RandomStronglyConnected, RejectsTinyGraphsAndBadProbability) {
  EXPECT_THROW(random_strongly_connected(2, 0.5, 1), GraphError);
  EXPECT_THROW(random_strongly_connected(4, 1.5, 1), GraphError);
}

TEST(DigraphJson, ReceiverSenderPairs) {
  const auto g = demo_digraph();
  const auto j = to_json(g);
  EXPECT_EQ(j.at("n"), 5);
  EXPECT_EQ(j.at("edges").size(), 7u);
  EXPECT_EQ(digraph_from_json(j), g);
  EXPECT_THROW(digraph_from_json(nlohmann::json::parse(R"({"n":3,"edges":[[1,1]]})")), GraphError);
  EXPECT_THROW(digraph_from_json(nlohmann::json::parse(R"({"n":3})")), GraphError);
}

}  // namespace
}  // namespace pushsum
