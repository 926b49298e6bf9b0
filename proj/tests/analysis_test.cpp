#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pushsum/analysis.hpp"

namespace pushsum {
namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

oracle::Dense dense(const Matrix& m) {
  oracle::Dense d(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) d[r][c] = m(r, c);
  return d;
}

TEST(Ergodicity, ThreeSmallExamples) {
  for (auto exec : {Execution::kSerial, Execution::kParallel}) {
    EXPECT_DOUBLE_EQ(ergodicity_coefficient(from_rows({{0.5, 0.5}, {0.5, 0.5}}), exec), 0.0);
    EXPECT_DOUBLE_EQ(ergodicity_coefficient(Matrix::identity(2), exec), 1.0);
    EXPECT_NEAR(ergodicity_coefficient(from_rows({{0.2, 0.5}, {0.8, 0.5}}), exec), 0.3, 1e-15);
  }
}

TEST(Ergodicity, RejectsNonStochasticColumns) {
  try {
    ergodicity_coefficient(from_rows({{0.5, 0.2}, {0.4, 0.8}}));
    FAIL();
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("column 1"), std::string::npos);
  }
}

TEST(Augment, SingleNodeLayout) {
  RoundWeights w{Matrix(1, 1, 0.6), {0.4}};
  const auto m = augment(w);
  EXPECT_EQ(m, from_rows({{0.6, 1.0}, {0.4, 0.0}}));
}

TEST(Augment, MatchesEntryByEntryOracle) {
  const auto g = random_strongly_connected(7, 0.25, 8);
  const auto w = sample_round_weights(g, 4, 100.0, 8, WeightScheme::kDecomposed);
  EXPECT_EQ(dense(augment(w)), oracle::augmented(w));
  EXPECT_EQ(transition_matrix(w, false), w.p);
}

TEST(Augment, StackedUpdateMatchesRound) {
  const auto g = demo_digraph();
  const auto t = run_protocol(g, uniform_initial_values(5, 0, 50, 6), kDecomposedTag, 5, 100.0, 6);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto a = augment(t.rounds[k].weights);
    for (int l = 0; l < 2; ++l) {
      const auto before = stacked_state(t.state_at(k), l);
      const auto after = stacked_state(t.state_at(k + 1), l);
      for (std::size_t r = 0; r < 10; ++r) {
        double v = 0.0;
        for (std::size_t c = 0; c < 10; ++c) v += a(r, c) * before[c];
        EXPECT_NEAR(v, after[r], 1e-12 * std::max(1.0, std::abs(after[r])));
      }
    }
  }
}

TEST(ForwardProduct, MultipliesNewestRoundOnTheLeft) {
  const auto t = run_protocol(demo_digraph(), uniform_initial_values(5, 0, 50, 1), kDecomposedTag,
                              3, 100.0, 1);
  const auto rep = forward_product(t, 2, Execution::kSerial);
  const auto expect = oracle::product(oracle::augmented(t.rounds[2].weights),
                                      oracle::augmented(t.rounds[1].weights));
  const auto got = dense(rep.product);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 10; ++c) EXPECT_NEAR(got[r][c], expect[r][c], 1e-15);
  EXPECT_EQ(rep.delta.size(), 2u);
}

TEST(ForwardProduct, NeedsEnoughRounds) {
  const auto t = run_protocol(demo_digraph(), uniform_initial_values(5, 0, 50, 1), kDecomposedTag,
                              3, 100.0, 1);
  EXPECT_THROW(forward_product(t, 3), AnalysisError);
  EXPECT_THROW(forward_product(t, 0), AnalysisError);
  EXPECT_NO_THROW(forward_product(t, 2));
}

TEST(ForwardProduct, DeltaAgreesWithDefinitionOracle) {
  const auto g = random_strongly_connected(5, 0.3, 4);
  const auto t = run_protocol(g, uniform_initial_values(5, 0, 50, 4), kDecomposedTag, 41, 100.0, 4);
  const auto rep = forward_product(t, 40);
  oracle::Dense prod = oracle::augmented(t.rounds[1].weights);
  for (std::size_t k = 1; k <= 40; ++k) {
    if (k > 1) prod = oracle::product(oracle::augmented(t.rounds[k].weights), prod);
    EXPECT_NEAR(rep.delta[k - 1], oracle::delta(prod), 1e-12) << k;
  }
}

TEST(ForwardProduct, ContractsUnderTheBound) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto t = run_protocol(demo_digraph(), uniform_initial_values(5, 0, 50, seed),
                                kDecomposedTag, 301, 100.0, seed);
    const auto rep = forward_product(t, 300);
    EXPECT_LE(rep.worst_bound_excess(), 1e-12);
    EXPECT_LT(rep.final_delta(), 1e-6);
    EXPECT_GT(rep.epsilon, 0.0);
    EXPECT_LE(rep.epsilon, 1.0);
    // The running minimum never increases.
    for (std::size_t k = 1; k < rep.epsilon_running.size(); ++k)
      EXPECT_LE(rep.epsilon_running[k], rep.epsilon_running[k - 1]);
  }
}

TEST(ForwardProduct, PushSumUsesPlainMatrix) {
  const auto t = run_protocol(demo_digraph(), uniform_initial_values(5, 0, 50, 2), kPushSumTag, 101,
                              1.0, 2);
  const auto rep = forward_product(t, 100);
  EXPECT_EQ(rep.product.rows(), 5u);
  EXPECT_LT(rep.final_delta(), 1e-6);
  const auto col = limit_column(rep.product, 0);
  double s = 0.0;
  for (double v : col) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(ForwardProduct, SerialAndParallelAgreeBitForBit) {
  const auto g = random_strongly_connected(40, 0.1, 9);
  const auto t = run_protocol(g, uniform_initial_values(40, 0, 50, 9), kDecomposedTag, 31, 100.0, 9);
  const auto a = forward_product(t, 30, Execution::kSerial);
  const auto b = forward_product(t, 30, Execution::kParallel);
  EXPECT_EQ(a.product, b.product);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(RunMetrics, MeanSquaredErrorExamples) {
  // Estimates (10, 20, 30) against mean 20 give MSE 200/3.
  Trace t;
  t.protocol = std::string(kPushSumTag);
  t.graph = Digraph::build(3, std::vector<Edge>{{NodeId(2), NodeId(1)}, {NodeId(3), NodeId(2)},
                                                 {NodeId(1), NodeId(3)}});
  t.x0 = {10, 20, 30};
  t.initial = init_push_sum(t.x0);
  auto m = run_metrics(t);
  EXPECT_DOUBLE_EQ(m.mean, 20.0);
  EXPECT_DOUBLE_EQ(*m.mse[0], 200.0 / 3.0);

  t.initial = init_push_sum(std::vector<double>{20, 20, 20});
  EXPECT_EQ(*run_metrics(t).mse[0], 0.0);

  // An undefined node is excluded and counted.
  auto s = init_push_sum(std::vector<double>{10, 20, 30});
  s.x[1][2] = 0.0;
  t.initial = s;
  m = run_metrics(t);
  EXPECT_EQ(m.undefined[0], 1u);
  EXPECT_DOUBLE_EQ(*m.mse[0], 50.0);  // (100 + 0) / 2
  EXPECT_FALSE(m.node_error[0][2].has_value());
}

TEST(RunMetrics, ConvergenceRoundIsFirstStableRound) {
  const auto x0 = uniform_initial_values(5, 0, 50, 5);
  const auto t = run_protocol(demo_digraph(), x0, kDecomposedTag, 300, 100.0, 5);
  const auto m = run_metrics(t);
  const auto k = m.convergence_round(1e-8);
  ASSERT_TRUE(k.has_value());
  for (std::size_t r = *k; r <= 300; ++r) EXPECT_LT(*m.max_abs_error(r), 1e-8);
  EXPECT_GE(*m.max_abs_error(*k - 1), 1e-8);
  for (const auto& ratio : reserved_ratios(t, 300)) EXPECT_NEAR(*ratio, oracle::mean(x0), 1e-8);
}

TEST(RunMetrics, DecomposedRoundZeroIsUndefined) {
  const auto t = run_protocol(demo_digraph(), uniform_initial_values(5, 0, 50, 1), kDecomposedTag,
                              3, 100.0, 1);
  const auto m = run_metrics(t);
  EXPECT_FALSE(m.mse[0].has_value());
  EXPECT_EQ(m.undefined[0], 5u);
  EXPECT_TRUE(m.mse[1].has_value());
}

}  // namespace
}  // namespace pushsum
