#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "pushsum/matrix.hpp"
#include "pushsum/protocol.hpp"

namespace pushsum {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Execution { kSerial, kParallel };

/// Column-sum tolerance accepted by ergodicity_coefficient.
inline constexpr double kColumnSumTolerance = 1e-9;

/// 2N x 2N transition of the decomposed update on the stacked state
/// [exchanged; reserved]: [[P, I], [diag(alpha), 0]].
Matrix augment(const RoundWeights& w);

/// augment(w) for protocols with a retention weight, plain P otherwise.
Matrix transition_matrix(const RoundWeights& w, bool retention);

/// Stacks component l (0 or 1) of a state the way transition_matrix expects it.
std::vector<double> stacked_state(const ProtocolState& s, int component);

/// max_j max_{i1,i2} |m(j,i1) - m(j,i2)|. Throws AnalysisError unless every
/// column sums to 1 within kColumnSumTolerance.
double ergodicity_coefficient(const Matrix& m, Execution exec = Execution::kParallel);

struct ErgodicityReport {
  /// delta[k - 1] = delta(T_k), T_k = Phat(k) ... Phat(1).
  std::vector<double> delta;
  /// bound[k - 1] = (1 - eps_k^N)^floor(k / N), eps_k the smallest positive
  /// entry of Phat(1..k).
  std::vector<double> bound;
  std::vector<double> epsilon_running;
  double epsilon = 1.0;
  std::size_t nodes = 0;
  Matrix product;  // T_K, raw (never renormalized)

  double final_delta() const { return delta.empty() ? 0.0 : delta.back(); }
  /// First k from which delta(T_k) stays below `tol`.
  std::optional<std::size_t> convergence_round(double tol) const;
  /// Largest delta(T_k) - bound(k); <= 0 when the contraction bound holds.
  double worst_bound_excess() const;
};

/// Accumulates T_k left-multiplicatively over rounds 1..k of the trace.
/// Round-0 weights are excluded. Throws AnalysisError if the trace is too short.
ErgodicityReport forward_product(const Trace& trace, std::size_t k,
                                 Execution exec = Execution::kParallel,
                                 const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

/// Column of T_k normalized to sum 1; at large k every column approaches the
/// same stochastic vector.
std::vector<double> limit_column(const Matrix& product, std::size_t column = 0);

struct RunMetrics {
  double mean = 0.0;
  /// Indexed by round k = 0..R. nullopt when no node has a defined estimate.
  std::vector<std::optional<double>> mse;
  /// Nodes excluded from mse[k] because their estimate is undefined.
  std::vector<std::size_t> undefined;
  /// node_error[k][i] = estimate_i(k) - mean.
  std::vector<std::vector<std::optional<double>>> node_error;

  /// First k from which every node's |error| stays below `tol` (all defined).
  std::optional<std::size_t> convergence_round(double tol) const;
  std::optional<double> max_abs_error(std::size_t k) const;
};

RunMetrics run_metrics(const Trace& trace,
                       const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

/// Ratios reserved_1 / reserved_2 per node at round k (decomposed traces only).
std::vector<std::optional<double>> reserved_ratios(const Trace& trace, std::size_t k);

}  // namespace pushsum
