#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pushsum/graph.hpp"
#include "pushsum/matrix.hpp"

namespace pushsum {

/// Denominators with smaller magnitude give an undefined estimate.
inline constexpr double kEstimateGuard = 1e-12;
/// Round-0 Gaussian columns whose raw sum is smaller than this are redrawn.
inline constexpr double kNormalizerGuard = 1e-6;

inline constexpr std::string_view kPushSumTag = "push_sum";
inline constexpr std::string_view kDecomposedTag = "decomposed";

class ProtocolError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-round weights. p(j, i) is the share sender i pushes to receiver j
/// (p(i, i) is the self-weight); alpha[i] is the retention weight feeding the
/// reserved substate, identically zero for plain push-sum.
/// Column invariant: sum_j p(j, i) + alpha[i] == 1.
struct RoundWeights {
  Matrix p;
  std::vector<double> alpha;

  friend bool operator==(const RoundWeights&, const RoundWeights&) = default;
};

/// Plain push-sum pair: x[0] is the value component, x[1] the mass component.
struct PushSumState {
  std::array<std::vector<double>, 2> x;

  friend bool operator==(const PushSumState&, const PushSumState&) = default;
};

/// State-decomposition substates. `exchanged` (alpha substates) is what a node
/// transmits; `reserved` (beta substates) never leaves the node.
struct DecomposedState {
  std::array<std::vector<double>, 2> exchanged;
  std::array<std::vector<double>, 2> reserved;

  friend bool operator==(const DecomposedState&, const DecomposedState&) = default;
};

using ProtocolState = std::variant<PushSumState, DecomposedState>;

/// Values that leave their node: x for push-sum, the alpha substates otherwise.
const std::array<std::vector<double>, 2>& exchanged_values(const ProtocolState& s);
std::size_t node_count(const ProtocolState& s);

/// One transmitted product p(to, from) * exchanged_l(from); component is 1 or 2.
struct Transmission {
  NodeId from;
  NodeId to;
  int component = 1;
  double value = 0.0;

  friend bool operator==(const Transmission&, const Transmission&) = default;
};

template <typename State>
struct RoundResult {
  State next;
  std::vector<Transmission> transmitted;
};

enum class WeightScheme {
  kPushSum,     // U(0,1) over out-neighbors and self, no retention weight
  kDecomposed,  // Gaussian at k = 0, U(0,1) afterwards, retention weight included
};

/// Draws node i's column from substream (seed, i, k, weights). Deterministic in
/// all arguments. Throws ProtocolError when spread <= 0.
RoundWeights sample_round_weights(const Digraph& g, std::size_t k, double spread,
                                  std::uint64_t seed, WeightScheme scheme);

PushSumState init_push_sum(std::span<const double> x0);

/// Exchanged value substate from U(-spread, spread); reserved = 2 x0 - exchanged.
DecomposedState init_decomposed(std::span<const double> x0, double spread, std::uint64_t seed);

RoundResult<PushSumState> push_sum_round(const PushSumState& s, const RoundWeights& w,
                                         const Digraph& g);
RoundResult<DecomposedState> decomposed_round(const DecomposedState& s, const RoundWeights& w,
                                              const Digraph& g);

std::optional<double> estimate_average(double numerator, double denominator);

/// Per-node initial values drawn from U(low, high), seeded per node.
std::vector<double> uniform_initial_values(std::size_t n, double low, double high,
                                           std::uint64_t seed);

// --- Trace ------------------------------------------------------------------

struct RoundRecord {
  std::size_t k = 0;
  RoundWeights weights;
  /// Products sent during round k, computed from the state at round k.
  std::vector<Transmission> transmitted;
  /// State at round k + 1.
  ProtocolState next_state;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct Trace {
  std::string protocol;
  Digraph graph;
  std::vector<double> x0;
  std::uint64_t seed = 0;
  double spread = 0.0;
  ProtocolState initial;
  std::vector<RoundRecord> rounds;

  /// State at round k, 0 <= k <= rounds.size().
  const ProtocolState& state_at(std::size_t k) const {
    return k == 0 ? initial : rounds.at(k - 1).next_state;
  }
  std::size_t node_count() const { return graph.size(); }

  friend bool operator==(const Trace&, const Trace&) = default;
};

// --- Plug-in seam --------------------------------------------------------------

/// A synchronous averaging protocol that can be driven round by round and
/// recorded into a Trace. Built-ins: push_sum, decomposed.
class Protocol {
 public:
  virtual ~Protocol() = default;

  virtual std::string_view name() const = 0;
  virtual ProtocolState initialize(const Digraph& g, std::span<const double> x0, double spread,
                                   std::uint64_t seed) const = 0;
  virtual RoundWeights sample_weights(const Digraph& g, std::size_t k, double spread,
                                      std::uint64_t seed) const = 0;
  virtual RoundResult<ProtocolState> step(const ProtocolState& s, const RoundWeights& w,
                                          const Digraph& g) const = 0;
  /// Per-node running estimate of the average; nullopt where undefined.
  virtual std::vector<std::optional<double>> estimates(const ProtocolState& s) const;
  /// Conserved totals, one per state component.
  virtual std::array<double, 2> conserved_sums(const ProtocolState& s) const;
  /// Whether the protocol uses a retention weight (decides the transition matrix shape).
  virtual bool has_retention() const = 0;
};

class ProtocolRegistry {
 public:
  /// Registry pre-loaded with push_sum and decomposed.
  static ProtocolRegistry with_builtins();

  void add(std::unique_ptr<Protocol> protocol);
  /// Throws ProtocolError listing the registered tags.
  const Protocol& get(std::string_view tag) const;
  bool contains(std::string_view tag) const;
  std::vector<std::string> tags() const;

 private:
  std::map<std::string, std::shared_ptr<const Protocol>, std::less<>> protocols_;
};

/// Orchestrates a full run. Requires a strongly connected digraph with N > 2.
Trace run_protocol(const Digraph& g, std::span<const double> x0, std::string_view protocol,
                   std::size_t rounds, double spread, std::uint64_t seed,
                   const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

/// Recomputes every state and transmitted product from the recorded weights.
/// Returns the first round whose record differs, or nullopt if the trace replays exactly.
std::optional<std::size_t> first_replay_mismatch(
    const Trace& trace, const ProtocolRegistry& registry = ProtocolRegistry::with_builtins());

}  // namespace pushsum
