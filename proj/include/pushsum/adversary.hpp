#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushsum/protocol.hpp"

namespace pushsum {

class AdversaryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// --- External eavesdropper -------------------------------------------------------

/// Observer run by an outsider that intercepts every transmitted product and
/// knows all off-diagonal weights. It assumes plain push-sum, so it takes the
/// target's self-weight to be 1 - sum of its out-weights.
struct EavesdropperState {
  NodeId target;
  /// Accumulators s_1(k), s_2(k) for k = 0..R-1.
  std::array<std::vector<double>, 2> s;
  /// Reconstructed exchanged values of the target, per round.
  std::array<std::vector<double>, 2> recovered;
  /// s_1(k) / s_2(k), nullopt while |s_2| is below the guard.
  std::vector<std::optional<double>> estimate;
  /// First round at which the target's value could not be recovered (all of
  /// its out-weights were zero). Estimates from there on are undefined.
  std::optional<std::size_t> unrecoverable_round;

  /// First round with a defined estimate.
  std::optional<std::size_t> first_defined() const;
};

EavesdropperState eavesdrop(const Trace& trace, NodeId target);

// --- Honest-but-curious coalitions -----------------------------------------------

struct MemberObservation {
  NodeId member;
  std::array<double, 2> exchanged{};
  std::array<double, 2> reserved{};
  /// Weights the member generated: column[j] = p(j, member), j over all nodes.
  std::vector<double> column;
  double alpha = 0.0;
  /// Products received from in-neighbors, in trace order.
  std::vector<Transmission> received;

  friend bool operator==(const MemberObservation&, const MemberObservation&) = default;
};

struct CoalitionRound {
  std::size_t k = 0;
  std::vector<MemberObservation> members;  // ordered by member id

  friend bool operator==(const CoalitionRound&, const CoalitionRound&) = default;
};

/// Exactly what a coalition of honest-but-curious nodes sees, rounds 0..R-1.
/// Nothing about reserved substates of outside nodes is present.
struct CoalitionView {
  std::vector<NodeId> coalition;  // sorted, unique
  Digraph graph;                  // topology is public to the coalition
  std::vector<CoalitionRound> rounds;

  friend bool operator==(const CoalitionView&, const CoalitionView&) = default;
};

/// Throws AdversaryError if the coalition is all of V or names unknown nodes.
CoalitionView build_coalition_view(const Trace& trace, std::vector<NodeId> coalition);

/// Largest elementwise difference |a - b| / max(1, |a|). Infinite if the two
/// views do not have the same shape.
double view_difference(const CoalitionView& a, const CoalitionView& b);

/// True when every member observation of `small` appears unchanged in `large`.
bool is_subview(const CoalitionView& small, const CoalitionView& large);

enum class NeighborRole {
  kInNeighbor,   // helper m sends to the target
  kOutNeighbor,  // helper m receives from the target
};

/// Builds another feasible trace that shifts e from helper m to target i:
/// x_i(0) + e, x_m(0) - e, reserved value substates moved by +-2e, and the
/// round-0 weights of the affected sender rescaled so that every quantity
/// outside {i, m} is unchanged. The result is replayed so it is internally
/// consistent. `role` picks the rewrite when m is both an in- and an
/// out-neighbor; by default the in-neighbor rewrite is preferred.
Trace equivalent_trace(const Trace& trace, NodeId target, NodeId helper, double e,
                       std::optional<NeighborRole> role = std::nullopt);

/// Rebuilds x_target(0) from a coalition that surrounds the target, using the
/// net flow into the target up to round `horizon` and the target's value
/// ratio at `horizon`. Throws AdversaryError if some neighbor of the target is
/// outside the coalition or the view is too short; nullopt if the final ratio
/// is undefined.
std::optional<double> coalition_reconstruct(const CoalitionView& view, NodeId target,
                                            std::size_t horizon);

// --- Diagnostics ----------------------------------------------------------------

struct DiagnosticRound {
  std::size_t k = 0;
  double beta = 0.0;   // alpha_i(k-1) * x^alpha_{i,2}(k-1)
  double gamma = 0.0;  // mean * beta - alpha_i(k-1) * x^alpha_{i,1}(k-1)
  /// |(a beta + gamma) / (2 - beta)|
  double predicted_error = 0.0;
  /// |estimate(k) - x_i(0)| from the eavesdropper, when defined.
  std::optional<double> observed_error;
};

struct EavesdropperDiagnostics {
  NodeId target;
  double mean = 0.0;
  double a = 0.0;  // x_i(0) - mean
  std::vector<DiagnosticRound> rounds;  // k = 1..R-1

  /// Largest |predicted - observed| / max(1, observed) over defined rounds.
  double max_identity_residual() const;
};

/// Requires a decomposed trace.
EavesdropperDiagnostics diagnostics(const Trace& trace, NodeId target);

// --- Attack reports ---------------------------------------------------------------

struct AttackReport {
  NodeId target;
  std::string protocol;
  double truth = 0.0;
  double threshold = 0.0;  // c
  std::vector<std::optional<double>> estimate;
  std::vector<std::optional<double>> abs_error;
  std::vector<std::size_t> exceedance_rounds;  // abs_error > threshold
  std::optional<double> final_error;

  /// Exceedances at k >= first defined round + transient.
  std::vector<std::size_t> post_transient_exceedances(std::size_t transient) const;
};

AttackReport attack_report(const Trace& trace, const EavesdropperState& obs, double threshold);

nlohmann::json to_json(const AttackReport& r);
/// Columns k,estimate,abs_error; undefined values are empty fields.
void write_attack_csv(std::ostream& out, const AttackReport& r);

}  // namespace pushsum
