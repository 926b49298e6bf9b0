#include "pushsum/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace pushsum {

namespace {

void check_target(const Trace& trace, NodeId target) {
  if (target.value() < 1 || target.value() > trace.node_count()) {
    throw AdversaryError("target node " + std::to_string(target.value()) + " is not in 1.." +
                         std::to_string(trace.node_count()));
  }
}

// x^+_{i,l}(k) from any product the target sent with a nonzero weight.
std::optional<std::array<double, 2>> recover_sent_value(const RoundRecord& rec, std::size_t i) {
  std::array<std::optional<double>, 2> out;
  for (const auto& t : rec.transmitted) {
    if (t.from.index() != i) continue;
    const double w = rec.weights.p(t.to.index(), i);
    if (w == 0.0) continue;
    auto& slot = out[t.component - 1];
    if (!slot) slot = t.value / w;
  }
  if (!out[0] || !out[1]) return std::nullopt;
  return std::array<double, 2>{*out[0], *out[1]};
}

std::array<double, 2> received_total(const RoundRecord& rec, std::size_t i) {
  std::array<double, 2> sum{0.0, 0.0};
  for (const auto& t : rec.transmitted) {
    if (t.to.index() == i) sum[t.component - 1] += t.value;
  }
  return sum;
}

}  // namespace

std::optional<std::size_t> EavesdropperState::first_defined() const {
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    if (estimate[k]) return k;
  }
  return std::nullopt;
}

EavesdropperState eavesdrop(const Trace& trace, NodeId target) {
  check_target(trace, target);
  const std::size_t i = target.index();
  const std::size_t rounds = trace.rounds.size();
  EavesdropperState st;
  st.target = target;
  st.estimate.assign(rounds, std::nullopt);
  for (auto& v : st.s) v.assign(rounds, std::numeric_limits<double>::quiet_NaN());
  for (auto& v : st.recovered) v.assign(rounds, std::numeric_limits<double>::quiet_NaN());
  if (rounds == 0) return st;

  for (std::size_t k = 0; k < rounds; ++k) {
    const auto x = recover_sent_value(trace.rounds[k], i);
    if (!x) {
      st.unrecoverable_round = k;
      break;
    }
    st.recovered[0][k] = (*x)[0];
    st.recovered[1][k] = (*x)[1];
  }
  const std::size_t usable = st.unrecoverable_round.value_or(rounds);
  if (usable == 0) return st;

  for (int l = 0; l < 2; ++l) st.s[l][0] = st.recovered[l][0];
  for (std::size_t k = 0; k + 1 < usable; ++k) {
    const auto& rec = trace.rounds[k];
    double out_weight = 0.0;
    for (const std::size_t j : trace.graph.out_neighbors(i)) out_weight += rec.weights.p(j, i);
    const double assumed_self = 1.0 - out_weight;
    const auto inflow = received_total(rec, i);
    for (int l = 0; l < 2; ++l) {
      st.s[l][k + 1] = st.s[l][k] + st.recovered[l][k + 1] -
                       (inflow[l] + assumed_self * st.recovered[l][k]);
    }
  }
  for (std::size_t k = 0; k < usable; ++k) {
    st.estimate[k] = estimate_average(st.s[0][k], st.s[1][k]);
  }
  return st;
}

// --- Coalition views ----------------------------------------------------------------

CoalitionView build_coalition_view(const Trace& trace, std::vector<NodeId> coalition) {
  const std::size_t n = trace.node_count();
  std::sort(coalition.begin(), coalition.end());
  coalition.erase(std::unique(coalition.begin(), coalition.end()), coalition.end());
  for (const auto& a : coalition) {
    if (a.value() < 1 || a.value() > n) {
      throw AdversaryError("coalition member " + std::to_string(a.value()) + " is not a node");
    }
  }
  if (coalition.size() == n) throw AdversaryError("coalition covers every node");

  CoalitionView view;
  view.coalition = coalition;
  view.graph = trace.graph;
  view.rounds.reserve(trace.rounds.size());
  for (std::size_t k = 0; k < trace.rounds.size(); ++k) {
    const auto& rec = trace.rounds[k];
    const auto& state = trace.state_at(k);
    const auto& x = exchanged_values(state);
    const auto* dec = std::get_if<DecomposedState>(&state);
    CoalitionRound round;
    round.k = k;
    for (const auto& a : coalition) {
      const std::size_t ai = a.index();
      MemberObservation obs;
      obs.member = a;
      for (int l = 0; l < 2; ++l) {
        obs.exchanged[l] = x[l][ai];
        obs.reserved[l] = dec ? dec->reserved[l][ai] : 0.0;
      }
      obs.column.resize(n);
      for (std::size_t j = 0; j < n; ++j) obs.column[j] = rec.weights.p(j, ai);
      obs.alpha = rec.weights.alpha.empty() ? 0.0 : rec.weights.alpha[ai];
      for (const auto& t : rec.transmitted) {
        if (t.to == a) obs.received.push_back(t);
      }
      round.members.push_back(std::move(obs));
    }
    view.rounds.push_back(std::move(round));
  }
  return view;
}

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

double observation_difference(const MemberObservation& a, const MemberObservation& b) {
  constexpr double kMismatch = std::numeric_limits<double>::infinity();
  if (a.member != b.member || a.column.size() != b.column.size() ||
      a.received.size() != b.received.size()) {
    return kMismatch;
  }
  double worst = 0.0;
  for (int l = 0; l < 2; ++l) {
    worst = std::max({worst, rel_diff(a.exchanged[l], b.exchanged[l]),
                      rel_diff(a.reserved[l], b.reserved[l])});
  }
  for (std::size_t j = 0; j < a.column.size(); ++j) {
    worst = std::max(worst, rel_diff(a.column[j], b.column[j]));
  }
  worst = std::max(worst, rel_diff(a.alpha, b.alpha));
  for (std::size_t t = 0; t < a.received.size(); ++t) {
    const auto& x = a.received[t];
    const auto& y = b.received[t];
    if (x.from != y.from || x.to != y.to || x.component != y.component) return kMismatch;
    worst = std::max(worst, rel_diff(x.value, y.value));
  }
  return worst;
}

}  // namespace

double view_difference(const CoalitionView& a, const CoalitionView& b) {
  constexpr double kMismatch = std::numeric_limits<double>::infinity();
  if (a.coalition != b.coalition || a.rounds.size() != b.rounds.size()) return kMismatch;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.rounds.size(); ++k) {
    const auto& ra = a.rounds[k];
    const auto& rb = b.rounds[k];
    if (ra.k != rb.k || ra.members.size() != rb.members.size()) return kMismatch;
    for (std::size_t m = 0; m < ra.members.size(); ++m) {
      worst = std::max(worst, observation_difference(ra.members[m], rb.members[m]));
    }
  }
  return worst;
}

bool is_subview(const CoalitionView& small, const CoalitionView& large) {
  if (small.rounds.size() != large.rounds.size()) return false;
  for (std::size_t k = 0; k < small.rounds.size(); ++k) {
    for (const auto& obs : small.rounds[k].members) {
      const auto& pool = large.rounds[k].members;
      if (std::find(pool.begin(), pool.end(), obs) == pool.end()) return false;
    }
  }
  return true;
}

// --- Equivalent traces ------------------------------------------------------------------

Trace equivalent_trace(const Trace& trace, NodeId target, NodeId helper, double e,
                       std::optional<NeighborRole> role) {
  check_target(trace, target);
  check_target(trace, helper);
  if (trace.protocol != kDecomposedTag) {
    throw AdversaryError("equivalent traces are defined for the decomposed protocol only");
  }
  if (trace.rounds.empty()) throw AdversaryError("trace has no rounds");
  const std::size_t i = target.index();
  const std::size_t m = helper.index();
  if (i == m) throw AdversaryError("helper must differ from the target");
  const bool sends_to_target = trace.graph.has_edge(i, m);
  const bool receives_from_target = trace.graph.has_edge(m, i);
  if (!role) {
    if (sends_to_target) {
      role = NeighborRole::kInNeighbor;
    } else if (receives_from_target) {
      role = NeighborRole::kOutNeighbor;
    } else {
      throw AdversaryError("helper is not a neighbor of the target");
    }
  }
  if (*role == NeighborRole::kInNeighbor && !sends_to_target) {
    throw AdversaryError("helper is not an in-neighbor of the target");
  }
  if (*role == NeighborRole::kOutNeighbor && !receives_from_target) {
    throw AdversaryError("helper is not an out-neighbor of the target");
  }

  Trace out = trace;
  out.x0[i] += e;
  out.x0[m] -= e;
  auto& init = std::get<DecomposedState>(out.initial);
  init.reserved[0][i] += 2.0 * e;
  init.reserved[0][m] -= 2.0 * e;

  // (p x + 2e) / x written as p + 2e / x so that e = 0 leaves p untouched.
  auto& p = out.rounds[0].weights.p;
  const std::size_t sender = *role == NeighborRole::kInNeighbor ? m : i;
  const double divisor = init.exchanged[0][sender];
  if (std::abs(divisor) < kEstimateGuard) {
    throw AdversaryError("round-0 exchanged value of the rescaled sender is too close to zero");
  }
  const double shift = 2.0 * e / divisor;
  if (*role == NeighborRole::kInNeighbor) {
    p(m, m) += shift;
    p(i, m) -= shift;
  } else {
    p(i, i) -= shift;
    p(m, i) += shift;
  }

  const auto registry = ProtocolRegistry::with_builtins();
  const Protocol& proto = registry.get(out.protocol);
  for (std::size_t k = 0; k < out.rounds.size(); ++k) {
    auto step = proto.step(out.state_at(k), out.rounds[k].weights, out.graph);
    out.rounds[k].transmitted = std::move(step.transmitted);
    out.rounds[k].next_state = std::move(step.next);
  }
  return out;
}

// --- Reconstruction ----------------------------------------------------------------

std::optional<double> coalition_reconstruct(const CoalitionView& view, NodeId target,
                                            std::size_t horizon) {
  const auto& g = view.graph;
  if (target.value() < 1 || target.value() > g.size()) {
    throw AdversaryError("target is not a node");
  }
  const std::size_t i = target.index();
  const auto member_slot = [&](std::size_t node) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(view.coalition.begin(), view.coalition.end(),
                                     NodeId::from_index(node));
    if (it == view.coalition.end() || it->index() != node) return std::nullopt;
    return static_cast<std::size_t>(it - view.coalition.begin());
  };
  if (member_slot(i)) throw AdversaryError("target belongs to the coalition");
  for (const auto nbrs : {g.in_neighbors(i), g.out_neighbors(i)}) {
    for (const std::size_t v : nbrs) {
      if (!member_slot(v)) {
        throw AdversaryError("neighbor " + std::to_string(v + 1) +
                             " of the target is outside the coalition");
      }
    }
  }
  if (horizon == 0 || view.rounds.size() <= horizon) {
    throw AdversaryError("view does not reach round " + std::to_string(horizon));
  }

  // Net flow into the target at round t, components 1 and 2.
  const auto net_flow = [&](std::size_t t) {
    std::array<double, 2> net{0.0, 0.0};
    const auto& round = view.rounds[t];
    for (const std::size_t src : g.in_neighbors(i)) {
      const auto& obs = round.members[*member_slot(src)];
      for (int l = 0; l < 2; ++l) net[l] += obs.column[i] * obs.exchanged[l];
    }
    for (const std::size_t dst : g.out_neighbors(i)) {
      for (const auto& tr : round.members[*member_slot(dst)].received) {
        if (tr.from.index() == i) net[tr.component - 1] -= tr.value;
      }
    }
    return net;
  };

  std::array<double, 2> flow{0.0, 0.0};
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto net = net_flow(t);
    flow[0] += net[0];
    flow[1] += net[1];
  }
  const double z2 = 2.0 + flow[1];

  // Target's value/mass ratio at the horizon from what it sent (weights cancel).
  std::optional<double> ratio;
  const auto& last = view.rounds[horizon];
  for (const std::size_t dst : g.out_neighbors(i)) {
    std::array<std::optional<double>, 2> sent;
    for (const auto& tr : last.members[*member_slot(dst)].received) {
      if (tr.from.index() == i) sent[tr.component - 1] = tr.value;
    }
    if (sent[0] && sent[1]) {
      ratio = estimate_average(*sent[0], *sent[1]);
      if (ratio) break;
    }
  }
  if (!ratio) return std::nullopt;
  const double z1_final = z2 * *ratio;
  return (z1_final - flow[0]) / 2.0;
}

// --- Diagnostics -----------------------------------------------------------------------

double EavesdropperDiagnostics::max_identity_residual() const {
  double worst = 0.0;
  for (const auto& r : rounds) {
    if (!r.observed_error) continue;
    worst = std::max(worst, std::abs(r.predicted_error - *r.observed_error) /
                                std::max(1.0, *r.observed_error));
  }
  return worst;
}

EavesdropperDiagnostics diagnostics(const Trace& trace, NodeId target) {
  check_target(trace, target);
  if (trace.protocol != kDecomposedTag) {
    throw AdversaryError("diagnostics are defined for the decomposed protocol only");
  }
  const std::size_t i = target.index();
  EavesdropperDiagnostics d;
  d.target = target;
  double total = 0.0;
  for (double v : trace.x0) total += v;
  d.mean = total / static_cast<double>(trace.x0.size());
  d.a = trace.x0[i] - d.mean;

  const auto obs = eavesdrop(trace, target);
  for (std::size_t k = 1; k < trace.rounds.size(); ++k) {
    const auto& prev = std::get<DecomposedState>(trace.state_at(k - 1));
    const double alpha = trace.rounds[k - 1].weights.alpha[i];
    DiagnosticRound r;
    r.k = k;
    r.beta = alpha * prev.exchanged[1][i];
    r.gamma = d.mean * r.beta - alpha * prev.exchanged[0][i];
    r.predicted_error = std::abs((d.a * r.beta + r.gamma) / (2.0 - r.beta));
    if (obs.estimate[k]) r.observed_error = std::abs(*obs.estimate[k] - trace.x0[i]);
    d.rounds.push_back(r);
  }
  return d;
}

// --- Reports ---------------------------------------------------------------------------

std::vector<std::size_t> AttackReport::post_transient_exceedances(std::size_t transient) const {
  std::optional<std::size_t> first;
  for (std::size_t k = 0; k < estimate.size() && !first; ++k) {
    if (estimate[k]) first = k;
  }
  std::vector<std::size_t> out;
  if (!first) return out;
  for (const std::size_t k : exceedance_rounds) {
    if (k >= *first + transient) out.push_back(k);
  }
  return out;
}

AttackReport attack_report(const Trace& trace, const EavesdropperState& obs, double threshold) {
  AttackReport r;
  r.target = obs.target;
  r.protocol = trace.protocol;
  r.truth = trace.x0.at(obs.target.index());
  r.threshold = threshold;
  r.estimate = obs.estimate;
  r.abs_error.resize(obs.estimate.size());
  for (std::size_t k = 0; k < obs.estimate.size(); ++k) {
    if (!obs.estimate[k]) continue;
    r.abs_error[k] = std::abs(*obs.estimate[k] - r.truth);
    if (*r.abs_error[k] > threshold) r.exceedance_rounds.push_back(k);
  }
  if (!r.abs_error.empty()) r.final_error = r.abs_error.back();
  return r;
}

nlohmann::json to_json(const AttackReport& r) {
  using nlohmann::json;
  auto opt = [](const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  return {{"target", r.target.value()},
          {"protocol", r.protocol},
          {"true_initial_value", r.truth},
          {"c", r.threshold},
          {"estimates", opt(r.estimate)},
          {"exceedance_rounds", r.exceedance_rounds},
          {"final_error", r.final_error ? json(*r.final_error) : json(nullptr)}};
}

void write_attack_csv(std::ostream& out, const AttackReport& r) {
  out << "k,estimate,abs_error\n";
  for (std::size_t k = 0; k < r.estimate.size(); ++k) {
    out << k << ',';
    if (r.estimate[k]) out << nlohmann::json(*r.estimate[k]).dump();
    out << ',';
    if (r.abs_error[k]) out << nlohmann::json(*r.abs_error[k]).dump();
    out << '\n';
  }
}

}  // namespace pushsum
