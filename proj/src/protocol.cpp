#include "pushsum/protocol.hpp"

#include <cmath>
#include <random>

#include "pushsum/rng.hpp"

namespace pushsum {

const std::array<std::vector<double>, 2>& exchanged_values(const ProtocolState& s) {
  if (const auto* ps = std::get_if<PushSumState>(&s)) return ps->x;
  return std::get<DecomposedState>(s).exchanged;
}

std::size_t node_count(const ProtocolState& s) { return exchanged_values(s)[0].size(); }

RoundWeights sample_round_weights(const Digraph& g, std::size_t k, double spread,
                                  std::uint64_t seed, WeightScheme scheme) {
  if (!(spread > 0.0)) throw ProtocolError("spread parameter M must be positive");
  const std::size_t n = g.size();
  RoundWeights w{Matrix(n, n), std::vector<double>(n, 0.0)};
  const bool retention = scheme == WeightScheme::kDecomposed;
  const bool gaussian = retention && k == 0;

  std::vector<double> draws;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, i, k, Purpose::kWeights);
    const auto outs = g.out_neighbors(i);
    // Layout: out-neighbors (ascending), self, then retention if present.
    const std::size_t count = outs.size() + 1 + (retention ? 1 : 0);
    draws.assign(count, 0.0);
    double total = 0.0;
    if (gaussian) {
      std::normal_distribution<double> normal(0.0, std::sqrt(spread));
      do {
        total = 0.0;
        for (auto& d : draws) {
          d = normal(rng);
          total += d;
        }
      } while (std::abs(total) < kNormalizerGuard);
    } else {
      for (auto& d : draws) {
        d = uniform_open(rng);
        total += d;
      }
    }
    for (std::size_t t = 0; t < outs.size(); ++t) w.p(outs[t], i) = draws[t] / total;
    w.p(i, i) = draws[outs.size()] / total;
    if (retention) w.alpha[i] = draws[outs.size() + 1] / total;
  }
  return w;
}

PushSumState init_push_sum(std::span<const double> x0) {
  PushSumState s;
  s.x[0].assign(x0.begin(), x0.end());
  s.x[1].assign(x0.size(), 1.0);
  return s;
}

DecomposedState init_decomposed(std::span<const double> x0, double spread, std::uint64_t seed) {
  if (!(spread > 0.0)) throw ProtocolError("spread parameter M must be positive");
  const std::size_t n = x0.size();
  DecomposedState s;
  s.exchanged[0].resize(n);
  s.reserved[0].resize(n);
  s.exchanged[1].assign(n, 0.0);
  s.reserved[1].assign(n, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, i, 0, Purpose::kSubstate);
    std::uniform_real_distribution<double> dist(-spread, spread);
    s.exchanged[0][i] = dist(rng);
    s.reserved[0][i] = 2.0 * x0[i] - s.exchanged[0][i];
  }
  return s;
}

namespace {

// Receiver-side mixing: sum over in-neighbors and self in ascending node order.
double mix(const Digraph& g, const Matrix& p, std::span<const double> x, std::size_t i) {
  double acc = 0.0;
  bool self_done = false;
  for (const std::size_t j : g.in_neighbors(i)) {
    if (!self_done && i < j) {
      acc += p(i, i) * x[i];
      self_done = true;
    }
    acc += p(i, j) * x[j];
  }
  if (!self_done) acc += p(i, i) * x[i];
  return acc;
}

std::vector<Transmission> products(const Digraph& g, const Matrix& p,
                                   const std::array<std::vector<double>, 2>& x) {
  std::vector<Transmission> out;
  out.reserve(2 * g.edges().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const std::size_t j : g.out_neighbors(i)) {
      for (int l = 0; l < 2; ++l) {
        out.push_back({NodeId::from_index(i), NodeId::from_index(j), l + 1, p(j, i) * x[l][i]});
      }
    }
  }
  return out;
}

}  // namespace

RoundResult<PushSumState> push_sum_round(const PushSumState& s, const RoundWeights& w,
                                         const Digraph& g) {
  const std::size_t n = g.size();
  RoundResult<PushSumState> r;
  for (int l = 0; l < 2; ++l) {
    r.next.x[l].resize(n);
    for (std::size_t i = 0; i < n; ++i) r.next.x[l][i] = mix(g, w.p, s.x[l], i);
  }
  r.transmitted = products(g, w.p, s.x);
  return r;
}

RoundResult<DecomposedState> decomposed_round(const DecomposedState& s, const RoundWeights& w,
                                              const Digraph& g) {
  const std::size_t n = g.size();
  RoundResult<DecomposedState> r;
  for (int l = 0; l < 2; ++l) {
    r.next.exchanged[l].resize(n);
    r.next.reserved[l].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      r.next.exchanged[l][i] = mix(g, w.p, s.exchanged[l], i) + s.reserved[l][i];
      r.next.reserved[l][i] = w.alpha[i] * s.exchanged[l][i];
    }
  }
  r.transmitted = products(g, w.p, s.exchanged);
  return r;
}

std::optional<double> estimate_average(double numerator, double denominator) {
  if (std::abs(denominator) < kEstimateGuard) return std::nullopt;
  return numerator / denominator;
}

std::vector<double> uniform_initial_values(std::size_t n, double low, double high,
                                           std::uint64_t seed) {
  std::vector<double> x0(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, i, 0, Purpose::kInitialValue);
    x0[i] = low + (high - low) * uniform_open(rng);
  }
  return x0;
}

// --- Protocol base defaults ------------------------------------------------------

std::vector<std::optional<double>> Protocol::estimates(const ProtocolState& s) const {
  const auto& x = exchanged_values(s);
  std::vector<std::optional<double>> e(x[0].size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = estimate_average(x[0][i], x[1][i]);
  return e;
}

std::array<double, 2> Protocol::conserved_sums(const ProtocolState& s) const {
  std::array<double, 2> sums{0.0, 0.0};
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        for (int l = 0; l < 2; ++l) {
          if constexpr (std::is_same_v<T, PushSumState>) {
            for (double v : st.x[l]) sums[l] += v;
          } else {
            for (std::size_t i = 0; i < st.exchanged[l].size(); ++i) {
              sums[l] += st.exchanged[l][i] + st.reserved[l][i];
            }
          }
        }
      },
      s);
  return sums;
}

namespace {

class PushSumProtocol final : public Protocol {
 public:
  std::string_view name() const override { return kPushSumTag; }
  ProtocolState initialize(const Digraph&, std::span<const double> x0, double,
                           std::uint64_t) const override {
    return init_push_sum(x0);
  }
  RoundWeights sample_weights(const Digraph& g, std::size_t k, double spread,
                              std::uint64_t seed) const override {
    return sample_round_weights(g, k, spread, seed, WeightScheme::kPushSum);
  }
  RoundResult<ProtocolState> step(const ProtocolState& s, const RoundWeights& w,
                                  const Digraph& g) const override {
    auto r = push_sum_round(std::get<PushSumState>(s), w, g);
    return {std::move(r.next), std::move(r.transmitted)};
  }
  bool has_retention() const override { return false; }
};

class DecomposedProtocol final : public Protocol {
 public:
  std::string_view name() const override { return kDecomposedTag; }
  ProtocolState initialize(const Digraph&, std::span<const double> x0, double spread,
                           std::uint64_t seed) const override {
    return init_decomposed(x0, spread, seed);
  }
  RoundWeights sample_weights(const Digraph& g, std::size_t k, double spread,
                              std::uint64_t seed) const override {
    return sample_round_weights(g, k, spread, seed, WeightScheme::kDecomposed);
  }
  RoundResult<ProtocolState> step(const ProtocolState& s, const RoundWeights& w,
                                  const Digraph& g) const override {
    auto r = decomposed_round(std::get<DecomposedState>(s), w, g);
    return {std::move(r.next), std::move(r.transmitted)};
  }
  bool has_retention() const override { return true; }
};

}  // namespace

ProtocolRegistry ProtocolRegistry::with_builtins() {
  ProtocolRegistry r;
  r.add(std::make_unique<PushSumProtocol>());
  r.add(std::make_unique<DecomposedProtocol>());
  return r;
}

void ProtocolRegistry::add(std::unique_ptr<Protocol> protocol) {
  std::string tag(protocol->name());
  protocols_[tag] = std::shared_ptr<const Protocol>(std::move(protocol));
}

const Protocol& ProtocolRegistry::get(std::string_view tag) const {
  const auto it = protocols_.find(tag);
  if (it == protocols_.end()) {
    std::string known;
    for (const auto& t : tags()) known += (known.empty() ? "" : ", ") + t;
    throw ProtocolError("unknown protocol '" + std::string(tag) + "'; registered: " + known);
  }
  return *it->second;
}

bool ProtocolRegistry::contains(std::string_view tag) const {
  return protocols_.find(tag) != protocols_.end();
}

std::vector<std::string> ProtocolRegistry::tags() const {
  std::vector<std::string> out;
  for (const auto& [tag, _] : protocols_) out.push_back(tag);
  return out;
}

Trace run_protocol(const Digraph& g, std::span<const double> x0, std::string_view protocol,
                   std::size_t rounds, double spread, std::uint64_t seed,
                   const ProtocolRegistry& registry) {
  if (!g.usable_for_protocol()) throw ProtocolError("protocol runs need N > 2 nodes");
  if (!is_strongly_connected(g)) {
    throw ProtocolError("digraph is not strongly connected; protocol runs require it");
  }
  if (x0.size() != g.size()) throw ProtocolError("initial value count does not match N");
  const Protocol& proto = registry.get(protocol);

  Trace t;
  t.protocol = std::string(protocol);
  t.graph = g;
  t.x0.assign(x0.begin(), x0.end());
  t.seed = seed;
  t.spread = spread;
  t.initial = proto.initialize(g, x0, spread, seed);
  t.rounds.reserve(rounds);
  for (std::size_t k = 0; k < rounds; ++k) {
    RoundRecord rec;
    rec.k = k;
    rec.weights = proto.sample_weights(g, k, spread, seed);
    auto step = proto.step(t.state_at(k), rec.weights, g);
    rec.transmitted = std::move(step.transmitted);
    rec.next_state = std::move(step.next);
    t.rounds.push_back(std::move(rec));
  }
  return t;
}

std::optional<std::size_t> first_replay_mismatch(const Trace& trace,
                                                 const ProtocolRegistry& registry) {
  const Protocol& proto = registry.get(trace.protocol);
  for (std::size_t k = 0; k < trace.rounds.size(); ++k) {
    const auto& rec = trace.rounds[k];
    const auto step = proto.step(trace.state_at(k), rec.weights, trace.graph);
    if (rec.k != k || step.next != rec.next_state || step.transmitted != rec.transmitted) {
      return k;
    }
  }
  return std::nullopt;
}

}  // namespace pushsum
