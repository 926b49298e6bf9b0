#include "pushsum/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pushsum/kernels.hpp"

namespace pushsum {

Matrix augment(const RoundWeights& w) {
  const std::size_t n = w.p.rows();
  Matrix m(2 * n, 2 * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) m(r, c) = w.p(r, c);
    m(r, n + r) = 1.0;
    m(n + r, r) = w.alpha.empty() ? 0.0 : w.alpha[r];
  }
  return m;
}

Matrix transition_matrix(const RoundWeights& w, bool retention) {
  return retention ? augment(w) : w.p;
}

std::vector<double> stacked_state(const ProtocolState& s, int component) {
  if (const auto* ps = std::get_if<PushSumState>(&s)) return ps->x[component];
  const auto& d = std::get<DecomposedState>(s);
  std::vector<double> v = d.exchanged[component];
  v.insert(v.end(), d.reserved[component].begin(), d.reserved[component].end());
  return v;
}

double ergodicity_coefficient(const Matrix& m, Execution exec) {
  const auto sums = exec == Execution::kSerial ? kernels::serial::column_sums(m)
                                               : kernels::parallel::column_sums(m);
  for (std::size_t j = 0; j < sums.size(); ++j) {
    if (std::abs(sums[j] - 1.0) > kColumnSumTolerance) {
      throw AnalysisError("column " + std::to_string(j + 1) + " sums to " +
                          std::to_string(sums[j]) + ", not 1");
    }
  }
  return exec == Execution::kSerial ? kernels::serial::max_row_spread(m)
                                    : kernels::parallel::max_row_spread(m);
}

std::optional<std::size_t> ErgodicityReport::convergence_round(double tol) const {
  std::optional<std::size_t> round;
  for (std::size_t k = delta.size(); k-- > 0;) {
    if (delta[k] >= tol) break;
    round = k + 1;
  }
  return round;
}

double ErgodicityReport::worst_bound_excess() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < delta.size(); ++k) worst = std::max(worst, delta[k] - bound[k]);
  return worst;
}

namespace {

double min_positive(const Matrix& m) {
  double eps = std::numeric_limits<double>::infinity();
  for (double v : m.data()) {
    if (v > 0.0) eps = std::min(eps, v);
  }
  return eps;
}

}  // namespace

ErgodicityReport forward_product(const Trace& trace, std::size_t k, Execution exec,
                                 const ProtocolRegistry& registry) {
  if (k == 0 || trace.rounds.size() < k + 1) {
    throw AnalysisError("forward_product needs rounds 1.." + std::to_string(k) +
                        " in the trace, which has " + std::to_string(trace.rounds.size()));
  }
  const bool retention = registry.get(trace.protocol).has_retention();
  ErgodicityReport rep;
  rep.nodes = trace.node_count();
  rep.delta.reserve(k);
  rep.bound.reserve(k);
  double eps = std::numeric_limits<double>::infinity();
  const auto n = static_cast<double>(rep.nodes);
  for (std::size_t t = 1; t <= k; ++t) {
    const Matrix step = transition_matrix(trace.rounds[t].weights, retention);
    eps = std::min(eps, min_positive(step));
    if (t == 1) {
      rep.product = step;
    } else {
      rep.product = exec == Execution::kSerial ? kernels::serial::multiply(step, rep.product)
                                               : kernels::parallel::multiply(step, rep.product);
    }
    rep.delta.push_back(ergodicity_coefficient(rep.product, exec));
    rep.epsilon_running.push_back(eps);
    rep.bound.push_back(std::pow(1.0 - std::pow(eps, n), std::floor(static_cast<double>(t) / n)));
  }
  rep.epsilon = eps;
  return rep;
}

std::vector<double> limit_column(const Matrix& product, std::size_t column) {
  std::vector<double> v(product.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < product.rows(); ++r) total += product(r, column);
  for (std::size_t r = 0; r < product.rows(); ++r) v[r] = product(r, column) / total;
  return v;
}

std::optional<std::size_t> RunMetrics::convergence_round(double tol) const {
  std::optional<std::size_t> round;
  for (std::size_t k = node_error.size(); k-- > 0;) {
    const auto worst = max_abs_error(k);
    if (!worst || undefined[k] != 0 || *worst >= tol) break;
    round = k;
  }
  return round;
}

std::optional<double> RunMetrics::max_abs_error(std::size_t k) const {
  std::optional<double> worst;
  for (const auto& e : node_error.at(k)) {
    if (e) worst = std::max(worst.value_or(0.0), std::abs(*e));
  }
  return worst;
}

RunMetrics run_metrics(const Trace& trace, const ProtocolRegistry& registry) {
  const Protocol& proto = registry.get(trace.protocol);
  RunMetrics m;
  double total = 0.0;
  for (double v : trace.x0) total += v;
  m.mean = total / static_cast<double>(trace.x0.size());

  const std::size_t rounds = trace.rounds.size();
  m.mse.reserve(rounds + 1);
  for (std::size_t k = 0; k <= rounds; ++k) {
    const auto est = proto.estimates(trace.state_at(k));
    std::vector<std::optional<double>> err(est.size());
    double sq = 0.0;
    std::size_t defined = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
      if (!est[i]) continue;
      err[i] = *est[i] - m.mean;
      sq += *err[i] * *err[i];
      ++defined;
    }
    m.undefined.push_back(est.size() - defined);
    m.mse.push_back(defined == 0 ? std::nullopt
                                 : std::optional<double>(sq / static_cast<double>(defined)));
    m.node_error.push_back(std::move(err));
  }
  return m;
}

std::vector<std::optional<double>> reserved_ratios(const Trace& trace, std::size_t k) {
  const auto& d = std::get<DecomposedState>(trace.state_at(k));
  std::vector<std::optional<double>> r(d.reserved[0].size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = estimate_average(d.reserved[0][i], d.reserved[1][i]);
  }
  return r;
}

}  // namespace pushsum
