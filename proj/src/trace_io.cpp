#include "pushsum/trace_io.hpp"

#include <istream>
#include <ostream>

namespace pushsum {

using nlohmann::json;

json state_to_json(const ProtocolState& s) {
  if (const auto* ps = std::get_if<PushSumState>(&s)) {
    return {{"x1", ps->x[0]}, {"x2", ps->x[1]}};
  }
  const auto& d = std::get<DecomposedState>(s);
  return {{"x_alpha_1", d.exchanged[0]},
          {"x_alpha_2", d.exchanged[1]},
          {"x_beta_1", d.reserved[0]},
          {"x_beta_2", d.reserved[1]}};
}

void write_trace(std::ostream& out, const Trace& trace, const json& extra_header) {
  json header = extra_header.is_object() ? extra_header : json::object();
  header["protocol"] = trace.protocol;
  header["n"] = trace.node_count();
  header["seed"] = trace.seed;
  header["M"] = trace.spread;
  header["x0"] = trace.x0;
  header["graph"] = to_json(trace.graph);
  header["initial_state"] = state_to_json(trace.initial);
  out << header.dump() << '\n';

  for (const auto& rec : trace.rounds) {
    json transmitted = json::array();
    for (const auto& t : rec.transmitted) {
      transmitted.push_back(
          {{"from", t.from.value()}, {"to", t.to.value()}, {"l", t.component}, {"value", t.value}});
    }
    const auto flat = rec.weights.p.data();
    json line = {{"k", rec.k},
                 {"p", std::vector<double>(flat.begin(), flat.end())},
                 {"alpha", rec.weights.alpha},
                 {"state", state_to_json(rec.next_state)},
                 {"transmitted", std::move(transmitted)}};
    out << line.dump() << '\n';
  }
}

namespace {

std::vector<double> vec(const json& j, const char* key, std::size_t n, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw TraceFormatError(line, std::string("missing array \"") + key + "\"");
  }
  const auto& a = j.at(key);
  if (a.size() != n) {
    throw TraceFormatError(line, std::string("\"") + key + "\" has " + std::to_string(a.size()) +
                                     " entries, expected " + std::to_string(n));
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& e : a) {
    if (!e.is_number()) throw TraceFormatError(line, std::string("non-numeric entry in ") + key);
    v.push_back(e.get<double>());
  }
  return v;
}

ProtocolState state_from_json(const json& j, bool decomposed, std::size_t n, std::size_t line) {
  if (!j.is_object()) throw TraceFormatError(line, "state must be an object");
  if (!decomposed) {
    PushSumState s;
    s.x[0] = vec(j, "x1", n, line);
    s.x[1] = vec(j, "x2", n, line);
    return s;
  }
  DecomposedState s;
  s.exchanged[0] = vec(j, "x_alpha_1", n, line);
  s.exchanged[1] = vec(j, "x_alpha_2", n, line);
  s.reserved[0] = vec(j, "x_beta_1", n, line);
  s.reserved[1] = vec(j, "x_beta_2", n, line);
  return s;
}

json parse_line(const std::string& text, std::size_t line) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw TraceFormatError(line, "not a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw TraceFormatError(line, std::string("missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw TraceFormatError(line, std::string("bad type for \"") + key + "\"");
  }
}

}  // namespace

json read_trace_header(std::istream& in) {
  std::string text;
  if (!std::getline(in, text)) throw TraceFormatError(0, "empty trace");
  return parse_line(text, 0);
}

Trace read_trace(std::istream& in) {
  const json header = read_trace_header(in);
  Trace t;
  t.protocol = field<std::string>(header, "protocol", 0);
  const auto n = field<std::size_t>(header, "n", 0);
  t.seed = field<std::uint64_t>(header, "seed", 0);
  t.spread = field<double>(header, "M", 0);
  t.x0 = vec(header, "x0", n, 0);
  try {
    t.graph = digraph_from_json(header.at("graph"));
  } catch (const std::exception& e) {
    throw TraceFormatError(0, std::string("bad graph: ") + e.what());
  }
  if (t.graph.size() != n) throw TraceFormatError(0, "graph size disagrees with n");
  // Anything that is not plain push-sum is read with the substate layout.
  const bool decomposed = header.contains("initial_state") &&
                          header.at("initial_state").contains("x_alpha_1");
  if (!header.contains("initial_state")) throw TraceFormatError(0, "missing \"initial_state\"");
  t.initial = state_from_json(header.at("initial_state"), decomposed, n, 0);

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const json j = parse_line(text, line);
    RoundRecord rec;
    rec.k = field<std::size_t>(j, "k", line);
    if (rec.k != line - 1) throw TraceFormatError(line, "round index out of sequence");
    const auto flat = vec(j, "p", n * n, line);
    rec.weights.p = Matrix(n, n);
    std::copy(flat.begin(), flat.end(), rec.weights.p.data().begin());
    rec.weights.alpha = vec(j, "alpha", n, line);
    if (!j.contains("state")) throw TraceFormatError(line, "missing \"state\"");
    rec.next_state = state_from_json(j.at("state"), decomposed, n, line);
    if (!j.contains("transmitted") || !j.at("transmitted").is_array()) {
      throw TraceFormatError(line, "missing array \"transmitted\"");
    }
    for (const auto& tj : j.at("transmitted")) {
      if (!tj.is_object()) throw TraceFormatError(line, "transmission must be an object");
      const auto from = field<std::size_t>(tj, "from", line);
      const auto to = field<std::size_t>(tj, "to", line);
      const auto l = field<int>(tj, "l", line);
      if (from < 1 || from > n || to < 1 || to > n || (l != 1 && l != 2)) {
        throw TraceFormatError(line, "transmission endpoint or component out of range");
      }
      rec.transmitted.push_back({NodeId(from), NodeId(to), l, field<double>(tj, "value", line)});
    }
    t.rounds.push_back(std::move(rec));
  }
  return t;
}

}  // namespace pushsum
