#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pushsum/protocol.hpp"

namespace pushsum {

/// Malformed trace input. `line()` is the 0-based JSON-lines record index
/// (0 = header, r + 1 = round r).
class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json state_to_json(const ProtocolState& s);

/// Line 0: {protocol, n, seed, M, x0, graph, initial_state, ...extra}.
/// Line r + 1: {k, p (row-major N x N), alpha, state, transmitted}.
/// Keys in `extra_header` are merged into the header (e.g. config_hash).
void write_trace(std::ostream& out, const Trace& trace,
                 const nlohmann::json& extra_header = nlohmann::json::object());

Trace read_trace(std::istream& in);

/// Header object as stored, for callers that need the extra keys.
nlohmann::json read_trace_header(std::istream& in);

}  // namespace pushsum
