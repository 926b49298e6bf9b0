#include <gtest/gtest.h>

#include <sstream>

#include "pushsum/trace_io.hpp"

namespace pushsum {
namespace {

Trace sample(std::string_view protocol, std::size_t rounds = 12) {
  const auto g = random_strongly_connected(6, 0.3, 3);
  return run_protocol(g, uniform_initial_values(6, 0.0, 50.0, 3), protocol, rounds, 100.0, 3);
}

std::vector<std::string> lines_of(const Trace& t) {
  std::stringstream ss;
  write_trace(ss, t);
  std::vector<std::string> out;
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::string joined(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::size_t failing_line(const std::string& text) {
  std::stringstream ss(text);
  try {
    read_trace(ss);
  } catch (const TraceFormatError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no error raised";
  return 9999;
}

TEST(TraceIo, RoundTripIsExact) {
  for (auto tag : {kPushSumTag, kDecomposedTag}) {
    const auto t = sample(tag);
    std::stringstream ss;
    write_trace(ss, t);
    EXPECT_EQ(read_trace(ss), t) << tag;
  }
}

TEST(TraceIo, OneHeaderAndOneLinePerRound) {
  const auto lines = lines_of(sample(kDecomposedTag, 7));
  ASSERT_EQ(lines.size(), 8u);
  const auto header = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(header.at("protocol"), "decomposed");
  EXPECT_EQ(header.at("n"), 6);
  const auto r3 = nlohmann::json::parse(lines[4]);
  EXPECT_EQ(r3.at("k"), 3);
  EXPECT_EQ(r3.at("p").size(), 36u);
  EXPECT_TRUE(r3.at("state").contains("x_beta_1"));
}

TEST(TraceIo, ExtraHeaderKeysArePreserved) {
  std::stringstream ss;
  write_trace(ss, sample(kPushSumTag, 3), {{"config_hash", "abc"}});
  EXPECT_EQ(read_trace_header(ss).at("config_hash"), "abc");
}

TEST(TraceIo, NamesTheMalformedLine) {
  auto lines = lines_of(sample(kPushSumTag, 6));
  auto broken = lines;
  broken[4] = "{not json";
  EXPECT_EQ(failing_line(joined(broken)), 4u);

  broken = lines;
  auto rec = nlohmann::json::parse(broken[2]);
  rec["p"].erase(rec["p"].begin());
  broken[2] = rec.dump();
  EXPECT_EQ(failing_line(joined(broken)), 2u);

  broken = lines;
  rec = nlohmann::json::parse(broken[5]);
  rec["k"] = 9;
  broken[5] = rec.dump();
  EXPECT_EQ(failing_line(joined(broken)), 5u);

  broken = lines;
  auto head = nlohmann::json::parse(broken[0]);
  head.erase("x0");
  broken[0] = head.dump();
  EXPECT_EQ(failing_line(joined(broken)), 0u);

  EXPECT_EQ(failing_line(""), 0u);
}

TEST(TraceIo, UnknownProtocolStillParses) {
  // The file format does not depend on the registry; unknown tags surface later.
  auto lines = lines_of(sample(kPushSumTag, 2));
  auto head = nlohmann::json::parse(lines[0]);
  head["protocol"] = "something_else";
  lines[0] = head.dump();
  std::stringstream ss(joined(lines));
  EXPECT_EQ(read_trace(ss).protocol, "something_else");
}

}  // namespace
}  // namespace pushsum
