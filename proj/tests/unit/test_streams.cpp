// Copyright 2026 The pgzone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "pg/error.hpp"
#include "pg/streams.hpp"

namespace {

using namespace pg;
using pgtest::kAdmin;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Internal;
}

std::string frame(const std::vector<std::pair<std::uint64_t, std::string>>& recs) {
  std::string out;
  for (const auto& [t, p] : recs) out += pgtest::oracle_frame(t, p);
  return out;
}

std::vector<std::uint64_t> times(const std::vector<StreamRecord>& recs) {
  std::vector<std::uint64_t> out;
  for (const auto& r : recs) out.push_back(r.t);
  return out;
}

class StreamTest : public ::testing::Test {
 protected:
  void SetUp() override { g.engine.make_collection(kAdmin, "/sensors", CollectionKind::stream, "alice"); }
  pgtest::Grid g;
  StreamStore& s = g.streams;
};

TEST(Framing, MatchesIndependentEncoder) {
  const std::vector<StreamRecord> recs = {{1, "a"}, {0x0102030405060708ull, ""}, {7, std::string(300, 'z')}};
  std::string want;
  for (const auto& r : recs) want += pgtest::oracle_frame(r.t, r.payload);
  EXPECT_EQ(encode_records(recs), want);
  EXPECT_EQ(decode_records(want), recs);
  EXPECT_EQ(encode_records({}), "");
}

TEST(Framing, TruncationIsBadFraming) {
  const std::string good = pgtest::oracle_frame(5, "hello");
  for (std::size_t cut = 1; cut < good.size(); ++cut)
    EXPECT_EQ(code_of([&] { decode_records(good.substr(0, cut)); }), Errc::BadFraming) << cut;
}

TEST_F(StreamTest, IngestRecordsBounds) {
  const StreamSegment seg = s.ingest("alice", "/sensors", frame({{10, "a"}, {20, "b"}, {30, "c"}}));
  EXPECT_EQ(seg.t_min, 10u);
  EXPECT_EQ(seg.t_max, 30u);
  EXPECT_EQ(seg.record_count, 3u);
  EXPECT_EQ(seg.segment_id, 1u);
  const auto avus = g.catalog.avus(seg.object_path);
  EXPECT_NE(std::find(avus.begin(), avus.end(), AvuTriple{"stream.t_min", "10", ""}), avus.end());
  EXPECT_NE(std::find(avus.begin(), avus.end(), AvuTriple{"stream.t_max", "30", ""}), avus.end());
}

TEST_F(StreamTest, IngestRejections) {
  const CatalogState before = pgtest::without_audit(g.catalog.state());
  EXPECT_EQ(code_of([&] { s.ingest("alice", "/sensors", frame({{20, "a"}, {10, "b"}})); }),
            Errc::TimestampsDecreasing);
  EXPECT_EQ(code_of([&] { s.ingest("alice", "/sensors", "\x00\x01"); }), Errc::BadFraming);
  EXPECT_EQ(code_of([&] { s.ingest("alice", "/home", frame({{1, "a"}})); }), Errc::NotAStreamCollection);
  EXPECT_EQ(code_of([&] { s.ingest("bob", "/sensors", frame({{1, "a"}})); }), Errc::Denied);
  g.engine.add_rules(kAdmin, "rule closed on pep.stream.ingest.pre do deny(\"closed\")");
  EXPECT_EQ(code_of([&] { s.ingest("alice", "/sensors", frame({{1, "a"}})); }), Errc::Denied);
  g.engine.remove_rule(kAdmin, "closed");
  auto after = pgtest::without_audit(g.catalog.state());
  after.rule_base_version = before.rule_base_version;
  EXPECT_EQ(after, before);
  EXPECT_EQ(s.stat("alice", "/sensors").record_count, 0u);
}

TEST_F(StreamTest, PlainPutIsRefusedInStreamCollections) {
  EXPECT_EQ(code_of([&] { g.engine.put("alice", "/sensors/raw.bin", "x"); }), Errc::WrongKind);
}

TEST_F(StreamTest, ReadExamples) {
  s.ingest("alice", "/sensors", frame({{10, "a"}, {20, "b"}, {30, "c"}}));
  EXPECT_EQ(times(s.read_records("alice", "/sensors", 15, 35)), (std::vector<std::uint64_t>{20, 30}));
  EXPECT_EQ(s.read("alice", "/sensors", 0, 31), frame({{10, "a"}, {20, "b"}, {30, "c"}}));
  EXPECT_TRUE(s.read_records("alice", "/sensors", 5, 10).empty());
  EXPECT_EQ(s.read("alice", "/sensors", 5, 10), "");
  EXPECT_EQ(code_of([&] { s.read("alice", "/sensors", 10, 10); }), Errc::BadInterval);
  EXPECT_EQ(code_of([&] { s.read("alice", "/sensors", 11, 10); }), Errc::BadInterval);
  EXPECT_EQ(code_of([&] { s.read("bob", "/sensors", 0, 100); }), Errc::Denied);
}

TEST_F(StreamTest, OverlapTiesBreakBySegmentThenIndex) {
  s.ingest("alice", "/sensors", frame({{10, "s1a"}, {20, "s1b"}, {20, "s1c"}}));
  s.ingest("alice", "/sensors", frame({{5, "s2a"}, {20, "s2b"}}));
  const auto recs = s.read_records("alice", "/sensors", 0, 100);
  std::vector<std::string> payloads;
  for (const auto& r : recs) payloads.push_back(r.payload);
  EXPECT_EQ(payloads, (std::vector<std::string>{"s2a", "s1a", "s1b", "s1c", "s2b"}));
}

TEST_F(StreamTest, StatAggregates) {
  StreamStat empty = s.stat("alice", "/sensors");
  EXPECT_EQ(empty.record_count, 0u);
  EXPECT_FALSE(empty.t_min);
  EXPECT_FALSE(empty.t_max);
  s.ingest("alice", "/sensors", frame({{10, "a"}, {20, "b"}, {30, "c"}}));
  s.ingest("alice", "/sensors", frame({{5, "a"}, {25, "b"}, {26, "c"}}));
  const StreamStat st = s.stat("alice", "/sensors");
  EXPECT_EQ(st.record_count, 6u);
  EXPECT_EQ(st.segment_count, 2u);
  EXPECT_EQ(*st.t_min, 5u);
  EXPECT_EQ(*st.t_max, 30u);
  EXPECT_EQ(code_of([&] { s.stat("alice", "/home"); }), Errc::NotAStreamCollection);
}

TEST_F(StreamTest, RandomSegmentsAgainstOracle) {
  pgtest::Rng rng(123);
  const auto segments = pgtest::random_segments(rng, 100, 1000, 100000);
  std::uint64_t total = 0, lo = UINT64_MAX, hi = 0;
  for (const auto& seg : segments) {
    s.ingest("alice", "/sensors", encode_records(seg));
    total += seg.size();
    lo = std::min(lo, seg.front().t);
    hi = std::max(hi, seg.back().t);
  }
  const StreamStat st = s.stat("alice", "/sensors");
  EXPECT_EQ(st.record_count, total);
  EXPECT_EQ(st.segment_count, segments.size());
  EXPECT_EQ(*st.t_min, lo);
  EXPECT_EQ(*st.t_max, hi);
  EXPECT_EQ(s.read("alice", "/sensors", 0, hi + 1), pgtest::stream_oracle(segments, 0, hi + 1));
  for (int i = 0; i < 100; ++i) {
    std::uint64_t a = pgtest::uniform(rng, 0, hi + 10), b = pgtest::uniform(rng, 0, hi + 10);
    if (a == b) ++b;
    if (a > b) std::swap(a, b);
    ASSERT_EQ(s.read("alice", "/sensors", a, b), pgtest::stream_oracle(segments, a, b)) << a << ".." << b;
  }
}

TEST_F(StreamTest, IndexRebuildChangesNothing) {
  pgtest::Rng rng(8);
  const auto segments = pgtest::random_segments(rng, 40, 400, 5000);
  for (const auto& seg : segments) s.ingest("alice", "/sensors", encode_records(seg));
  const auto live = s.index("/sensors");
  EXPECT_EQ(s.scan_catalog("/sensors"), live);
  EXPECT_EQ(live.size(), segments.size());
  const std::string before = s.read("alice", "/sensors", 0, 6000);
  s.drop_index("/sensors");
  EXPECT_EQ(s.index("/sensors"), live);
  EXPECT_EQ(s.read("alice", "/sensors", 0, 6000), before);
  // A second store over the same catalog rebuilds from AVUs alone.
  StreamStore fresh(g.engine);
  EXPECT_EQ(fresh.read("alice", "/sensors", 0, 6000), before);
  const auto seg = fresh.ingest("alice", "/sensors", frame({{1, "x"}}));
  EXPECT_EQ(seg.segment_id, segments.size() + 1);
}

TEST_F(StreamTest, IntervalPartitionProperty) {
  pgtest::Rng rng(55);
  const auto segments = pgtest::random_segments(rng, 30, 500, 2000);
  for (const auto& seg : segments) s.ingest("alice", "/sensors", encode_records(seg));
  for (int i = 0; i < 100; ++i) {
    std::uint64_t v[3] = {pgtest::uniform(rng, 0, 2100), pgtest::uniform(rng, 0, 2100), pgtest::uniform(rng, 0, 2100)};
    std::sort(v, v + 3);
    if (v[0] == v[1] || v[1] == v[2]) continue;
    ASSERT_EQ(s.read("alice", "/sensors", v[0], v[1]) + s.read("alice", "/sensors", v[1], v[2]),
              s.read("alice", "/sensors", v[0], v[2]));
  }
}

}  // namespace
