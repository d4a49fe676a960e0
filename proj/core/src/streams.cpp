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
#include "pg/streams.hpp"

#include <charconv>
#include <cstdio>
#include <queue>

#include "pg/error.hpp"

namespace pg {

namespace {

constexpr std::size_t kHeader = 12;

void put_be(Bytes& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_be(std::string_view in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | static_cast<unsigned char>(in[at + i]);
  return v;
}

std::optional<std::uint64_t> avu_u64(const std::vector<AvuTriple>& avus, std::string_view name) {
  for (const auto& t : avus) {
    if (t.attr_name != name) continue;
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(t.attr_value.data(), t.attr_value.data() + t.attr_value.size(), v);
    if (ec == std::errc() && end == t.attr_value.data() + t.attr_value.size()) return v;
  }
  return std::nullopt;
}

std::string segment_path(const std::string& coll, std::uint64_t id) {
  char name[40];
  std::snprintf(name, sizeof name, "seg-%020llu.tsz", static_cast<unsigned long long>(id));
  return join_path(coll, name);
}

}  // namespace

void append_record(Bytes& out, std::uint64_t t, std::string_view payload) {
  if (payload.size() > 0xffffffffULL) throw Error(Errc::BadFraming, "payload longer than 2^32-1 bytes");
  put_be(out, t, 8);
  put_be(out, payload.size(), 4);
  out.append(payload);
}

Bytes encode_records(const std::vector<StreamRecord>& records) {
  Bytes out;
  for (const auto& r : records) append_record(out, r.t, r.payload);
  return out;
}

std::vector<StreamRecord> decode_records(std::string_view bytes) {
  std::vector<StreamRecord> out;
  std::size_t at = 0;
  while (at < bytes.size()) {
    if (bytes.size() - at < kHeader)
      throw Error(Errc::BadFraming, "truncated record header at byte " + std::to_string(at));
    const std::uint64_t t = get_be(bytes, at, 8);
    const std::uint64_t len = get_be(bytes, at + 8, 4);
    at += kHeader;
    if (bytes.size() - at < len)
      throw Error(Errc::BadFraming, "truncated payload at byte " + std::to_string(at));
    out.push_back({t, Bytes(bytes.substr(at, len))});
    at += len;
  }
  return out;
}

StreamStore::StreamStore(Engine& engine) : engine_(engine) {}

void StreamStore::require_stream(const std::string& coll) const {
  auto c = engine_.catalog().collection(coll);
  if (!c) throw Error(Errc::NoSuchPath, "no collection '" + coll + "'", {coll});
  if (c->kind != CollectionKind::stream)
    throw Error(Errc::NotAStreamCollection, "'" + coll + "' is not a stream collection", {coll});
}

std::vector<StreamSegment> StreamStore::scan_catalog(const std::string& coll) const {
  std::vector<StreamSegment> out;
  const Catalog& cat = engine_.catalog();
  for (const auto& path : cat.list_objects(coll)) {
    const auto avus = cat.avus(path);
    auto id = avu_u64(avus, "stream.segment_id");
    auto lo = avu_u64(avus, "stream.t_min");
    auto hi = avu_u64(avus, "stream.t_max");
    auto n = avu_u64(avus, "stream.count");
    if (!id || !lo || !hi || !n) continue;
    out.push_back({*id, *lo, *hi, *n, path});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.t_min, a.segment_id) < std::tie(b.t_min, b.segment_id);
  });
  return out;
}

std::shared_ptr<const StreamStore::Index> StreamStore::snapshot(const std::string& coll) {
  {
    std::shared_lock lock(mu_);
    if (auto it = indexes_.find(coll); it != indexes_.end()) return it->second;
  }
  auto idx = std::make_shared<Index>();
  for (auto& seg : scan_catalog(coll)) {
    idx->next_id = std::max(idx->next_id, seg.segment_id + 1);
    idx->by_t_min[seg.t_min].push_back(std::move(seg));
  }
  std::unique_lock lock(mu_);
  auto [it, inserted] = indexes_.emplace(coll, std::move(idx));
  return it->second;
}

std::shared_ptr<std::mutex> StreamStore::ingest_mutex(const std::string& coll) {
  std::unique_lock lock(mu_);
  auto& m = ingest_mu_[coll];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

void StreamStore::drop_index(const std::string& coll) {
  std::unique_lock lock(mu_);
  indexes_.erase(coll);
}

std::vector<StreamSegment> StreamStore::index(const std::string& coll) {
  std::vector<StreamSegment> out;
  for (const auto& [_, segs] : snapshot(coll)->by_t_min)
    out.insert(out.end(), segs.begin(), segs.end());
  return out;
}

StreamSegment StreamStore::ingest(const std::string& actor, const std::string& coll,
                                  std::string_view bytes, const std::string& resource) {
  require_stream(coll);
  auto records = decode_records(bytes);
  if (records.empty()) throw Error(Errc::BadFraming, "segment holds no records");
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].t < records[i - 1].t)
      throw Error(Errc::TimestampsDecreasing,
                  "record " + std::to_string(i) + " goes back in time (" +
                      std::to_string(records[i].t) + " < " + std::to_string(records[i - 1].t) + ")");
  Catalog& cat = engine_.catalog();
  if (!cat.check_access(coll, actor, Perm::write))
    throw Error(Errc::Denied, "no write permission on '" + coll + "'", {coll});

  PepContext ctx = engine_.context_for(actor, "stream.ingest");
  ctx.set("coll.path", coll);
  if (!resource.empty()) ctx.set("resc.name", resource);
  Verdict pre = engine_.fire_pep("pep.stream.ingest.pre", ctx);
  if (pre.kind == Verdict::Kind::deny) throw Error(Errc::Denied, pre.message, {pre.rule});
  if (pre.kind == Verdict::Kind::error)
    throw Error(Errc::PolicyError, "rule " + pre.rule + " failed: " + pre.message, {pre.rule});

  StreamSegment seg;
  {
    auto mu = ingest_mutex(coll);
    std::lock_guard serial(*mu);
    auto current = snapshot(coll);
    seg.segment_id = current->next_id;
    seg.t_min = records.front().t;
    seg.t_max = records.back().t;
    seg.record_count = records.size();
    seg.object_path = segment_path(coll, seg.segment_id);
    // Object and index AVUs land in one catalog record, so a failed ingest
    // leaves nothing behind for scan_catalog() to find.
    engine_.store_object(actor, seg.object_path, bytes, resource,
                         {{"stream.segment_id", std::to_string(seg.segment_id), ""},
                          {"stream.t_min", std::to_string(seg.t_min), ""},
                          {"stream.t_max", std::to_string(seg.t_max), ""},
                          {"stream.count", std::to_string(seg.record_count), ""}});
    auto next = std::make_shared<Index>(*current);
    next->by_t_min[seg.t_min].push_back(seg);
    next->next_id = seg.segment_id + 1;
    std::unique_lock lock(mu_);
    indexes_[coll] = std::move(next);
  }
  engine_.fire_pep("pep.stream.ingest.post", ctx);
  return seg;
}

std::vector<StreamRecord> StreamStore::read_records(const std::string& actor, const std::string& coll,
                                                    std::uint64_t t_lo, std::uint64_t t_hi) {
  if (t_lo >= t_hi)
    throw Error(Errc::BadInterval, "empty or inverted interval [" + std::to_string(t_lo) + ", " +
                                       std::to_string(t_hi) + ")");
  require_stream(coll);
  if (!engine_.catalog().check_access(coll, actor, Perm::read))
    throw Error(Errc::Denied, "no read permission on '" + coll + "'", {coll});
  auto idx = snapshot(coll);

  struct Source {
    std::uint64_t segment_id;
    std::vector<StreamRecord> records;
    std::size_t pos = 0;
  };
  std::vector<Source> sources;
  for (auto it = idx->by_t_min.begin(); it != idx->by_t_min.end() && it->first < t_hi; ++it) {
    for (const auto& seg : it->second) {
      if (seg.t_max < t_lo) continue;
      Source s{seg.segment_id, decode_records(engine_.read_object(seg.object_path))};
      if (seg.t_min < t_lo || seg.t_max >= t_hi) {
        // Boundary segment: keep only the records inside the interval.
        std::vector<StreamRecord> kept;
        for (auto& r : s.records)
          if (r.t >= t_lo && r.t < t_hi) kept.push_back(std::move(r));
        s.records = std::move(kept);
      }
      if (!s.records.empty()) sources.push_back(std::move(s));
    }
  }

  // k-way merge on (t, segment_id, in-segment index).
  auto later = [&](std::size_t a, std::size_t b) {
    const Source& x = sources[a];
    const Source& y = sources[b];
    return std::tie(x.records[x.pos].t, x.segment_id) > std::tie(y.records[y.pos].t, y.segment_id);
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> heap(later);
  for (std::size_t i = 0; i < sources.size(); ++i) heap.push(i);
  std::vector<StreamRecord> out;
  while (!heap.empty()) {
    std::size_t i = heap.top();
    heap.pop();
    Source& s = sources[i];
    out.push_back(std::move(s.records[s.pos++]));
    if (s.pos < s.records.size()) heap.push(i);
  }
  return out;
}

Bytes StreamStore::read(const std::string& actor, const std::string& coll, std::uint64_t t_lo,
                        std::uint64_t t_hi) {
  return encode_records(read_records(actor, coll, t_lo, t_hi));
}

StreamStat StreamStore::stat(const std::string& actor, const std::string& coll) {
  require_stream(coll);
  if (!engine_.catalog().check_access(coll, actor, Perm::read))
    throw Error(Errc::Denied, "no read permission on '" + coll + "'", {coll});
  StreamStat st;
  for (const auto& [_, segs] : snapshot(coll)->by_t_min) {
    for (const auto& seg : segs) {
      ++st.segment_count;
      st.record_count += seg.record_count;
      st.t_min = st.t_min ? std::min(*st.t_min, seg.t_min) : seg.t_min;
      st.t_max = st.t_max ? std::max(*st.t_max, seg.t_max) : seg.t_max;
    }
  }
  return st;
}

}  // namespace pg
