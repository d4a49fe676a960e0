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
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pg/engine.hpp"

namespace pg {

struct StreamRecord {
  std::uint64_t t = 0;  // µs since epoch
  Bytes payload;
  bool operator==(const StreamRecord&) const = default;
};

/// Wire framing: per record an 8-byte big-endian timestamp, a 4-byte
/// big-endian payload length, then the payload.
Bytes encode_records(const std::vector<StreamRecord>& records);
void append_record(Bytes& out, std::uint64_t t, std::string_view payload);
/// Throws Error(BadFraming) on truncated or oversized input.
std::vector<StreamRecord> decode_records(std::string_view bytes);

struct StreamSegment {
  std::uint64_t segment_id = 0;
  std::uint64_t t_min = 0;
  std::uint64_t t_max = 0;
  std::uint64_t record_count = 0;
  std::string object_path;
  bool operator==(const StreamSegment&) const = default;
};

struct StreamStat {
  std::uint64_t record_count = 0;
  std::uint64_t segment_count = 0;
  std::optional<std::uint64_t> t_min;
  std::optional<std::uint64_t> t_max;
  bool operator==(const StreamStat&) const = default;
};

/// Time-indexed segments in stream collections. Each segment is a data
/// object <coll>/seg-<id>.tsz carrying stream.* AVUs; the in-memory index is
/// a cache rebuilt from those AVUs on first use.
class StreamStore {
 public:
  explicit StreamStore(Engine& engine);

  StreamSegment ingest(const std::string& actor, const std::string& coll, std::string_view bytes,
                       const std::string& resource = {});
  /// Records with t_lo <= t < t_hi ordered by (t, segment_id, index), framed.
  Bytes read(const std::string& actor, const std::string& coll, std::uint64_t t_lo,
             std::uint64_t t_hi);
  std::vector<StreamRecord> read_records(const std::string& actor, const std::string& coll,
                                         std::uint64_t t_lo, std::uint64_t t_hi);
  StreamStat stat(const std::string& actor, const std::string& coll);

  /// Segments in (t_min, segment_id) order as the live index sees them.
  std::vector<StreamSegment> index(const std::string& coll);
  /// Segments reconstructed from the catalog, ignoring the cache.
  std::vector<StreamSegment> scan_catalog(const std::string& coll) const;
  /// Forgets the cached index of `coll`; the next use rebuilds it.
  void drop_index(const std::string& coll);

 private:
  struct Index {
    std::map<std::uint64_t, std::vector<StreamSegment>> by_t_min;
    std::uint64_t next_id = 1;
  };

  void require_stream(const std::string& coll) const;
  std::shared_ptr<const Index> snapshot(const std::string& coll);
  std::shared_ptr<std::mutex> ingest_mutex(const std::string& coll);

  Engine& engine_;
  std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const Index>> indexes_;
  std::map<std::string, std::shared_ptr<std::mutex>> ingest_mu_;
};

}  // namespace pg
