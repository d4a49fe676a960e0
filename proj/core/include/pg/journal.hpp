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
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace pg {

/// One line of journal.log: {"seq":n,"op":"…","args":{…},"when":µs}.
struct JournalRecord {
  std::uint64_t seq = 0;
  std::string op;
  nlohmann::json args = nlohmann::json::object();
  std::int64_t when = 0;
  bool operator==(const JournalRecord&) const = default;
};

std::string format_journal_line(const JournalRecord& rec);
/// Throws Error(CorruptJournal) on malformed input.
JournalRecord parse_journal_line(std::string_view line);

/// Checks records are contiguous from 1. Throws Error(CorruptJournal).
void require_contiguous(const std::vector<JournalRecord>& records);

/// Append-only journal plus periodic full-state snapshots in one directory.
///
///   <dir>/journal.log          one JSON record per line
///   <dir>/snapshot-<seq>.json  {"seq":n,"sha256":"…","state":{…}}
///
/// A final line without a trailing newline is a torn write from a crash; it
/// was never acknowledged, so recovery drops it and truncates the file.
class Journal {
 public:
  static constexpr const char* kJournalFile = "journal.log";

  struct Recovered {
    std::optional<nlohmann::json> snapshot_state;
    std::uint64_t snapshot_seq = 0;
    std::vector<JournalRecord> records;  // every record, contiguous from 1
  };

  Journal(std::filesystem::path dir, bool sync_each_write);
  ~Journal();
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  Recovered recover();
  void append(const JournalRecord& rec);
  void write_snapshot(std::uint64_t seq, const nlohmann::json& state);
  void flush();

  const std::filesystem::path& dir() const noexcept { return dir_; }

  static std::vector<JournalRecord> read_records(const std::filesystem::path& file);

 private:
  void open_for_append();

  std::filesystem::path dir_;
  bool sync_;
  std::FILE* out_ = nullptr;
};

}  // namespace pg
