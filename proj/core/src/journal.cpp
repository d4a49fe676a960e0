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
#include "pg/journal.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pg/error.hpp"
#include "pg/util.hpp"

namespace pg {

namespace fs = std::filesystem;

std::string format_journal_line(const JournalRecord& rec) {
  nlohmann::json j = {{"seq", rec.seq}, {"op", rec.op}, {"args", rec.args}, {"when", rec.when}};
  return j.dump() + "\n";
}

JournalRecord parse_journal_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(Errc::CorruptJournal, "malformed journal line");
  JournalRecord rec;
  try {
    rec.seq = j.at("seq").get<std::uint64_t>();
    rec.op = j.at("op").get<std::string>();
    rec.args = j.at("args");
    rec.when = j.at("when").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptJournal, std::string("malformed journal record: ") + e.what());
  }
  if (rec.op.empty() || !rec.args.is_object())
    throw Error(Errc::CorruptJournal, "journal record missing op or args");
  return rec;
}

void require_contiguous(const std::vector<JournalRecord>& records) {
  std::uint64_t expect = 1;
  for (const auto& r : records) {
    if (r.seq != expect)
      throw Error(Errc::CorruptJournal, "journal gap: expected seq " + std::to_string(expect) +
                                            ", found " + std::to_string(r.seq));
    ++expect;
  }
}

Journal::Journal(fs::path dir, bool sync_each_write) : dir_(std::move(dir)), sync_(sync_each_write) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::Io, "cannot create journal dir " + dir_.string() + ": " + ec.message());
}

Journal::~Journal() {
  if (out_) std::fclose(out_);
}

std::vector<JournalRecord> Journal::read_records(const fs::path& file) {
  std::vector<JournalRecord> out;
  std::ifstream in(file, std::ios::binary);
  if (!in) return out;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) out.push_back(parse_journal_line(line));
    pos = nl + 1;
  }
  require_contiguous(out);
  return out;
}

Journal::Recovered Journal::recover() {
  Recovered rec;
  const fs::path file = dir_ / kJournalFile;

  if (fs::exists(file)) {
    // Drop a torn tail before anything else appends behind it.
    std::ifstream in(file, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    auto last_nl = text.rfind('\n');
    std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != text.size()) fs::resize_file(file, keep);
    rec.records = read_records(file);
  }

  std::uint64_t best = 0;
  fs::path best_path;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot-", 0) != 0 || entry.path().extension() != ".json") continue;
    const std::string digits = name.substr(9, name.size() - 9 - 5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
    std::uint64_t seq = std::stoull(digits);
    if (seq > best) {
      best = seq;
      best_path = entry.path();
    }
  }
  if (best > 0) {
    std::ifstream in(best_path, std::ios::binary);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("state") || !doc.contains("sha256"))
      throw Error(Errc::CorruptJournal, "malformed snapshot " + best_path.string());
    if (doc["sha256"] != sha256_hex(doc["state"].dump()))
      throw Error(Errc::CorruptJournal, "bad hash in snapshot " + best_path.string());
    if (doc.value("seq", std::uint64_t{0}) != best || best > rec.records.size())
      throw Error(Errc::CorruptJournal, "snapshot " + best_path.string() + " is ahead of the journal");
    rec.snapshot_state = std::move(doc["state"]);
    rec.snapshot_seq = best;
  }
  open_for_append();
  return rec;
}

void Journal::open_for_append() {
  if (out_) return;
  out_ = std::fopen((dir_ / kJournalFile).c_str(), "ab");
  if (!out_) throw Error(Errc::Io, "cannot open journal in " + dir_.string());
}

void Journal::append(const JournalRecord& rec) {
  open_for_append();
  const std::string line = format_journal_line(rec);
  if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() || std::fflush(out_) != 0)
    throw Error(Errc::Io, "journal write failed");
  if (sync_) ::fsync(::fileno(out_));
}

void Journal::write_snapshot(std::uint64_t seq, const nlohmann::json& state) {
  nlohmann::json doc = {{"seq", seq}, {"sha256", sha256_hex(state.dump())}, {"state", state}};
  const fs::path final_path = dir_ / ("snapshot-" + std::to_string(seq) + ".json");
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump();
    if (!out) throw Error(Errc::Io, "snapshot write failed");
  }
  fs::rename(tmp, final_path);

  // Keep the two most recent snapshots.
  std::vector<std::uint64_t> seqs;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot-", 0) == 0 && entry.path().extension() == ".json") {
      const std::string digits = name.substr(9, name.size() - 14);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit))
        seqs.push_back(std::stoull(digits));
    }
  }
  std::sort(seqs.begin(), seqs.end());
  for (std::size_t i = 0; i + 2 < seqs.size(); ++i)
    fs::remove(dir_ / ("snapshot-" + std::to_string(seqs[i]) + ".json"));
}

void Journal::flush() {
  if (!out_) return;
  std::fflush(out_);
  ::fsync(::fileno(out_));
}

}  // namespace pg
