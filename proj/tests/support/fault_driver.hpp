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
// Fault-injection storage driver: a mem driver whose writes and stored bytes
// can be corrupted on demand, and whose unlinks can be made to fail.
#pragma once

#include <atomic>
#include <string>

#include "pg/drivers.hpp"

namespace pgtest {

class FaultDriver : public pg::StorageDriver {
 public:
  std::string_view type() const noexcept override { return "fault"; }
  pg::DriverCaps capabilities() const noexcept override { return {}; }
  std::string create(std::string_view root) override { return inner_.create(root); }
  pg::Handle open(std::string_view ref) override { return inner_.open(ref); }
  pg::Bytes read(pg::Handle h, std::uint64_t offset, std::size_t len) override {
    return inner_.read(h, offset, len);
  }
  void write(pg::Handle h, std::uint64_t offset, std::string_view bytes) override;
  void close(pg::Handle h) override { inner_.close(h); }
  void unlink(std::string_view ref) override;
  pg::StatResult stat(std::string_view ref) override { return inner_.stat(ref); }

  /// The next `n` writes store a byte-flipped copy of what they were given.
  void corrupt_next_writes(int n) { corrupt_writes_ = n; }
  /// Flips the first byte of an already stored object (bit rot).
  void corrupt_stored(std::string_view ref);
  void fail_unlinks(bool on) { fail_unlink_ = on; }
  std::uint64_t writes() const noexcept { return writes_.load(); }

 private:
  pg::MemDriver inner_;
  std::atomic<int> corrupt_writes_{0};
  std::atomic<bool> fail_unlink_{false};
  std::atomic<std::uint64_t> writes_{0};
};

}  // namespace pgtest
