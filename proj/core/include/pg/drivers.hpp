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
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pg/util.hpp"

namespace pg {

struct DriverCaps {
  bool supports_update = true;  // false: existing bytes are never rewritten
  bool supports_unlink = true;
};

struct StatResult {
  std::uint64_t size = 0;
  bool exists = false;
  bool operator==(const StatResult&) const = default;
};

using Handle = std::uint64_t;

/// Storage capability interface. Physical refs are opaque outside the driver
/// that minted them. Failures raise Error(DriverError); operations a driver's
/// capabilities forbid raise Error(Unsupported).
///
/// Reads past EOF return the available (possibly empty) bytes. Handles are
/// single-use: close() invalidates them.
class StorageDriver {
 public:
  virtual ~StorageDriver() = default;

  virtual std::string_view type() const noexcept = 0;
  virtual DriverCaps capabilities() const noexcept = 0;

  /// Allocates a new, empty object under the resource root and returns its ref.
  virtual std::string create(std::string_view root) = 0;
  virtual Handle open(std::string_view ref) = 0;
  virtual Bytes read(Handle h, std::uint64_t offset, std::size_t len) = 0;
  virtual void write(Handle h, std::uint64_t offset, std::string_view bytes) = 0;
  virtual void close(Handle h) = 0;
  virtual void unlink(std::string_view ref) = 0;
  virtual StatResult stat(std::string_view ref) = 0;
};

/// Creates a ref, writes `bytes`, closes it.
std::string write_new_object(StorageDriver& d, std::string_view root, std::string_view bytes);
Bytes read_whole_object(StorageDriver& d, std::string_view ref);

/// Byte files under <root>/<two-hex-shard>/<32-hex-id>.
class LocalFsDriver : public StorageDriver {
 public:
  std::string_view type() const noexcept override { return "localfs"; }
  DriverCaps capabilities() const noexcept override { return {}; }
  std::string create(std::string_view root) override;
  Handle open(std::string_view ref) override;
  Bytes read(Handle h, std::uint64_t offset, std::size_t len) override;
  void write(Handle h, std::uint64_t offset, std::string_view bytes) override;
  void close(Handle h) override;
  void unlink(std::string_view ref) override;
  StatResult stat(std::string_view ref) override;

 protected:
  struct OpenFile {
    int fd = -1;
    std::string ref;
  };
  /// Hook for subclasses to refuse a write before it reaches the file.
  virtual void check_write(const OpenFile& f, std::uint64_t offset);

  std::mutex mu_;
  std::map<Handle, OpenFile> handles_;
  Handle next_ = 1;
};

/// Write-once variant of localfs: a ref accepts appends only between its
/// create() and the first close(); afterwards it is immutable, and unlink is
/// refused. Existing files found on disk are always sealed.
class ArchiveDriver : public LocalFsDriver {
 public:
  std::string_view type() const noexcept override { return "archive"; }
  DriverCaps capabilities() const noexcept override { return {false, false}; }
  std::string create(std::string_view root) override;
  void close(Handle h) override;
  void unlink(std::string_view ref) override;

 protected:
  void check_write(const OpenFile& f, std::uint64_t offset) override;

 private:
  std::mutex fresh_mu_;
  std::map<std::string, bool> fresh_;  // refs still open for their initial write
};

/// Process-local byte store; refs are "mem:<root>/<id>".
class MemDriver : public StorageDriver {
 public:
  std::string_view type() const noexcept override { return "mem"; }
  DriverCaps capabilities() const noexcept override { return {}; }
  std::string create(std::string_view root) override;
  Handle open(std::string_view ref) override;
  Bytes read(Handle h, std::uint64_t offset, std::size_t len) override;
  void write(Handle h, std::uint64_t offset, std::string_view bytes) override;
  void close(Handle h) override;
  void unlink(std::string_view ref) override;
  StatResult stat(std::string_view ref) override;

 private:
  std::mutex mu_;
  std::map<std::string, Bytes, std::less<>> blobs_;
  std::map<Handle, std::string> handles_;
  Handle next_ = 1;
};

/// New instance of a built-in driver type ("localfs", "mem", "archive").
std::shared_ptr<StorageDriver> make_builtin_driver(std::string_view type);

/// Runtime-extensible name -> driver map. Lookups hand out shared ownership,
/// so an operation keeps the driver it resolved for its whole duration.
class DriverRegistry {
 public:
  /// Registers localfs, mem and archive.
  DriverRegistry();

  void register_driver(const std::string& name, std::shared_ptr<StorageDriver> driver);
  std::shared_ptr<StorageDriver> find(std::string_view name) const;
  std::vector<std::string> names() const;
  /// One line per registration, in order.
  std::vector<std::string> mutation_log() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<StorageDriver>, std::less<>> drivers_;
  std::vector<std::string> log_;
};

}  // namespace pg
