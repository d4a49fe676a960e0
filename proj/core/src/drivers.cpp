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
#include "pg/drivers.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "pg/error.hpp"

namespace pg {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void driver_error(const std::string& what) { throw Error(Errc::DriverError, what); }

std::string errno_text() { return std::strerror(errno); }

bool is_hex(std::string_view s) {
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return !s.empty();
}

// <root>/<2 hex>/<32 hex>, where the shard is the id's first two chars.
bool is_localfs_ref(std::string_view ref) {
  fs::path p(ref);
  const std::string id = p.filename().string();
  const std::string shard = p.parent_path().filename().string();
  return p.is_absolute() && id.size() == 32 && is_hex(id) && shard == id.substr(0, 2);
}

}  // namespace

std::string write_new_object(StorageDriver& d, std::string_view root, std::string_view bytes) {
  std::string ref = d.create(root);
  Handle h = d.open(ref);
  try {
    d.write(h, 0, bytes);
  } catch (...) {
    d.close(h);
    throw;
  }
  d.close(h);
  return ref;
}

Bytes read_whole_object(StorageDriver& d, std::string_view ref) {
  StatResult st = d.stat(ref);
  if (!st.exists) throw Error(Errc::DriverError, "no such physical object");
  Handle h = d.open(ref);
  Bytes out;
  try {
    constexpr std::size_t kChunk = 1 << 20;
    while (true) {
      Bytes part = d.read(h, out.size(), kChunk);
      out += part;
      if (part.size() < kChunk) break;
    }
  } catch (...) {
    d.close(h);
    throw;
  }
  d.close(h);
  return out;
}

// ---------------------------------------------------------------------------
// localfs
// ---------------------------------------------------------------------------

std::string LocalFsDriver::create(std::string_view root) {
  fs::path base = fs::absolute(fs::path(root));
  const std::string id = random_hex(16);
  fs::path dir = base / id.substr(0, 2);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) driver_error("cannot create " + dir.string() + ": " + ec.message());
  fs::path file = dir / id;
  int fd = ::open(file.c_str(), O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0644);
  if (fd < 0) driver_error("cannot create " + file.string() + ": " + errno_text());
  ::close(fd);
  return file.string();
}

Handle LocalFsDriver::open(std::string_view ref) {
  if (!is_localfs_ref(ref)) driver_error("not a " + std::string(type()) + " ref: " + std::string(ref));
  int fd = ::open(std::string(ref).c_str(), O_RDWR | O_CLOEXEC);
  if (fd < 0) driver_error("cannot open " + std::string(ref) + ": " + errno_text());
  std::lock_guard lock(mu_);
  Handle h = next_++;
  handles_[h] = OpenFile{fd, std::string(ref)};
  return h;
}

Bytes LocalFsDriver::read(Handle h, std::uint64_t offset, std::size_t len) {
  int fd;
  {
    std::lock_guard lock(mu_);
    auto it = handles_.find(h);
    if (it == handles_.end()) driver_error("invalid handle");
    fd = it->second.fd;
  }
  Bytes out(len, '\0');
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::pread(fd, out.data() + got, len - got, static_cast<off_t>(offset + got));
    if (n < 0) {
      if (errno == EINTR) continue;
      driver_error("read failed: " + errno_text());
    }
    if (n == 0) break;
    got += static_cast<std::size_t>(n);
  }
  out.resize(got);
  return out;
}

void LocalFsDriver::check_write(const OpenFile&, std::uint64_t) {}

void LocalFsDriver::write(Handle h, std::uint64_t offset, std::string_view bytes) {
  OpenFile f;
  {
    std::lock_guard lock(mu_);
    auto it = handles_.find(h);
    if (it == handles_.end()) driver_error("invalid handle");
    f = it->second;
  }
  check_write(f, offset);
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t n = ::pwrite(f.fd, bytes.data() + done, bytes.size() - done,
                         static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      driver_error("write failed: " + errno_text());
    }
    done += static_cast<std::size_t>(n);
  }
}

void LocalFsDriver::close(Handle h) {
  std::lock_guard lock(mu_);
  auto it = handles_.find(h);
  if (it == handles_.end()) driver_error("invalid handle");
  ::close(it->second.fd);
  handles_.erase(it);
}

void LocalFsDriver::unlink(std::string_view ref) {
  if (!is_localfs_ref(ref)) driver_error("not a " + std::string(type()) + " ref: " + std::string(ref));
  if (::unlink(std::string(ref).c_str()) != 0)
    driver_error("cannot unlink " + std::string(ref) + ": " + errno_text());
}

StatResult LocalFsDriver::stat(std::string_view ref) {
  if (!is_localfs_ref(ref)) return {};
  struct ::stat st {};
  if (::stat(std::string(ref).c_str(), &st) != 0) return {};
  return {static_cast<std::uint64_t>(st.st_size), true};
}

// ---------------------------------------------------------------------------
// archive
// ---------------------------------------------------------------------------

std::string ArchiveDriver::create(std::string_view root) {
  std::string ref = LocalFsDriver::create(root);
  std::lock_guard lock(fresh_mu_);
  fresh_[ref] = true;
  return ref;
}

void ArchiveDriver::check_write(const OpenFile& f, std::uint64_t offset) {
  {
    std::lock_guard lock(fresh_mu_);
    if (!fresh_.count(f.ref)) throw Error(Errc::Unsupported, "archive objects are immutable");
  }
  struct ::stat st {};
  if (::fstat(f.fd, &st) != 0) driver_error("stat failed: " + errno_text());
  if (offset != static_cast<std::uint64_t>(st.st_size))
    throw Error(Errc::Unsupported, "archive objects accept appends only");
}

void ArchiveDriver::close(Handle h) {
  std::string ref;
  {
    std::lock_guard lock(mu_);
    auto it = handles_.find(h);
    if (it != handles_.end()) ref = it->second.ref;
  }
  LocalFsDriver::close(h);
  std::lock_guard lock(fresh_mu_);
  fresh_.erase(ref);
}

void ArchiveDriver::unlink(std::string_view) {
  throw Error(Errc::Unsupported, "archive driver does not unlink");
}

// ---------------------------------------------------------------------------
// mem
// ---------------------------------------------------------------------------

std::string MemDriver::create(std::string_view root) {
  std::string ref = "mem:" + std::string(root) + "/" + random_hex(16);
  std::lock_guard lock(mu_);
  blobs_[ref];
  return ref;
}

Handle MemDriver::open(std::string_view ref) {
  std::lock_guard lock(mu_);
  if (!blobs_.count(ref)) driver_error("no such mem ref: " + std::string(ref));
  Handle h = next_++;
  handles_[h] = std::string(ref);
  return h;
}

Bytes MemDriver::read(Handle h, std::uint64_t offset, std::size_t len) {
  std::lock_guard lock(mu_);
  auto it = handles_.find(h);
  if (it == handles_.end()) driver_error("invalid handle");
  auto blob = blobs_.find(it->second);
  if (blob == blobs_.end()) driver_error("object vanished");
  const Bytes& b = blob->second;
  if (offset >= b.size()) return {};
  return b.substr(static_cast<std::size_t>(offset), len);
}

void MemDriver::write(Handle h, std::uint64_t offset, std::string_view bytes) {
  std::lock_guard lock(mu_);
  auto it = handles_.find(h);
  if (it == handles_.end()) driver_error("invalid handle");
  auto blob = blobs_.find(it->second);
  if (blob == blobs_.end()) driver_error("object vanished");
  Bytes& b = blob->second;
  const std::size_t end = static_cast<std::size_t>(offset) + bytes.size();
  if (b.size() < end) b.resize(end, '\0');
  std::copy(bytes.begin(), bytes.end(), b.begin() + static_cast<std::ptrdiff_t>(offset));
}

void MemDriver::close(Handle h) {
  std::lock_guard lock(mu_);
  if (!handles_.erase(h)) driver_error("invalid handle");
}

void MemDriver::unlink(std::string_view ref) {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(ref);
  if (it == blobs_.end()) driver_error("no such mem ref: " + std::string(ref));
  blobs_.erase(it);
}

StatResult MemDriver::stat(std::string_view ref) {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(ref);
  if (it == blobs_.end()) return {};
  return {it->second.size(), true};
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

std::shared_ptr<StorageDriver> make_builtin_driver(std::string_view type) {
  if (type == "localfs") return std::make_shared<LocalFsDriver>();
  if (type == "mem") return std::make_shared<MemDriver>();
  if (type == "archive") return std::make_shared<ArchiveDriver>();
  throw Error(Errc::UnknownDriver, "no built-in driver type '" + std::string(type) + "'");
}

DriverRegistry::DriverRegistry() {
  for (const char* t : {"localfs", "mem", "archive"}) register_driver(t, make_builtin_driver(t));
}

void DriverRegistry::register_driver(const std::string& name, std::shared_ptr<StorageDriver> driver) {
  if (name.empty() || !driver) throw Error(Errc::InvalidArgument, "driver needs a name and an instance");
  std::unique_lock lock(mu_);
  if (drivers_.count(name)) throw Error(Errc::DuplicateName, "driver '" + name + "' already registered");
  drivers_.emplace(name, std::move(driver));
  log_.push_back("register " + name + " (" + std::string(drivers_.at(name)->type()) + ")");
}

std::shared_ptr<StorageDriver> DriverRegistry::find(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = drivers_.find(name);
  return it == drivers_.end() ? nullptr : it->second;
}

std::vector<std::string> DriverRegistry::names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [n, _] : drivers_) out.push_back(n);
  return out;
}

std::vector<std::string> DriverRegistry::mutation_log() const {
  std::shared_lock lock(mu_);
  return log_;
}

}  // namespace pg
