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
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "pg/catalog.hpp"
#include "pg/engine.hpp"
#include "pg/error.hpp"
#include "pg/provenance.hpp"
#include "pg/streams.hpp"

namespace pg {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Zone settings. The file format is one `key = value` per line with `#`
/// comments; values may be double-quoted. Each key can be overridden by an
/// environment variable PG_<KEY> (upper case).
///
///   zone_name        = "tempZone"
///   bind             = "127.0.0.1:1247"
///   journal_dir      = "/var/lib/pgzone"   # empty: in-memory catalog
///   default_resource = "demoResc"
///   admin_user       = "rods"
///   admin_secret     = "..."               # needed to bootstrap an empty zone
///   session_ttl_s    = 86400
///   snapshot_every   = 1000
struct ZoneConfig {
  std::string zone_name = "tempZone";
  std::string bind = "127.0.0.1:1247";
  std::string journal_dir = "./pgzone-data";
  std::string default_resource = "demoResc";
  std::string admin_user = "rods";
  std::string admin_secret;
  std::int64_t session_ttl_s = 24 * 3600;
  std::uint64_t snapshot_every = 1000;
};

/// Throws Error(InvalidArgument) naming the offending line.
ZoneConfig parse_config(std::string_view text, ZoneConfig base = {});
ZoneConfig load_config(const std::filesystem::path& file);
void apply_env_overrides(ZoneConfig& cfg,
                         const std::function<const char*(const char*)>& getenv_fn = {});
/// "host:port" → {host, port}. Throws Error(InvalidArgument).
std::pair<std::string, int> split_host_port(std::string_view addr);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct Session {
  std::string user;
  std::int64_t issued_us = 0;
  std::int64_t expires_us = 0;
};

/// Bearer tokens: 32 random bytes, hex-encoded. Only their SHA-256 digests are
/// kept, and lookups compare digests in constant time.
class SessionManager {
 public:
  SessionManager(Catalog& catalog, std::int64_t ttl_us);

  /// Throws Error(BadCredentials) for unknown users and wrong secrets alike.
  std::string login(const std::string& user, const std::string& secret);
  /// Returns the session's user; throws Error(Unauthenticated).
  std::string authenticate(std::string_view token);
  void logout(std::string_view token);
  std::size_t active() const;

  /// Test hook: replaces the clock used for issue and expiry times.
  void set_clock(std::function<std::int64_t()> clock);

 private:
  std::int64_t now() const;

  Catalog& catalog_;
  std::int64_t ttl_us_;
  mutable std::mutex mu_;
  std::map<std::string, Session> by_digest_;
  std::function<std::int64_t()> clock_;
};

// ---------------------------------------------------------------------------
// Zone
// ---------------------------------------------------------------------------

/// One administrative domain: catalog, engine, streams, provenance and
/// sessions wired together. An empty catalog is bootstrapped with the admin
/// user and a default localfs resource under <journal_dir>/vault (a mem
/// resource when the catalog is in-memory).
class Zone {
 public:
  explicit Zone(ZoneConfig cfg);
  ~Zone();

  const ZoneConfig& config() const noexcept { return cfg_; }
  Catalog& catalog() noexcept { return *catalog_; }
  Engine& engine() noexcept { return *engine_; }
  StreamStore& streams() noexcept { return *streams_; }
  Provenance& provenance() noexcept { return *provenance_; }
  SessionManager& sessions() noexcept { return *sessions_; }

 private:
  ZoneConfig cfg_;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<StreamStore> streams_;
  std::unique_ptr<Provenance> provenance_;
  std::unique_ptr<SessionManager> sessions_;
};

// ---------------------------------------------------------------------------
// HTTP service
// ---------------------------------------------------------------------------

int http_status_for(Errc code) noexcept;
/// CLI convention: 1 user error, 2 denied, 3 server or internal failure.
int exit_code_for(Errc code) noexcept;

/// HTTP/1.1 + JSON front end. See docs/api.md for the endpoint list.
class Server {
 public:
  explicit Server(Zone& zone);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port. Throws
  /// Error(BindFailed).
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void run();
  /// bind() and run() on a background thread.
  int start(const std::string& host, int port);
  /// Stops serving, joins the background thread, flushes the journal.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pg
