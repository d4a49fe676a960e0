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
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pg/gateway.hpp"
#include "pg/util.hpp"

namespace pg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class Int>
Int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<Int>(v);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "config key '" + key + "' needs a non-negative integer");
  }
}

void set_key(ZoneConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "zone_name") cfg.zone_name = value;
  else if (key == "bind") cfg.bind = value;
  else if (key == "journal_dir") cfg.journal_dir = value;
  else if (key == "default_resource") cfg.default_resource = value;
  else if (key == "admin_user") cfg.admin_user = value;
  else if (key == "admin_secret") cfg.admin_secret = value;
  else if (key == "session_ttl_s") cfg.session_ttl_s = to_int<std::int64_t>(key, value);
  else if (key == "snapshot_every") cfg.snapshot_every = to_int<std::uint64_t>(key, value);
  else throw Error(Errc::InvalidArgument, "unknown config key '" + key + "'");
}

constexpr const char* kKeys[] = {"zone_name",   "bind",         "journal_dir",   "default_resource",
                                 "admin_user",  "admin_secret", "session_ttl_s", "snapshot_every"};

}  // namespace

ZoneConfig parse_config(std::string_view text, ZoneConfig cfg) {
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    std::string v;
    if (!value.empty() && value[0] == '"') {
      auto close = value.find('"', 1);
      if (close == std::string_view::npos)
        throw Error(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": unterminated string");
      std::string_view rest = trim(value.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw Error(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": trailing text");
      v = std::string(value.substr(1, close - 1));
    } else {
      auto hash = value.find('#');
      v = std::string(trim(value.substr(0, hash)));
    }
    set_key(cfg, key, v);
  }
  return cfg;
}

ZoneConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot read config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_env_overrides(ZoneConfig& cfg, const std::function<const char*(const char*)>& getenv_fn) {
  for (const char* key : kKeys) {
    std::string var = "PG_";
    for (const char* c = key; *c; ++c) var.push_back(static_cast<char>(std::toupper(*c)));
    const char* v = getenv_fn ? getenv_fn(var.c_str()) : std::getenv(var.c_str());
    if (v) set_key(cfg, key, v);
  }
}

std::pair<std::string, int> split_host_port(std::string_view addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(Errc::InvalidArgument, "address must be host:port, got '" + std::string(addr) + "'");
  std::string host(addr.substr(0, colon));
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(std::string(addr.substr(colon + 1)), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in '" + std::string(addr) + "'");
  }
  if (port < 0 || port > 65535) throw Error(Errc::InvalidArgument, "port out of range");
  return {host, port};
}

// ---------------------------------------------------------------------------
// Zone
// ---------------------------------------------------------------------------

Zone::Zone(ZoneConfig cfg) : cfg_(std::move(cfg)) {
  CatalogOptions copts;
  copts.dir = cfg_.journal_dir;
  copts.snapshot_every = cfg_.snapshot_every;
  catalog_ = std::make_unique<Catalog>(copts);
  EngineOptions eopts;
  eopts.default_resource = cfg_.default_resource;
  engine_ = std::make_unique<Engine>(*catalog_, eopts);
  streams_ = std::make_unique<StreamStore>(*engine_);
  provenance_ = std::make_unique<Provenance>(*engine_);
  sessions_ = std::make_unique<SessionManager>(*catalog_, cfg_.session_ttl_s * 1'000'000);

  if (catalog_->state().users.empty()) {
    if (cfg_.admin_secret.empty())
      throw Error(Errc::InvalidArgument, "admin_secret is required to bootstrap a new zone");
    catalog_->bootstrap(cfg_.admin_user, cfg_.admin_secret);
    engine_->make_collection(cfg_.admin_user, "/home", CollectionKind::plain);
    if (!cfg_.default_resource.empty()) {
      Resource r;
      r.name = cfg_.default_resource;
      if (cfg_.journal_dir.empty()) {
        r.driver_name = "mem";
        r.root = "vault";
      } else {
        r.driver_name = "localfs";
        r.root = (std::filesystem::absolute(cfg_.journal_dir) / "vault").string();
      }
      engine_->register_resource(cfg_.admin_user, r);
    }
  }
}

Zone::~Zone() {
  try {
    catalog_->flush();
  } catch (...) {
  }
}

}  // namespace pg
