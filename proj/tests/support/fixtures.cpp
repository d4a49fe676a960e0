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
#include "fixtures.hpp"

#include "pg/util.hpp"

namespace fs = std::filesystem;

namespace pgtest {

TempDir::TempDir() {
  path_ = fs::temp_directory_path() / ("pgtest-" + pg::random_hex(8));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {
pg::CatalogOptions options_for(const fs::path& dir) {
  pg::CatalogOptions o;
  o.dir = dir;
  return o;
}
}  // namespace

Grid::Grid(const fs::path& dir)
    : catalog(options_for(dir)), engine(catalog), streams(engine), provenance(engine) {
  if (!catalog.state().users.empty()) return;  // recovered
  catalog.bootstrap(kAdmin, kAdminSecret);
  catalog.create_user(kAdmin, "alice", pg::Role::user, "alice-secret");
  catalog.create_user(kAdmin, "bob", pg::Role::user, "bob-secret");
  add_mem_resource("memResc");
  engine.make_collection(kAdmin, "/home");
}

void Grid::add_mem_resource(const std::string& name, pg::ResourceKind kind) {
  pg::Resource r;
  r.name = name;
  r.driver_name = "mem";
  r.root = name;
  r.kind = kind;
  engine.register_resource(kAdmin, r);
}

pg::CatalogState without_audit(pg::CatalogState s) {
  s.audit.clear();
  s.last_seq = 0;
  return s;
}

std::map<std::string, std::string> replica_bytes(pg::Engine& engine) {
  std::map<std::string, std::string> out;
  for (const auto& [path, obj] : engine.catalog().state().objects) {
    for (const auto& r : obj.replicas) {
      auto res = engine.catalog().resource(r.resource);
      auto d = res ? engine.drivers().find(res->driver_name) : nullptr;
      out[path + "@" + r.resource] = d ? pg::read_whole_object(*d, r.physical_ref) : "<no driver>";
    }
  }
  return out;
}

}  // namespace pgtest
