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
// Shared fixtures for unit and acceptance tests.
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "pg/catalog.hpp"
#include "pg/engine.hpp"
#include "pg/provenance.hpp"
#include "pg/streams.hpp"

namespace pgtest {

inline constexpr const char* kAdmin = "rods";
inline constexpr const char* kAdminSecret = "rods-secret";

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

/// An in-process zone: catalog (in memory unless `dir` is given), engine,
/// streams and provenance. Boots with admin "rods", users alice and bob, a
/// mem cache resource "memResc" and the collection /home.
struct Grid {
  explicit Grid(const std::filesystem::path& dir = {});

  pg::Catalog catalog;
  pg::Engine engine;
  pg::StreamStore streams;
  pg::Provenance provenance;

  void add_mem_resource(const std::string& name, pg::ResourceKind kind = pg::ResourceKind::cache);
};

/// State with the audit trail and sequence counter cleared; what a refused
/// operation must leave untouched.
pg::CatalogState without_audit(pg::CatalogState s);

/// Bytes of every replica of every object, keyed "path@resource". Reads go
/// straight to the drivers.
std::map<std::string, std::string> replica_bytes(pg::Engine& engine);

}  // namespace pgtest
