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
// Shadow model of the catalog for random sessions: an independent
// re-statement of what each operation does to the name spaces, used as the
// oracle for journal replay and crash recovery.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "pg/engine.hpp"

namespace pgtest {

enum class OpKind {
  create_user,
  group_add,
  make_collection,
  put,
  replicate,
  add_avu,
  set_acl,
  add_rule,
  remove_rule,
  remove_object,
};

struct SessionOp {
  OpKind kind = OpKind::put;
  std::string actor;
  std::string path;   // object, collection or rule name
  std::string arg;    // resource, user, principal or owner
  std::string arg2;   // group, rule pep
  std::string bytes;  // payload or rule text
  pg::AvuTriple triple;
  pg::Perm perm = pg::Perm::read;
  std::int64_t priority = 0;
};

std::string describe(const SessionOp& op);

class ShadowCatalog {
 public:
  /// The state `boot_subject` produces: admin rods, users alice and bob,
  /// `resources`, and the collections / and /home.
  explicit ShadowCatalog(std::vector<pg::Resource> resources);

  /// A random operation that is valid in the current state.
  SessionOp next(Rng& rng) const;
  void apply(const SessionOp& op);
  nlohmann::json projection() const;

 private:
  struct Rep {
    std::string checksum;
    std::uint64_t size = 0;
    std::string status;
  };
  struct Obj {
    std::string owner;
    std::uint64_t version = 0;
    std::map<std::string, std::string> acl;
    std::map<std::string, Rep> replicas;
  };
  struct Coll {
    std::string owner;
    std::map<std::string, std::string> acl;
  };

  std::vector<pg::Resource> resources_;
  std::map<std::string, std::pair<std::string, std::set<std::string>>> users_;  // role, groups
  std::map<std::string, Coll> colls_;
  std::map<std::string, Obj> objs_;
  std::map<std::string, std::set<std::vector<std::string>>> avus_;
  std::map<std::string, std::pair<std::string, std::int64_t>> rules_;
  std::uint64_t rule_version_ = 0;
  std::uint64_t counter_ = 0;
};

void boot_subject(pg::Engine& engine, const std::vector<pg::Resource>& resources);
/// Executes `op` against the real engine; throws whatever the engine throws.
void execute(pg::Engine& engine, const SessionOp& op);
/// The part of a catalog state the shadow model predicts.
nlohmann::json project(const pg::CatalogState& state);

/// Generates `n` operations from `seed`, recording the shadow projection
/// before the first and after every operation (n + 1 entries).
std::vector<SessionOp> generate_session(std::uint64_t seed, std::size_t n,
                                        const std::vector<pg::Resource>& resources,
                                        std::vector<nlohmann::json>* projections);

}  // namespace pgtest
