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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pg {

enum class Role { admin, user };
enum class ResourceKind { cache, archive };
enum class CollectionKind { plain, stream, workflow };
// Ordered: none < read < write < own.
enum class Perm { none = 0, read = 1, write = 2, own = 3 };
enum class ReplicaStatus { good, stale, suspect };

std::string to_string(Role r);
std::string to_string(ResourceKind k);
std::string to_string(CollectionKind k);
std::string to_string(Perm p);
std::string to_string(ReplicaStatus s);
Role parse_role(std::string_view s);
ResourceKind parse_resource_kind(std::string_view s);
CollectionKind parse_collection_kind(std::string_view s);
Perm parse_perm(std::string_view s);
ReplicaStatus parse_replica_status(std::string_view s);

struct User {
  std::string name;
  Role role = Role::user;
  std::string secret_hash;  // "pbkdf2-sha256$<iter>$<salt>$<hex>"
  std::set<std::string> groups;
  bool operator==(const User&) const = default;
};

struct Resource {
  std::string name;
  std::string driver_name;
  std::string root;
  ResourceKind kind = ResourceKind::cache;
  bool operator==(const Resource&) const = default;
};

/// Keys are user or group names.
using Acl = std::map<std::string, Perm>;

struct Collection {
  std::string path;
  std::string owner;
  Acl acl;
  CollectionKind kind = CollectionKind::plain;
  bool operator==(const Collection&) const = default;
};

struct Replica {
  std::string resource;
  std::string physical_ref;  // opaque to everything but the owning driver
  std::string checksum;
  std::uint64_t size = 0;
  ReplicaStatus status = ReplicaStatus::good;
  bool operator==(const Replica&) const = default;
};

struct DataObject {
  std::string path;
  std::string owner;
  Acl acl;
  std::vector<Replica> replicas;
  std::uint64_t version = 0;
  bool operator==(const DataObject&) const = default;

  const Replica* replica_on(std::string_view resource) const;
  /// Checksum shared by the good replicas, if any.
  std::optional<std::string> checksum() const;
};

struct AvuTriple {
  std::string attr_name;
  std::string attr_value;
  std::string attr_comment;
  auto operator<=>(const AvuTriple&) const = default;
};

struct AuditEntry {
  std::uint64_t seq = 0;
  std::int64_t when = 0;
  std::string actor;
  std::string event;
  std::string detail;
  bool operator==(const AuditEntry&) const = default;
};

struct RuleRecord {
  std::string name;
  std::string pep;
  std::int64_t priority = 0;
  std::string source;  // canonical printed form
  bool operator==(const RuleRecord&) const = default;
};

struct WorkflowVersion {
  std::string workflow_id;  // SHA-256 of the canonical procedure text
  std::string collection;
  std::string procedure_name;
  std::string source;
  std::int64_t attached_us = 0;
  std::string attached_by;
  bool operator==(const WorkflowVersion&) const = default;
};

enum class RunStatus { ok, failed };

struct RunRecord {
  std::string run_id;
  std::string workflow_id;
  std::string collection;
  std::string actor;
  nlohmann::json bindings = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // logical path -> checksum at start
  std::map<std::string, std::string> outputs;  // logical path -> checksum at end
  RunStatus status = RunStatus::ok;
  std::string detail;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::string rerun_of;
  bool operator==(const RunRecord&) const = default;
};

/// A replica the catalog no longer references but whose driver could not
/// unlink it. Operators clean these up out of band.
struct Orphan {
  std::string path;
  std::string resource;
  std::string physical_ref;
  std::int64_t when = 0;
  bool operator==(const Orphan&) const = default;
};

/// Full catalog state. Equality is a deep comparison.
struct CatalogState {
  std::uint64_t last_seq = 0;
  std::map<std::string, User> users;
  std::map<std::string, Resource> resources;
  std::map<std::string, Collection> collections;
  std::map<std::string, DataObject> objects;
  std::map<std::string, std::set<AvuTriple>> avus;
  std::map<std::string, RuleRecord> rules;
  std::uint64_t rule_base_version = 0;
  std::map<std::string, WorkflowVersion> workflows;
  std::map<std::string, RunRecord> runs;
  std::vector<AuditEntry> audit;
  std::vector<Orphan> orphans;
  bool operator==(const CatalogState&) const = default;
};

void to_json(nlohmann::json& j, const User& v);
void from_json(const nlohmann::json& j, User& v);
void to_json(nlohmann::json& j, const Resource& v);
void from_json(const nlohmann::json& j, Resource& v);
void to_json(nlohmann::json& j, const Collection& v);
void from_json(const nlohmann::json& j, Collection& v);
void to_json(nlohmann::json& j, const Replica& v);
void from_json(const nlohmann::json& j, Replica& v);
void to_json(nlohmann::json& j, const DataObject& v);
void from_json(const nlohmann::json& j, DataObject& v);
void to_json(nlohmann::json& j, const AvuTriple& v);
void from_json(const nlohmann::json& j, AvuTriple& v);
void to_json(nlohmann::json& j, const AuditEntry& v);
void from_json(const nlohmann::json& j, AuditEntry& v);
void to_json(nlohmann::json& j, const RuleRecord& v);
void from_json(const nlohmann::json& j, RuleRecord& v);
void to_json(nlohmann::json& j, const WorkflowVersion& v);
void from_json(const nlohmann::json& j, WorkflowVersion& v);
void to_json(nlohmann::json& j, const RunRecord& v);
void from_json(const nlohmann::json& j, RunRecord& v);
void to_json(nlohmann::json& j, const Orphan& v);
void from_json(const nlohmann::json& j, Orphan& v);
void to_json(nlohmann::json& j, const CatalogState& v);
void from_json(const nlohmann::json& j, CatalogState& v);

}  // namespace pg
