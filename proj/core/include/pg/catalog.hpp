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
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pg/journal.hpp"
#include "pg/types.hpp"

namespace pg {

// ---------------------------------------------------------------------------
// Metadata predicates
//
// A predicate is a conjunction of clauses `field op "literal"` where field is
// one of name, value, comment and op is one of =, !=, like (anchored glob).
// Clauses group onto a single triple: a `name` clause opens a new group, and
// `value`/`comment` clauses join the most recent group that does not yet
// constrain that field. A path matches when every group is satisfied by at
// least one of its triples.
//
//   name = "instrument" and value like "antenna-*"
// ---------------------------------------------------------------------------

enum class AvuField { name, value, comment };
enum class AvuOp { eq, ne, like };

struct AvuClause {
  AvuField field = AvuField::name;
  AvuOp op = AvuOp::eq;
  std::string literal;
  bool operator==(const AvuClause&) const = default;
};

struct AvuPredicate {
  std::vector<std::vector<AvuClause>> groups;
  bool operator==(const AvuPredicate&) const = default;
};

/// Throws Error(MalformedPredicate).
AvuPredicate parse_avu_predicate(std::string_view text);
std::string format_avu_predicate(const AvuPredicate& pred);
bool clause_matches(const AvuClause& clause, const AvuTriple& t) noexcept;

struct AuditFilter {
  std::int64_t from_us = 0;  // inclusive
  std::int64_t to_us = INT64_MAX;  // exclusive
  std::string event;  // empty: any
  std::string actor;  // empty: any
};

struct CatalogOptions {
  /// Empty: purely in-memory catalog (records are still produced and may be
  /// observed through set_record_observer, but nothing is written).
  std::filesystem::path dir;
  std::uint64_t snapshot_every = 1000;
  bool sync_each_write = false;
};

/// Authority for users, resources, collections, data objects, metadata,
/// policies (rule sources) and procedures (workflows and run records), plus
/// the audit trail.
///
/// Every mutation is one JournalRecord. The public mutators validate, build
/// the record, journal it, and apply it; replay() applies the same records
/// through the same code path, so replay(journal(S)) == S.
///
/// Mutations are serialized by a single writer lock; reads share.
class Catalog {
 public:
  explicit Catalog(CatalogOptions opts = {});
  ~Catalog();
  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  /// Creates the first admin and the root collection. Only valid while the
  /// catalog has no users.
  void bootstrap(const std::string& admin, const std::string& secret);

  // Users -------------------------------------------------------------------
  void create_user(const std::string& caller, const std::string& name, Role role,
                   const std::string& secret);
  void add_user_to_group(const std::string& caller, const std::string& user,
                         const std::string& group);
  std::optional<User> user(std::string_view name) const;
  bool is_admin(std::string_view name) const;
  /// Uniform result for unknown user and wrong secret.
  bool verify_secret(std::string_view name, std::string_view secret) const;

  // Resources ---------------------------------------------------------------
  /// Driver existence is checked by the engine, which owns the registry.
  void register_resource(const std::string& caller, const Resource& res);
  std::optional<Resource> resource(std::string_view name) const;
  std::vector<Resource> resources() const;

  // Collections and access control ------------------------------------------
  void make_collection(const std::string& caller, const std::string& path,
                       const std::string& owner, CollectionKind kind);
  std::optional<Collection> collection(std::string_view path) const;
  /// Immediate children, lexicographic.
  std::vector<std::string> list_collections(std::string_view parent) const;
  std::vector<std::string> list_objects(std::string_view parent) const;

  /// Grants `perm` on a collection or object; Perm::none revokes.
  void set_acl(const std::string& caller, const std::string& path, const std::string& principal,
               Perm perm);
  bool check_access(std::string_view path, std::string_view user, Perm need) const;
  Perm effective_perm(std::string_view path, std::string_view user) const;
  bool path_exists(std::string_view path) const;

  // Data objects (trusted; the engine performs authorization and PEPs) -------
  std::optional<DataObject> object(std::string_view path) const;
  /// Records a new version stored as `replica`. Replicas on other resources
  /// become stale; a replica on the same resource is replaced. `initial_avus`
  /// are attached in the same journal record.
  DataObject record_put(const std::string& actor, const std::string& path, const Replica& replica,
                        const std::vector<AvuTriple>& initial_avus = {});
  void add_replica(const std::string& path, const Replica& replica);
  void set_replica_status(const std::string& path, const std::string& resource,
                          ReplicaStatus status);
  void drop_replica(const std::string& path, const std::string& resource);
  void remove_object(const std::string& path);
  void add_orphan(const std::string& path, const std::string& resource,
                  const std::string& physical_ref);
  std::vector<Orphan> orphans() const;

  // Metadata ----------------------------------------------------------------
  void add_avu(const std::string& caller, const std::string& path, const AvuTriple& triple);
  /// Trusted variant used by internal services.
  void add_avu_internal(const std::string& path, const AvuTriple& triple);
  std::vector<AvuTriple> avus(std::string_view path) const;
  /// Matching paths in lexicographic order.
  std::vector<std::string> query_avu(const AvuPredicate& pred) const;

  // Policies ----------------------------------------------------------------
  void add_rules(const std::string& caller, const std::vector<RuleRecord>& rules);
  void remove_rule(const std::string& caller, const std::string& name);
  std::vector<RuleRecord> rules() const;
  std::uint64_t rule_base_version() const;

  // Procedures --------------------------------------------------------------
  void record_workflow(const WorkflowVersion& wf);
  std::optional<WorkflowVersion> workflow(std::string_view id) const;
  std::vector<WorkflowVersion> workflows(std::string_view collection = {}) const;
  void record_run(const RunRecord& run);
  std::optional<RunRecord> run(std::string_view id) const;

  // Audit -------------------------------------------------------------------
  void audit_append(const std::string& actor, const std::string& event, const std::string& detail);
  std::vector<AuditEntry> audit_query(const std::string& caller, const AuditFilter& filter) const;

  // Durability --------------------------------------------------------------
  CatalogState state() const;
  std::uint64_t last_seq() const;
  void flush();
  /// Observes every committed record (after it is applied).
  void set_record_observer(std::function<void(const JournalRecord&)> fn);

  /// Rebuilds a state from a contiguous journal. Throws Error(CorruptJournal).
  static CatalogState journal_replay(const std::vector<JournalRecord>& records);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pg
