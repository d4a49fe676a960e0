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

#include <array>
#include <chrono>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pg/catalog.hpp"
#include "pg/drivers.hpp"
#include "pg/ruledsl.hpp"

namespace pg {

/// The fixed set of policy-enforcement points.
inline constexpr std::array<std::string_view, 16> kPeps = {
    "pep.data.put.pre",          "pep.data.put.post",
    "pep.data.get.pre",          "pep.data.get.post",
    "pep.data.remove.pre",       "pep.data.remove.post",
    "pep.data.replicate.pre",    "pep.data.replicate.post",
    "pep.collection.create.pre", "pep.collection.create.post",
    "pep.meta.add.pre",          "pep.meta.add.post",
    "pep.stream.ingest.pre",     "pep.stream.ingest.post",
    "pep.workflow.run.pre",      "pep.workflow.run.post",
};

bool is_known_pep(std::string_view pep) noexcept;

/// System bindings visible to a rule: user.name, user.role, op, and where
/// they apply obj.path, obj.owner, coll.path, resc.name. Rules cannot assign
/// these; their own assignments live in a per-firing copy.
struct PepContext {
  dsl::Bindings vars;

  PepContext& set(const std::string& name, dsl::Value v) {
    vars[name] = std::move(v);
    return *this;
  }
};

struct Verdict {
  enum class Kind { allow, deny, error };
  Kind kind = Kind::allow;
  std::string message;  // deny reason or error detail
  std::string rule;     // rule that decided; empty for the default verdict

  static Verdict allow(std::string rule = {}) { return {Kind::allow, {}, std::move(rule)}; }
  static Verdict deny(std::string reason, std::string rule = {}) {
    return {Kind::deny, std::move(reason), std::move(rule)};
  }
  static Verdict error(std::string detail, std::string rule = {}) {
    return {Kind::error, std::move(detail), std::move(rule)};
  }
  bool allowed() const noexcept { return kind == Kind::allow; }
};

std::string to_string(Verdict::Kind k);

/// Hooks a workflow run uses to capture the objects a procedure touches.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_read(const std::string& path, const std::string& checksum) = 0;
  virtual void on_write(const std::string& path) = 0;
};

class Engine;

/// What a micro-service body can see of the firing that called it.
struct CallContext {
  Engine& engine;
  std::string actor;
  /// Relative logical paths in arguments resolve against this collection.
  std::string base_collection;
  /// System bindings of the firing.
  const dsl::Bindings* vars = nullptr;
  RunObserver* observer = nullptr;
  /// Procedures on the current call stack, for cycle rejection.
  std::vector<std::string> procedure_stack;

  std::string resolve(const std::string& path) const;
};

struct MicroService {
  std::string name;
  int min_args = 0;
  int max_args = 0;  // -1: unbounded
  /// Argument positions naming objects the service reads or writes; lets a
  /// workflow's path set be discovered before it runs.
  std::vector<int> reads;
  std::vector<int> writes;
  std::function<dsl::Value(const std::vector<dsl::Value>& args, CallContext& ctx)> body;
};

struct RuleBaseView {
  std::uint64_t version = 0;
  std::vector<RuleRecord> rules;  // in evaluation order per PEP
};

struct EngineOptions {
  /// Resource used when a caller names none. Empty: the first cache resource.
  std::string default_resource;
  std::chrono::milliseconds lock_timeout{30000};
  /// Network timeout for http_fetch.
  std::chrono::seconds fetch_timeout{10};
};

/// The policy core plus the high-level data operations that fire PEPs.
///
/// Each operation checks access, fires its pre PEP, performs its driver and
/// catalog effects while holding the path lock, then fires its post PEP. A
/// pre-PEP Deny raises Error(Denied), a pre-PEP Error raises
/// Error(PolicyError); post-PEP verdicts are audited and otherwise ignored.
class Engine {
 public:
  explicit Engine(Catalog& catalog, EngineOptions opts = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  Catalog& catalog() noexcept { return catalog_; }
  DriverRegistry& drivers() noexcept { return drivers_; }
  const EngineOptions& options() const noexcept { return opts_; }

  // Policy ------------------------------------------------------------------

  /// Evaluates the rules for `pep` in (priority desc, name asc) order; the
  /// first whose condition holds runs its chain. Audited as pep.allow,
  /// pep.deny or pep.error. Throws Error(UnknownPep).
  Verdict fire_pep(std::string_view pep, const PepContext& ctx);

  /// Parses `text`, validates every rule, and installs them as one rule-base
  /// change. Returns the names added.
  std::vector<std::string> add_rules(const std::string& caller, std::string_view text);
  void remove_rule(const std::string& caller, const std::string& name);
  RuleBaseView list_rules() const;

  void register_microservice(const std::string& caller, MicroService ms);
  bool has_microservice(std::string_view name) const;
  std::optional<MicroService> find_microservice(std::string_view name) const;
  std::vector<std::string> microservice_names() const;

  /// Admin-only driver registration (the registry itself is unchecked).
  void register_driver(const std::string& caller, const std::string& name,
                       std::shared_ptr<StorageDriver> driver);
  /// Admin-only; the resource's driver must be registered.
  void register_resource(const std::string& caller, const Resource& res);

  /// Context pre-filled with user.name, user.role and op.
  PepContext context_for(const std::string& actor, const std::string& op) const;

  // Data operations ---------------------------------------------------------

  /// `owner` defaults to the actor; only admins may name someone else.
  void make_collection(const std::string& actor, const std::string& path,
                       CollectionKind kind = CollectionKind::plain, const std::string& owner = {});
  void add_avu(const std::string& actor, const std::string& path, const AvuTriple& triple);

  DataObject put(const std::string& actor, const std::string& path, std::string_view bytes,
                 const std::string& resource = {});
  Bytes get(const std::string& actor, const std::string& path);
  void remove(const std::string& actor, const std::string& path);
  Replica replicate(const std::string& actor, const std::string& path,
                    const std::string& dest_resource);
  /// Copies the replica on `from` to a cache-kind resource.
  Replica stage(const std::string& actor, const std::string& path, const std::string& from,
                const std::string& to_cache);
  /// Copies a good replica to an archive-kind resource.
  Replica archive(const std::string& actor, const std::string& path,
                  const std::string& to_archive);
  /// Re-reads every good replica; those whose bytes no longer hash to the
  /// recorded checksum are marked suspect. Returns their resources.
  std::vector<std::string> verify_replicas(const std::string& actor, const std::string& path);
  /// Admin-only status override.
  void mark_replica(const std::string& actor, const std::string& path,
                    const std::string& resource, ReplicaStatus status);

  /// Fetches `url` into `dest_path` unless a cached copy of the same URL is
  /// still intact, in which case no network I/O happens.
  DataObject http_fetch(const std::string& actor, const std::string& url,
                        const std::string& dest_path, const std::string& resource = {});
  /// Network GETs performed by http_fetch so far.
  std::uint64_t fetch_count() const noexcept { return fetch_count_.load(); }

  // Trusted building blocks for streams and provenance ----------------------

  /// Stores bytes as a new object version without ACL checks or PEPs.
  DataObject store_object(const std::string& actor, const std::string& path,
                          std::string_view bytes, const std::string& resource = {},
                          const std::vector<AvuTriple>& avus = {});
  /// Verified read of any good replica, without ACL checks or PEPs.
  Bytes read_object(const std::string& path);
  /// Marks every good replica of `path` suspect.
  void mark_suspect(const std::string& path);

  /// Runs a procedure body with `args` bound to its parameters. Normal
  /// completion is Allow; a micro-service or evaluation failure is Error.
  Verdict run_procedure(const dsl::ProcedureAst& proc, const dsl::Bindings& args,
                        const std::string& actor, const std::string& base_collection,
                        RunObserver* observer);

  /// Invokes a micro-service, or else the latest attached procedure of that
  /// name. Throws Error(UnknownMicroService).
  dsl::Value invoke(const std::string& name, const std::vector<dsl::Value>& args,
                    CallContext& ctx);

  /// Serializes operations on one logical path. Recursive for one thread.
  class PathLock {
   public:
    PathLock(Engine& e, std::string_view path);
    ~PathLock();
    PathLock(const PathLock&) = delete;
    PathLock& operator=(const PathLock&) = delete;

   private:
    std::recursive_timed_mutex* mu_;
  };

  /// Receives "pep <name>" before rules run and "driver <op> <resource>"
  /// before each driver effect. Test instrumentation.
  void set_trace(std::function<void(const std::string&)> fn);

 private:
  struct RuleBase;
  struct Registry;

  std::shared_ptr<const RuleBase> rule_base() const;
  void rebuild_rule_base() const;
  std::shared_ptr<const Registry> registry() const;

  Verdict run_rule(const dsl::RuleAst& rule, const PepContext& ctx);
  void require_allowed(const Verdict& v);
  void trace(const std::string& event);

  std::string resolve_resource(const std::string& requested) const;
  std::shared_ptr<StorageDriver> driver_for(const Resource& res) const;
  Resource require_resource(const std::string& name) const;
  DataObject require_object(const std::string& path) const;
  User require_user(const std::string& name) const;

  /// Writes bytes to `res` and reads them back; throws ChecksumMismatch and
  /// cleans up if they do not hash to `checksum`.
  Replica copy_to(const std::string& path, const Resource& res, std::string_view bytes,
                  const std::string& checksum);
  Replica replicate_impl(const std::string& actor, const std::string& path, const Resource& dest,
                         const std::string& from, const std::string& op);
  DataObject put_impl(const std::string& actor, const std::string& path, std::string_view bytes,
                      const std::string& resource, const std::vector<AvuTriple>& avus);
  Bytes read_replica(const Replica& r);
  /// Reads a good replica whose bytes verify, marking failures suspect.
  Bytes read_verified(const DataObject& obj);
  void discard_ref(const std::string& path, const Replica& r);
  DataObject store_locked(const std::string& actor, const std::string& path,
                          std::string_view bytes, const Resource& res,
                          const std::vector<AvuTriple>& avus);

  Catalog& catalog_;
  EngineOptions opts_;
  DriverRegistry drivers_;

  mutable std::mutex rules_mu_;
  mutable std::shared_ptr<const RuleBase> rules_;
  mutable std::mutex registry_mu_;
  std::shared_ptr<const Registry> registry_;
  mutable std::mutex proc_mu_;
  std::map<std::string, std::shared_ptr<const dsl::ProcedureAst>> proc_cache_;
  mutable std::mutex trace_mu_;
  std::shared_ptr<const std::function<void(const std::string&)>> trace_;

  static constexpr std::size_t kLockStripes = 64;
  std::array<std::recursive_timed_mutex, kLockStripes> path_locks_;

  std::atomic<std::uint64_t> fetch_count_{0};
};

/// Adds set_avu, checksum, replicate_to, audit_msg, http_fetch, put_int,
/// get_int, put_str, get_str, str, int, len, exists and list_objects.
void register_builtin_microservices(std::map<std::string, MicroService, std::less<>>& into);

}  // namespace pg
