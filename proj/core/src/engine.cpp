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
#include "pg/engine.hpp"

#include <algorithm>
#include <functional>

#include "pg/error.hpp"
#include "pg/util.hpp"

namespace pg {

using nlohmann::json;

namespace {

constexpr int kMaxPepDepth = 16;
thread_local int t_pep_depth = 0;

struct DepthScope {
  DepthScope() { ++t_pep_depth; }
  ~DepthScope() { --t_pep_depth; }
};

std::string var_string(const dsl::Bindings& vars, std::string_view name) {
  auto it = vars.find(name);
  return it != vars.end() && it->second.is_string() ? it->second.as_string() : std::string();
}

[[noreturn]] void denied(const std::string& why) { throw Error(Errc::Denied, why); }

}  // namespace

bool is_known_pep(std::string_view pep) noexcept {
  return std::find(kPeps.begin(), kPeps.end(), pep) != kPeps.end();
}

std::string to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::deny: return "deny";
    case Verdict::Kind::error: return "error";
    default: return "allow";
  }
}

std::string CallContext::resolve(const std::string& path) const {
  std::string full = !path.empty() && path[0] == '/' ? path : join_path(base_collection, path);
  require_logical_path(full);
  return full;
}

// ---------------------------------------------------------------------------
// Rule base and registry snapshots
// ---------------------------------------------------------------------------

struct Engine::RuleBase {
  std::uint64_t version = 0;
  std::map<std::string, std::vector<std::shared_ptr<const dsl::RuleAst>>, std::less<>> by_pep;
  std::vector<RuleRecord> ordered;
};

struct Engine::Registry {
  std::map<std::string, MicroService, std::less<>> services;
};

Engine::Engine(Catalog& catalog, EngineOptions opts) : catalog_(catalog), opts_(std::move(opts)) {
  auto reg = std::make_shared<Registry>();
  register_builtin_microservices(reg->services);
  registry_ = std::move(reg);
  std::lock_guard lock(rules_mu_);
  rebuild_rule_base();
}

Engine::~Engine() = default;

void Engine::rebuild_rule_base() const {
  auto rb = std::make_shared<RuleBase>();
  rb->version = catalog_.rule_base_version();
  std::vector<std::shared_ptr<const dsl::RuleAst>> all;
  std::map<std::string, RuleRecord> records;
  for (const auto& rec : catalog_.rules()) {
    auto parsed = dsl::parse_rules(rec.source);
    if (parsed.size() != 1 || parsed[0].name != rec.name)
      throw Error(Errc::Internal, "stored rule '" + rec.name + "' does not round-trip");
    all.push_back(std::make_shared<const dsl::RuleAst>(std::move(parsed[0])));
    records[rec.name] = rec;
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a->pep != b->pep) return a->pep < b->pep;
    if (a->priority != b->priority) return a->priority > b->priority;
    return a->name < b->name;
  });
  for (const auto& r : all) {
    rb->by_pep[r->pep].push_back(r);
    rb->ordered.push_back(records.at(r->name));
  }
  rules_ = std::move(rb);
}

std::shared_ptr<const Engine::RuleBase> Engine::rule_base() const {
  std::lock_guard lock(rules_mu_);
  if (rules_->version != catalog_.rule_base_version())
    rebuild_rule_base();
  return rules_;
}

std::shared_ptr<const Engine::Registry> Engine::registry() const {
  std::lock_guard lock(registry_mu_);
  return registry_;
}

std::vector<std::string> Engine::add_rules(const std::string& caller, std::string_view text) {
  if (!catalog_.is_admin(caller))
    throw Error(Errc::PermissionDenied, "only admins change the rule base");
  auto asts = dsl::parse_rules(text);
  std::vector<RuleRecord> records;
  std::vector<std::string> names;
  for (const auto& r : asts) {
    if (!is_known_pep(r.pep)) throw Error(Errc::UnknownPep, "unknown PEP '" + r.pep + "'", {r.pep});
    records.push_back({r.name, r.pep, r.priority, dsl::pretty_print(r)});
    names.push_back(r.name);
  }
  std::lock_guard lock(rules_mu_);
  catalog_.add_rules(caller, records);
  rebuild_rule_base();
  return names;
}

void Engine::remove_rule(const std::string& caller, const std::string& name) {
  std::lock_guard lock(rules_mu_);
  catalog_.remove_rule(caller, name);
  rebuild_rule_base();
}

RuleBaseView Engine::list_rules() const {
  auto rb = rule_base();
  return {rb->version, rb->ordered};
}

void Engine::register_microservice(const std::string& caller, MicroService ms) {
  if (!catalog_.is_admin(caller))
    throw Error(Errc::PermissionDenied, "only admins register micro-services");
  if (ms.name.empty() || !ms.body) throw Error(Errc::InvalidArgument, "micro-service needs a name and a body");
  std::lock_guard lock(registry_mu_);
  if (registry_->services.count(ms.name))
    throw Error(Errc::DuplicateName, "micro-service '" + ms.name + "' already registered");
  auto next = std::make_shared<Registry>(*registry_);
  const std::string name = ms.name;
  next->services.emplace(name, std::move(ms));
  registry_ = std::move(next);
  catalog_.audit_append(caller, "microservice.register", name);
}

bool Engine::has_microservice(std::string_view name) const {
  return registry()->services.count(name) > 0;
}

std::optional<MicroService> Engine::find_microservice(std::string_view name) const {
  auto reg = registry();
  auto it = reg->services.find(name);
  if (it == reg->services.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Engine::microservice_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : registry()->services) out.push_back(n);
  return out;
}

void Engine::register_driver(const std::string& caller, const std::string& name,
                             std::shared_ptr<StorageDriver> driver) {
  if (!catalog_.is_admin(caller)) throw Error(Errc::PermissionDenied, "only admins register drivers");
  drivers_.register_driver(name, std::move(driver));
  catalog_.audit_append(caller, "driver.register", name);
}

void Engine::register_resource(const std::string& caller, const Resource& res) {
  if (!drivers_.find(res.driver_name))
    throw Error(Errc::UnknownDriver, "no driver named '" + res.driver_name + "'", {res.driver_name});
  catalog_.register_resource(caller, res);
}

void Engine::set_trace(std::function<void(const std::string&)> fn) {
  std::lock_guard lock(trace_mu_);
  trace_ = fn ? std::make_shared<const std::function<void(const std::string&)>>(std::move(fn))
              : nullptr;
}

void Engine::trace(const std::string& event) {
  std::shared_ptr<const std::function<void(const std::string&)>> fn;
  {
    std::lock_guard lock(trace_mu_);
    fn = trace_;
  }
  if (fn) (*fn)(event);
}

// ---------------------------------------------------------------------------
// Rule execution
// ---------------------------------------------------------------------------

namespace {

class ChainRunner {
 public:
  ChainRunner(Engine& engine, CallContext& cc, dsl::Bindings& vars)
      : engine_(engine), cc_(cc), vars_(vars) {
    cc_.vars = &vars_;
    handler_ = [this](const std::string& name, std::vector<dsl::Value> args) {
      return engine_.invoke(name, args, cc_);
    };
  }

  dsl::Value eval(const dsl::ExprPtr& e) { return dsl::eval_expr(*e, vars_, &handler_); }

  std::optional<Verdict> run(const dsl::Chain& chain) {
    for (const auto& action : chain) {
      std::optional<Verdict> v = std::visit([this](const auto& a) { return step(a); }, action.node);
      if (v) return v;
    }
    return std::nullopt;
  }

 private:
  std::optional<Verdict> step(const dsl::Action::Invoke& a) {
    eval(a.call);
    return std::nullopt;
  }
  std::optional<Verdict> step(const dsl::Action::Assign& a) {
    vars_[a.var] = eval(a.value);
    return std::nullopt;
  }
  std::optional<Verdict> step(const dsl::Action::If& a) {
    return eval(a.cond).as_bool() ? run(a.then_chain) : run(a.else_chain);
  }
  std::optional<Verdict> step(const dsl::Action::Foreach& a) {
    const dsl::Value items = eval(a.list);
    for (const auto& item : items.as_list()) {
      vars_[a.var] = item;
      if (auto v = run(a.body)) return v;
    }
    return std::nullopt;
  }
  std::optional<Verdict> step(const dsl::Action::Allow&) { return Verdict::allow(); }
  std::optional<Verdict> step(const dsl::Action::Deny& a) { return Verdict::deny(a.reason); }

  Engine& engine_;
  CallContext& cc_;
  dsl::Bindings& vars_;
  dsl::CallHandler handler_;
};

std::string describe(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const Error*>(&e))
    return std::string(errc_name(pe->code())) + ": " + pe->what();
  return e.what();
}

}  // namespace

Verdict Engine::run_rule(const dsl::RuleAst& rule, const PepContext& ctx) {
  dsl::Bindings locals = ctx.vars;
  CallContext cc{*this, var_string(ctx.vars, "user.name"), {}, nullptr, nullptr, {}};
  cc.base_collection = var_string(ctx.vars, "coll.path");
  if (cc.base_collection.empty()) cc.base_collection = "/";
  ChainRunner runner(*this, cc, locals);
  try {
    if (!runner.eval(rule.condition).as_bool()) return Verdict::allow("");
    std::optional<Verdict> v = runner.run(rule.actions);
    Verdict out = v ? std::move(*v) : Verdict::allow();
    out.rule = rule.name;
    return out;
  } catch (const std::exception& e) {
    return Verdict::error(describe(e), rule.name);
  }
}

Verdict Engine::fire_pep(std::string_view pep, const PepContext& ctx) {
  if (!is_known_pep(pep)) throw Error(Errc::UnknownPep, "unknown PEP '" + std::string(pep) + "'");
  trace("pep " + std::string(pep));
  auto rb = rule_base();
  Verdict verdict = Verdict::allow();
  if (t_pep_depth >= kMaxPepDepth) {
    verdict = Verdict::error("policy recursion limit reached");
  } else if (auto it = rb->by_pep.find(pep); it != rb->by_pep.end()) {
    DepthScope depth;
    for (const auto& rule : it->second) {
      Verdict v = run_rule(*rule, ctx);
      // An unmatched condition yields allow with no rule name; keep searching.
      if (v.kind == Verdict::Kind::allow && v.rule.empty()) continue;
      verdict = std::move(v);
      break;
    }
  }
  json detail = {{"pep", pep}, {"rule", verdict.rule}};
  if (!verdict.message.empty()) detail["message"] = verdict.message;
  for (const char* k : {"obj.path", "coll.path", "resc.name", "op"}) {
    std::string v = var_string(ctx.vars, k);
    if (!v.empty()) detail[k] = v;
  }
  catalog_.audit_append(var_string(ctx.vars, "user.name"), "pep." + to_string(verdict.kind),
                        detail.dump());
  return verdict;
}

void Engine::require_allowed(const Verdict& v) {
  if (v.kind == Verdict::Kind::deny)
    throw Error(Errc::Denied, v.message.empty() ? "denied by rule " + v.rule : v.message, {v.rule});
  if (v.kind == Verdict::Kind::error)
    throw Error(Errc::PolicyError, "rule " + (v.rule.empty() ? std::string("-") : v.rule) +
                                       " failed: " + v.message,
                {v.rule});
}

dsl::Value Engine::invoke(const std::string& name, const std::vector<dsl::Value>& args,
                          CallContext& ctx) {
  auto reg = registry();
  if (auto it = reg->services.find(name); it != reg->services.end()) {
    const MicroService& ms = it->second;
    const int n = static_cast<int>(args.size());
    if (n < ms.min_args || (ms.max_args >= 0 && n > ms.max_args))
      throw Error(Errc::InvalidArgument, name + "() called with " + std::to_string(n) + " arguments");
    return ms.body(args, ctx);
  }

  std::optional<WorkflowVersion> wf;
  for (const auto& w : catalog_.workflows())
    if (w.procedure_name == name && (!wf || w.attached_us >= wf->attached_us)) wf = w;
  if (!wf) throw Error(Errc::UnknownMicroService, "no micro-service or procedure '" + name + "'", {name});
  if (std::find(ctx.procedure_stack.begin(), ctx.procedure_stack.end(), name) !=
      ctx.procedure_stack.end()) {
    std::string chain;
    for (const auto& p : ctx.procedure_stack) chain += p + " -> ";
    throw Error(Errc::PolicyError, "procedure cycle: " + chain + name);
  }

  std::shared_ptr<const dsl::ProcedureAst> proc;
  {
    std::lock_guard lock(proc_mu_);
    auto& slot = proc_cache_[wf->workflow_id];
    if (!slot) slot = std::make_shared<const dsl::ProcedureAst>(dsl::parse_procedure(wf->source));
    proc = slot;
  }
  if (proc->params.size() != args.size())
    throw Error(Errc::InvalidArgument, name + "() expects " + std::to_string(proc->params.size()) +
                                           " arguments");

  dsl::Bindings vars;
  if (ctx.vars)
    for (const auto& [k, v] : *ctx.vars)
      if (dsl::is_system_variable(k)) vars[k] = v;
  for (std::size_t i = 0; i < args.size(); ++i) vars[proc->params[i]] = args[i];

  CallContext inner{*this, ctx.actor, ctx.base_collection, nullptr, ctx.observer,
                    ctx.procedure_stack};
  inner.procedure_stack.push_back(name);
  ChainRunner runner(*this, inner, vars);
  if (auto v = runner.run(proc->body); v && v->kind == Verdict::Kind::deny)
    throw Error(Errc::Denied, v->message);
  auto result = vars.find("result");
  return result != vars.end() ? result->second : dsl::Value(true);
}

Verdict Engine::run_procedure(const dsl::ProcedureAst& proc, const dsl::Bindings& args,
                              const std::string& actor, const std::string& base_collection,
                              RunObserver* observer) {
  dsl::Bindings vars = context_for(actor, "workflow.run").vars;
  vars["coll.path"] = base_collection;
  for (const auto& p : proc.params) {
    auto it = args.find(p);
    if (it == args.end()) throw Error(Errc::InvalidArgument, "parameter $" + p + " is not bound", {p});
    vars[p] = it->second;
  }
  CallContext cc{*this, actor, base_collection, nullptr, observer, {proc.name}};
  ChainRunner runner(*this, cc, vars);
  try {
    std::optional<Verdict> v = runner.run(proc.body);
    return v ? *v : Verdict::allow();
  } catch (const std::exception& e) {
    return Verdict::error(describe(e));
  }
}

PepContext Engine::context_for(const std::string& actor, const std::string& op) const {
  User u = require_user(actor);
  PepContext ctx;
  ctx.set("user.name", u.name).set("user.role", to_string(u.role)).set("op", op);
  return ctx;
}

// ---------------------------------------------------------------------------
// Locks and lookups
// ---------------------------------------------------------------------------

Engine::PathLock::PathLock(Engine& e, std::string_view path)
    : mu_(&e.path_locks_[std::hash<std::string_view>{}(path) % kLockStripes]) {
  if (!mu_->try_lock_for(e.opts_.lock_timeout))
    throw Error(Errc::Internal, "timed out waiting for lock on '" + std::string(path) + "'");
}

Engine::PathLock::~PathLock() { mu_->unlock(); }

User Engine::require_user(const std::string& name) const {
  auto u = catalog_.user(name);
  if (!u) throw Error(Errc::NoSuchUser, "no such user '" + name + "'", {name});
  return *u;
}

Resource Engine::require_resource(const std::string& name) const {
  auto r = catalog_.resource(name);
  if (!r) throw Error(Errc::NoSuchResource, "no such resource '" + name + "'", {name});
  return *r;
}

DataObject Engine::require_object(const std::string& path) const {
  auto o = catalog_.object(path);
  if (!o) throw Error(Errc::NoSuchObject, "no such object '" + path + "'", {path});
  return *o;
}

std::string Engine::resolve_resource(const std::string& requested) const {
  if (!requested.empty()) return requested;
  if (!opts_.default_resource.empty()) return opts_.default_resource;
  for (const auto& r : catalog_.resources())
    if (r.kind == ResourceKind::cache) return r.name;
  throw Error(Errc::NoSuchResource, "no resource named and no default resource available");
}

std::shared_ptr<StorageDriver> Engine::driver_for(const Resource& res) const {
  auto d = drivers_.find(res.driver_name);
  if (!d)
    throw Error(Errc::UnknownDriver,
                "resource '" + res.name + "' uses unregistered driver '" + res.driver_name + "'",
                {res.driver_name});
  return d;
}

// ---------------------------------------------------------------------------
// Byte movement
// ---------------------------------------------------------------------------

Bytes Engine::read_replica(const Replica& r) {
  Resource res = require_resource(r.resource);
  auto d = driver_for(res);
  trace("driver read " + res.name);
  return read_whole_object(*d, r.physical_ref);
}

Bytes Engine::read_verified(const DataObject& obj) {
  for (const auto& r : obj.replicas) {
    if (r.status != ReplicaStatus::good) continue;
    bool ok = false;
    Bytes b;
    try {
      b = read_replica(r);
      ok = sha256_hex(b) == r.checksum;
    } catch (const Error&) {
    }
    if (ok) return b;
    try {
      catalog_.set_replica_status(obj.path, r.resource, ReplicaStatus::suspect);
    } catch (const Error&) {
    }
  }
  throw Error(Errc::AllReplicasSuspect, "no intact replica of '" + obj.path + "'", {obj.path});
}

void Engine::discard_ref(const std::string& path, const Replica& r) {
  std::shared_ptr<StorageDriver> d;
  if (auto res = catalog_.resource(r.resource)) d = drivers_.find(res->driver_name);
  if (d && d->capabilities().supports_unlink) {
    try {
      trace("driver unlink " + r.resource);
      d->unlink(r.physical_ref);
      return;
    } catch (const Error&) {
    }
  }
  catalog_.add_orphan(path, r.resource, r.physical_ref);
}

Replica Engine::copy_to(const std::string& path, const Resource& res, std::string_view bytes,
                        const std::string& checksum) {
  auto d = driver_for(res);
  trace("driver write " + res.name);
  std::string ref = write_new_object(*d, res.root, bytes);
  Bytes back;
  try {
    back = read_whole_object(*d, ref);
  } catch (const Error&) {
  }
  Replica rep{res.name, ref, checksum, bytes.size(), ReplicaStatus::good};
  if (sha256_hex(back) != checksum) {
    discard_ref(path, rep);
    throw Error(Errc::ChecksumMismatch,
                "copy of '" + path + "' on " + res.name + " does not match its checksum", {res.name});
  }
  return rep;
}

DataObject Engine::store_locked(const std::string& actor, const std::string& path,
                                std::string_view bytes, const Resource& res,
                                const std::vector<AvuTriple>& avus) {
  std::optional<Replica> old;
  if (auto prev = catalog_.object(path))
    if (const Replica* r = prev->replica_on(res.name)) old = *r;
  auto d = driver_for(res);
  trace("driver write " + res.name);
  std::string ref = write_new_object(*d, res.root, bytes);
  Replica rep{res.name, ref, sha256_hex(bytes), bytes.size(), ReplicaStatus::good};
  DataObject obj;
  try {
    obj = catalog_.record_put(actor, path, rep, avus);
  } catch (...) {
    try {
      if (d->capabilities().supports_unlink) d->unlink(ref);
    } catch (const Error&) {
    }
    throw;
  }
  if (old) discard_ref(path, *old);
  return obj;
}

DataObject Engine::store_object(const std::string& actor, const std::string& path,
                                std::string_view bytes, const std::string& resource,
                                const std::vector<AvuTriple>& avus) {
  require_logical_path(path);
  Resource res = require_resource(resolve_resource(resource));
  PathLock lock(*this, path);
  return store_locked(actor, path, bytes, res, avus);
}

Bytes Engine::read_object(const std::string& path) {
  PathLock lock(*this, path);
  return read_verified(require_object(path));
}

void Engine::mark_suspect(const std::string& path) {
  PathLock lock(*this, path);
  auto obj = catalog_.object(path);
  if (!obj) return;
  for (const auto& r : obj->replicas)
    if (r.status == ReplicaStatus::good)
      catalog_.set_replica_status(path, r.resource, ReplicaStatus::suspect);
}

// ---------------------------------------------------------------------------
// High-level operations
// ---------------------------------------------------------------------------

void Engine::make_collection(const std::string& actor, const std::string& path,
                             CollectionKind kind, const std::string& owner) {
  require_logical_path(path);
  require_user(actor);
  const std::string parent = parent_path(path);
  if (!catalog_.collection(parent))
    throw Error(Errc::NoParent, "parent collection '" + parent + "' does not exist", {parent});
  if (catalog_.path_exists(path)) throw Error(Errc::Duplicate, "'" + path + "' exists", {path});
  if (!catalog_.check_access(parent, actor, Perm::write))
    throw Error(Errc::PermissionDenied, "no write permission on '" + parent + "'", {parent});

  PepContext ctx = context_for(actor, "collection.create");
  ctx.set("coll.path", path);
  {
    PathLock lock(*this, path);
    require_allowed(fire_pep("pep.collection.create.pre", ctx));
    catalog_.make_collection(actor, path, owner.empty() ? actor : owner, kind);
  }
  fire_pep("pep.collection.create.post", ctx);
}

void Engine::add_avu(const std::string& actor, const std::string& path, const AvuTriple& triple) {
  require_user(actor);
  if (!catalog_.path_exists(path)) throw Error(Errc::NoSuchPath, "no such path '" + path + "'", {path});
  if (!catalog_.check_access(path, actor, Perm::write))
    throw Error(Errc::PermissionDenied, "no write permission on '" + path + "'", {path});
  PepContext ctx = context_for(actor, "meta.add");
  if (auto obj = catalog_.object(path)) {
    ctx.set("obj.path", path).set("obj.owner", obj->owner).set("coll.path", parent_path(path));
  } else {
    ctx.set("coll.path", path);
  }
  {
    PathLock lock(*this, path);
    require_allowed(fire_pep("pep.meta.add.pre", ctx));
    catalog_.add_avu(actor, path, triple);
  }
  fire_pep("pep.meta.add.post", ctx);
}

DataObject Engine::put(const std::string& actor, const std::string& path, std::string_view bytes,
                       const std::string& resource) {
  return put_impl(actor, path, bytes, resource, {});
}

DataObject Engine::put_impl(const std::string& actor, const std::string& path,
                            std::string_view bytes, const std::string& resource,
                            const std::vector<AvuTriple>& avus) {
  require_logical_path(path);
  require_user(actor);
  auto coll = catalog_.collection(parent_path(path));
  if (!coll) throw Error(Errc::NoSuchPath, "no collection '" + parent_path(path) + "'", {path});
  if (coll->kind == CollectionKind::stream)
    throw Error(Errc::WrongKind, "stream collections take segments through stream ingest only");
  if (catalog_.collection(path)) throw Error(Errc::Duplicate, "'" + path + "' is a collection", {path});
  Resource res = require_resource(resolve_resource(resource));

  PepContext ctx = context_for(actor, "data.put");
  DataObject obj;
  {
    PathLock lock(*this, path);
    auto existing = catalog_.object(path);
    const std::string target = existing ? path : coll->path;
    if (!catalog_.check_access(target, actor, Perm::write))
      denied("no write permission on '" + target + "'");
    ctx.set("obj.path", path)
        .set("obj.owner", existing ? existing->owner : actor)
        .set("coll.path", coll->path)
        .set("resc.name", res.name);
    require_allowed(fire_pep("pep.data.put.pre", ctx));
    obj = store_locked(actor, path, bytes, res, avus);
  }
  fire_pep("pep.data.put.post", ctx);
  return obj;
}

Bytes Engine::get(const std::string& actor, const std::string& path) {
  require_user(actor);
  PepContext ctx = context_for(actor, "data.get");
  Bytes out;
  {
    PathLock lock(*this, path);
    DataObject obj = require_object(path);
    if (!catalog_.check_access(path, actor, Perm::read)) denied("no read permission on '" + path + "'");
    ctx.set("obj.path", path).set("obj.owner", obj.owner).set("coll.path", parent_path(path));
    require_allowed(fire_pep("pep.data.get.pre", ctx));
    out = read_verified(obj);
  }
  fire_pep("pep.data.get.post", ctx);
  return out;
}

void Engine::remove(const std::string& actor, const std::string& path) {
  require_user(actor);
  PepContext ctx = context_for(actor, "data.remove");
  {
    PathLock lock(*this, path);
    DataObject obj = require_object(path);
    if (!catalog_.check_access(path, actor, Perm::write))
      denied("no write permission on '" + path + "'");
    ctx.set("obj.path", path).set("obj.owner", obj.owner).set("coll.path", parent_path(path));
    require_allowed(fire_pep("pep.data.remove.pre", ctx));

    std::vector<Replica> unlinked, orphaned, failed;
    for (const auto& r : obj.replicas) {
      std::shared_ptr<StorageDriver> d;
      if (auto res = catalog_.resource(r.resource)) d = drivers_.find(res->driver_name);
      if (!d) {
        failed.push_back(r);
        continue;
      }
      if (!d->capabilities().supports_unlink) {
        orphaned.push_back(r);
        continue;
      }
      try {
        trace("driver unlink " + r.resource);
        d->unlink(r.physical_ref);
        unlinked.push_back(r);
      } catch (const Error& e) {
        if (e.code() == Errc::Unsupported)
          orphaned.push_back(r);
        else
          failed.push_back(r);
      }
    }
    for (const auto& r : orphaned) catalog_.add_orphan(path, r.resource, r.physical_ref);
    if (!failed.empty()) {
      for (const auto& r : unlinked) catalog_.drop_replica(path, r.resource);
      for (const auto& r : orphaned) catalog_.drop_replica(path, r.resource);
      std::vector<std::string> names;
      for (const auto& r : failed) {
        catalog_.set_replica_status(path, r.resource, ReplicaStatus::suspect);
        names.push_back(r.resource);
      }
      throw Error(Errc::DriverError, "could not unlink every replica of '" + path + "'", names);
    }
    catalog_.remove_object(path);
    catalog_.audit_append(actor, "data.remove", path);
  }
  fire_pep("pep.data.remove.post", ctx);
}

Replica Engine::replicate_impl(const std::string& actor, const std::string& path,
                               const Resource& dest, const std::string& from,
                               const std::string& op) {
  require_user(actor);
  PepContext ctx = context_for(actor, op);
  Replica rep;
  {
    PathLock lock(*this, path);
    DataObject obj = require_object(path);
    if (!catalog_.check_access(path, actor, Perm::write))
      denied("no write permission on '" + path + "'");
    if (obj.replica_on(dest.name))
      throw Error(Errc::Duplicate, "'" + path + "' already has a replica on " + dest.name, {dest.name});
    const Replica* src = nullptr;
    if (!from.empty()) {
      src = obj.replica_on(from);
      if (!src || src->status != ReplicaStatus::good)
        throw Error(Errc::NoSuchReplica, "'" + path + "' has no good replica on " + from, {from});
    }
    ctx.set("obj.path", path)
        .set("obj.owner", obj.owner)
        .set("coll.path", parent_path(path))
        .set("resc.name", dest.name);
    require_allowed(fire_pep("pep.data.replicate.pre", ctx));

    Bytes bytes;
    std::string checksum;
    if (src) {
      bytes = read_replica(*src);
      checksum = src->checksum;
      if (sha256_hex(bytes) != checksum) {
        catalog_.set_replica_status(path, src->resource, ReplicaStatus::suspect);
        throw Error(Errc::ChecksumMismatch, "source replica on " + from + " is corrupt", {from});
      }
    } else {
      bytes = read_verified(obj);
      checksum = sha256_hex(bytes);
    }
    rep = copy_to(path, dest, bytes, checksum);
    catalog_.add_replica(path, rep);
  }
  fire_pep("pep.data.replicate.post", ctx);
  return rep;
}

Replica Engine::replicate(const std::string& actor, const std::string& path,
                          const std::string& dest_resource) {
  return replicate_impl(actor, path, require_resource(dest_resource), {}, "data.replicate");
}

Replica Engine::stage(const std::string& actor, const std::string& path, const std::string& from,
                      const std::string& to_cache) {
  require_resource(from);
  Resource to = require_resource(to_cache);
  if (to.kind != ResourceKind::cache)
    throw Error(Errc::WrongKind, "'" + to.name + "' is not a cache resource", {to.name});
  return replicate_impl(actor, path, to, from, "data.stage");
}

Replica Engine::archive(const std::string& actor, const std::string& path,
                        const std::string& to_archive) {
  Resource to = require_resource(to_archive);
  if (to.kind != ResourceKind::archive)
    throw Error(Errc::WrongKind, "'" + to.name + "' is not an archive resource", {to.name});
  return replicate_impl(actor, path, to, {}, "data.archive");
}

std::vector<std::string> Engine::verify_replicas(const std::string& actor, const std::string& path) {
  require_user(actor);
  PathLock lock(*this, path);
  DataObject obj = require_object(path);
  if (!catalog_.check_access(path, actor, Perm::write))
    denied("no write permission on '" + path + "'");
  std::vector<std::string> bad;
  for (const auto& r : obj.replicas) {
    if (r.status != ReplicaStatus::good) continue;
    bool ok = false;
    try {
      ok = sha256_hex(read_replica(r)) == r.checksum;
    } catch (const Error&) {
    }
    if (!ok) {
      catalog_.set_replica_status(path, r.resource, ReplicaStatus::suspect);
      bad.push_back(r.resource);
    }
  }
  json detail = {{"path", path}, {"suspect", bad}};
  catalog_.audit_append(actor, "data.verify", detail.dump());
  return bad;
}

void Engine::mark_replica(const std::string& actor, const std::string& path,
                          const std::string& resource, ReplicaStatus status) {
  if (!catalog_.is_admin(actor)) throw Error(Errc::PermissionDenied, "only admins override replica status");
  PathLock lock(*this, path);
  catalog_.set_replica_status(path, resource, status);
}

}  // namespace pg
