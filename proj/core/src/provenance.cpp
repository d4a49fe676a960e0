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
#include "pg/provenance.hpp"

#include <algorithm>

#include "pg/error.hpp"
#include "pg/util.hpp"

namespace pg {

using nlohmann::json;

std::string to_string(PathDiff d) {
  switch (d) {
    case PathDiff::differing: return "differing";
    case PathDiff::only_in_a: return "only_in_a";
    case PathDiff::only_in_b: return "only_in_b";
    default: return "identical";
  }
}

std::vector<std::string> DiffReport::differing_outputs() const {
  std::vector<std::string> out;
  for (const auto& c : outputs)
    if (c.kind != PathDiff::identical) out.push_back(c.path);
  return out;
}

void to_json(json& j, const PathComparison& c) {
  j = {{"path", c.path}, {"kind", to_string(c.kind)}};
  if (!c.checksum_a.empty()) j["checksum_a"] = c.checksum_a;
  if (!c.checksum_b.empty()) j["checksum_b"] = c.checksum_b;
}

void to_json(json& j, const DiffReport& d) {
  json bindings = json::array();
  for (const auto& b : d.bindings)
    bindings.push_back({{"name", b.name}, {"a", b.a ? *b.a : json()}, {"b", b.b ? *b.b : json()}});
  j = {{"run_a", d.run_a},           {"run_b", d.run_b},
       {"workflow_a", d.workflow_a}, {"workflow_b", d.workflow_b},
       {"workflow_mismatch", d.workflow_mismatch},
       {"inputs", d.inputs},         {"outputs", d.outputs},
       {"bindings", bindings}};
}

// ---------------------------------------------------------------------------
// PathSetLock
// ---------------------------------------------------------------------------

namespace {

bool overlaps(const std::set<std::string>& a, const std::set<std::string>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

}  // namespace

PathSetLock::Guard::Guard(PathSetLock& owner, std::set<std::string> paths) : owner_(owner) {
  std::unique_lock lock(owner_.mu_);
  slot_ = owner_.queue_.emplace(owner_.queue_.end(), std::move(paths), false);
  owner_.cv_.wait(lock, [&] {
    for (auto it = owner_.queue_.begin(); it != slot_; ++it)
      if (overlaps(it->first, slot_->first)) return false;
    return true;
  });
  slot_->second = true;
}

PathSetLock::Guard::~Guard() {
  {
    std::lock_guard lock(owner_.mu_);
    owner_.queue_.erase(slot_);
  }
  owner_.cv_.notify_all();
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

namespace {

class Capture : public RunObserver {
 public:
  explicit Capture(std::map<std::string, std::string>& inputs) : inputs_(inputs) {}

  void on_read(const std::string& path, const std::string& checksum) override {
    if (!written.count(path)) inputs_.emplace(path, checksum);
  }
  void on_write(const std::string& path) override { written.insert(path); }

  std::set<std::string> written;

 private:
  std::map<std::string, std::string>& inputs_;
};

std::vector<PathComparison> compare(const std::map<std::string, std::string>& a,
                                    const std::map<std::string, std::string>& b) {
  std::set<std::string> paths;
  for (const auto& [p, _] : a) paths.insert(p);
  for (const auto& [p, _] : b) paths.insert(p);
  std::vector<PathComparison> out;
  for (const auto& p : paths) {
    PathComparison c;
    c.path = p;
    auto ia = a.find(p);
    auto ib = b.find(p);
    if (ia != a.end()) c.checksum_a = ia->second;
    if (ib != b.end()) c.checksum_b = ib->second;
    if (ia == a.end()) c.kind = PathDiff::only_in_b;
    else if (ib == b.end()) c.kind = PathDiff::only_in_a;
    else c.kind = ia->second == ib->second ? PathDiff::identical : PathDiff::differing;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

Provenance::Provenance(Engine& engine) : engine_(engine) {}

WorkflowVersion Provenance::attach_workflow(const std::string& actor, const std::string& coll,
                                            const std::string& source) {
  Catalog& cat = engine_.catalog();
  auto c = cat.collection(coll);
  if (!c) throw Error(Errc::NoSuchPath, "no collection '" + coll + "'", {coll});
  if (c->kind != CollectionKind::workflow)
    throw Error(Errc::NotAWorkflowCollection, "'" + coll + "' is not a workflow collection", {coll});
  if (!cat.check_access(coll, actor, Perm::write))
    throw Error(Errc::PermissionDenied, "no write permission on '" + coll + "'", {coll});
  dsl::ProcedureAst proc = dsl::parse_procedure(source);
  const std::string canonical = dsl::pretty_print(proc);
  const std::string id = sha256_hex(canonical);
  if (auto existing = cat.workflow(id)) return *existing;
  WorkflowVersion wf{id, coll, proc.name, canonical, now_us(), actor};
  cat.record_workflow(wf);
  cat.audit_append(actor, "workflow.attach", json({{"workflow_id", id}, {"collection", coll}}).dump());
  return cat.workflow(id).value_or(wf);
}

std::vector<WorkflowVersion> Provenance::list_workflows(const std::string& coll) const {
  return engine_.catalog().workflows(coll);
}

RunRecord Provenance::run(const std::string& run_id) const {
  auto r = engine_.catalog().run(run_id);
  if (!r) throw Error(Errc::NoSuchRun, "no such run '" + run_id + "'", {run_id});
  return *r;
}

std::pair<std::set<std::string>, std::set<std::string>> Provenance::static_paths(
    const dsl::ProcedureAst& proc, const std::string& coll) const {
  std::set<std::string> reads, writes;
  dsl::for_each_call(proc.body, [&](const dsl::Expr::Call& call) {
    auto ms = engine_.find_microservice(call.name);
    if (!ms) return;
    auto take = [&](const std::vector<int>& positions, std::set<std::string>& into) {
      for (int i : positions) {
        if (i >= static_cast<int>(call.args.size())) continue;
        const auto* lit = std::get_if<dsl::Expr::Literal>(&call.args[i]->node);
        if (!lit || !lit->value.is_string()) continue;
        const std::string& p = lit->value.as_string();
        std::string full = !p.empty() && p[0] == '/' ? p : join_path(coll, p);
        if (is_valid_logical_path(full)) into.insert(full);
      }
    };
    take(ms->reads, reads);
    take(ms->writes, writes);
  });
  return {reads, writes};
}

void Provenance::ensure_collection(const std::string& path, const std::string& owner) {
  Catalog& cat = engine_.catalog();
  if (cat.collection(path)) return;
  try {
    cat.make_collection(owner, path, owner, CollectionKind::plain);
  } catch (const Error& e) {
    if (e.code() != Errc::Duplicate) throw;
  }
}

void Provenance::snapshot_inputs(const std::string& actor, const std::string& dir,
                                 const std::map<std::string, std::string>& inputs) {
  Catalog& cat = engine_.catalog();
  std::uint64_t total = 0;
  for (const auto& [path, _] : inputs)
    if (auto obj = cat.object(path); obj && !obj->replicas.empty()) total += obj->replicas[0].size;
  if (total > kSnapshotLimit)
    throw Error(Errc::InvalidArgument, "inputs total " + std::to_string(total) +
                                           " bytes; snapshots are limited to 16 MiB");
  const std::string owner = cat.collection(parent_path(dir))->owner;
  ensure_collection(dir, owner);
  int n = 0;
  for (const auto& [path, checksum] : inputs) {
    Bytes b = engine_.read_object(path);
    engine_.store_object(actor, join_path(dir, "input-" + std::to_string(n++)), b, {},
                         {{"snapshot.of", path, checksum}});
  }
}

RunRecord Provenance::execute(const std::string& actor, const WorkflowVersion& wf,
                              const json& bindings, const RunOptions& opts,
                              const std::string& rerun_of) {
  Catalog& cat = engine_.catalog();
  dsl::ProcedureAst proc = dsl::parse_procedure(wf.source);

  if (!bindings.is_object()) throw Error(Errc::InvalidArgument, "bindings must be a JSON object");
  dsl::Bindings args;
  for (const auto& [k, v] : bindings.items()) {
    if (std::find(proc.params.begin(), proc.params.end(), k) == proc.params.end())
      throw Error(Errc::InvalidArgument, "'" + proc.name + "' has no parameter $" + k, {k});
    args[k] = v.get<dsl::Value>();
  }
  for (const auto& p : proc.params)
    if (!args.count(p)) throw Error(Errc::InvalidArgument, "parameter $" + p + " is not bound", {p});

  PepContext ctx = engine_.context_for(actor, "workflow.run");
  ctx.set("coll.path", wf.collection);
  Verdict pre = engine_.fire_pep("pep.workflow.run.pre", ctx);
  if (pre.kind == Verdict::Kind::deny) throw Error(Errc::Denied, pre.message, {pre.rule});
  if (pre.kind == Verdict::Kind::error)
    throw Error(Errc::PolicyError, "rule " + pre.rule + " failed: " + pre.message, {pre.rule});

  auto [reads, writes] = static_paths(proc, wf.collection);
  std::set<std::string> declared = reads;
  declared.insert(writes.begin(), writes.end());
  PathSetLock::Guard guard(locks_, declared);

  RunRecord rec;
  rec.run_id = random_hex(16);
  rec.workflow_id = wf.workflow_id;
  rec.collection = wf.collection;
  rec.actor = actor;
  rec.bindings = bindings;
  rec.rerun_of = rerun_of;
  rec.t_start = now_us();
  for (const auto& p : reads)
    if (auto obj = cat.object(p))
      if (auto sum = obj->checksum()) rec.inputs[p] = *sum;

  const std::string runs_dir = join_path(wf.collection, "runs");
  const std::string coll_owner = cat.collection(wf.collection)->owner;
  ensure_collection(runs_dir, coll_owner);
  if (opts.snapshot_inputs) snapshot_inputs(actor, join_path(runs_dir, rec.run_id), rec.inputs);

  Capture capture(rec.inputs);
  Verdict v = engine_.run_procedure(proc, args, actor, wf.collection, &capture);
  if (v.kind == Verdict::Kind::allow) {
    rec.status = RunStatus::ok;
    for (const auto& p : capture.written)
      if (auto obj = cat.object(p))
        if (auto sum = obj->checksum()) rec.outputs[p] = *sum;
  } else {
    rec.status = RunStatus::failed;
    rec.detail = v.kind == Verdict::Kind::deny ? "denied: " + v.message : v.message;
    for (const auto& p : capture.written) engine_.mark_suspect(p);
  }
  rec.t_end = now_us();

  cat.record_run(rec);
  engine_.store_object(actor, join_path(runs_dir, rec.run_id + ".json"), json(rec).dump(2) + "\n");
  cat.audit_append(actor, "workflow.run",
                   json({{"workflow_id", rec.workflow_id},
                         {"run_id", rec.run_id},
                         {"status", rec.status == RunStatus::ok ? "ok" : "failed"}})
                       .dump());
  engine_.fire_pep("pep.workflow.run.post", ctx);
  return rec;
}

RunRecord Provenance::run_workflow(const std::string& actor, const std::string& workflow_id,
                                   const json& bindings, const RunOptions& opts) {
  auto wf = engine_.catalog().workflow(workflow_id);
  if (!wf) throw Error(Errc::NoSuchWorkflow, "no workflow '" + workflow_id + "'", {workflow_id});
  return execute(actor, *wf, bindings, opts, {});
}

RunRecord Provenance::rerun(const std::string& actor, const std::string& run_id,
                            const json& overrides, const RunOptions& opts) {
  RunRecord orig = run(run_id);
  Catalog& cat = engine_.catalog();
  std::vector<std::string> stale;
  for (const auto& [path, checksum] : orig.inputs) {
    auto obj = cat.object(path);
    auto sum = obj ? obj->checksum() : std::nullopt;
    if (!sum || *sum != checksum) stale.push_back(path);
  }
  if (!stale.empty()) {
    std::string list;
    for (const auto& p : stale) list += (list.empty() ? "" : ", ") + p;
    throw Error(Errc::StaleInputs, "inputs changed since run " + run_id + ": " + list, stale);
  }
  auto wf = cat.workflow(orig.workflow_id);
  if (!wf) throw Error(Errc::NoSuchWorkflow, "no workflow '" + orig.workflow_id + "'");
  if (!overrides.is_object()) throw Error(Errc::InvalidArgument, "overrides must be a JSON object");
  json merged = orig.bindings;
  for (const auto& [k, v] : overrides.items()) merged[k] = v;
  return execute(actor, *wf, merged, opts, run_id);
}

DiffReport Provenance::diff_runs(const std::string& a, const std::string& b) const {
  RunRecord ra = run(a);
  RunRecord rb = run(b);
  DiffReport d;
  d.run_a = a;
  d.run_b = b;
  d.workflow_a = ra.workflow_id;
  d.workflow_b = rb.workflow_id;
  d.workflow_mismatch = ra.workflow_id != rb.workflow_id;
  d.inputs = compare(ra.inputs, rb.inputs);
  d.outputs = compare(ra.outputs, rb.outputs);
  std::set<std::string> names;
  for (const auto& [k, _] : ra.bindings.items()) names.insert(k);
  for (const auto& [k, _] : rb.bindings.items()) names.insert(k);
  for (const auto& n : names) {
    BindingComparison c;
    c.name = n;
    if (ra.bindings.contains(n)) c.a = ra.bindings.at(n);
    if (rb.bindings.contains(n)) c.b = rb.bindings.at(n);
    if (c.a != c.b) d.bindings.push_back(std::move(c));
  }
  return d;
}

}  // namespace pg
