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
#include "pg/catalog.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <mutex>
#include <tuple>

#include "pg/error.hpp"
#include "pg/util.hpp"

namespace pg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string to_string(Role r) { return r == Role::admin ? "admin" : "user"; }
std::string to_string(ResourceKind k) { return k == ResourceKind::archive ? "archive" : "cache"; }
std::string to_string(CollectionKind k) {
  switch (k) {
    case CollectionKind::stream: return "stream";
    case CollectionKind::workflow: return "workflow";
    default: return "plain";
  }
}
std::string to_string(Perm p) {
  switch (p) {
    case Perm::read: return "read";
    case Perm::write: return "write";
    case Perm::own: return "own";
    default: return "null";
  }
}
std::string to_string(ReplicaStatus s) {
  switch (s) {
    case ReplicaStatus::stale: return "stale";
    case ReplicaStatus::suspect: return "suspect";
    default: return "good";
  }
}

Role parse_role(std::string_view s) {
  if (s == "admin") return Role::admin;
  if (s == "user") return Role::user;
  throw Error(Errc::InvalidArgument, "unknown role '" + std::string(s) + "'");
}
ResourceKind parse_resource_kind(std::string_view s) {
  if (s == "cache") return ResourceKind::cache;
  if (s == "archive") return ResourceKind::archive;
  throw Error(Errc::InvalidArgument, "unknown resource kind '" + std::string(s) + "'");
}
CollectionKind parse_collection_kind(std::string_view s) {
  if (s == "plain") return CollectionKind::plain;
  if (s == "stream") return CollectionKind::stream;
  if (s == "workflow") return CollectionKind::workflow;
  throw Error(Errc::InvalidArgument, "unknown collection kind '" + std::string(s) + "'");
}
Perm parse_perm(std::string_view s) {
  if (s == "read") return Perm::read;
  if (s == "write") return Perm::write;
  if (s == "own") return Perm::own;
  if (s == "null" || s == "none") return Perm::none;
  throw Error(Errc::InvalidArgument, "unknown permission '" + std::string(s) + "'");
}
ReplicaStatus parse_replica_status(std::string_view s) {
  if (s == "good") return ReplicaStatus::good;
  if (s == "stale") return ReplicaStatus::stale;
  if (s == "suspect") return ReplicaStatus::suspect;
  throw Error(Errc::InvalidArgument, "unknown replica status '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// DataObject helpers
// ---------------------------------------------------------------------------

const Replica* DataObject::replica_on(std::string_view resource) const {
  for (const auto& r : replicas)
    if (r.resource == resource) return &r;
  return nullptr;
}

std::optional<std::string> DataObject::checksum() const {
  for (const auto& r : replicas)
    if (r.status == ReplicaStatus::good) return r.checksum;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json acl_to_json(const Acl& acl) {
  json j = json::object();
  for (const auto& [k, v] : acl) j[k] = to_string(v);
  return j;
}

Acl acl_from_json(const json& j) {
  Acl acl;
  for (const auto& [k, v] : j.items()) acl[k] = parse_perm(v.get<std::string>());
  return acl;
}

}  // namespace

void to_json(json& j, const User& v) {
  j = {{"name", v.name}, {"role", to_string(v.role)}, {"secret_hash", v.secret_hash},
       {"groups", v.groups}};
}
void from_json(const json& j, User& v) {
  v.name = j.at("name");
  v.role = parse_role(j.at("role").get<std::string>());
  v.secret_hash = j.at("secret_hash");
  v.groups = j.at("groups").get<std::set<std::string>>();
}
void to_json(json& j, const Resource& v) {
  j = {{"name", v.name}, {"driver", v.driver_name}, {"root", v.root}, {"kind", to_string(v.kind)}};
}
void from_json(const json& j, Resource& v) {
  v.name = j.at("name");
  v.driver_name = j.at("driver");
  v.root = j.at("root");
  v.kind = parse_resource_kind(j.at("kind").get<std::string>());
}
void to_json(json& j, const Collection& v) {
  j = {{"path", v.path}, {"owner", v.owner}, {"acl", acl_to_json(v.acl)}, {"kind", to_string(v.kind)}};
}
void from_json(const json& j, Collection& v) {
  v.path = j.at("path");
  v.owner = j.at("owner");
  v.acl = acl_from_json(j.at("acl"));
  v.kind = parse_collection_kind(j.at("kind").get<std::string>());
}
void to_json(json& j, const Replica& v) {
  j = {{"resource", v.resource}, {"physical_ref", v.physical_ref}, {"checksum", v.checksum},
       {"size", v.size}, {"status", to_string(v.status)}};
}
void from_json(const json& j, Replica& v) {
  v.resource = j.at("resource");
  v.physical_ref = j.at("physical_ref");
  v.checksum = j.at("checksum");
  v.size = j.at("size");
  v.status = parse_replica_status(j.at("status").get<std::string>());
}
void to_json(json& j, const DataObject& v) {
  j = {{"path", v.path}, {"owner", v.owner}, {"acl", acl_to_json(v.acl)},
       {"replicas", v.replicas}, {"version", v.version}};
}
void from_json(const json& j, DataObject& v) {
  v.path = j.at("path");
  v.owner = j.at("owner");
  v.acl = acl_from_json(j.at("acl"));
  v.replicas = j.at("replicas").get<std::vector<Replica>>();
  v.version = j.at("version");
}
void to_json(json& j, const AvuTriple& v) {
  j = {{"name", v.attr_name}, {"value", v.attr_value}, {"comment", v.attr_comment}};
}
void from_json(const json& j, AvuTriple& v) {
  v.attr_name = j.at("name");
  v.attr_value = j.at("value");
  v.attr_comment = j.value("comment", "");
}
void to_json(json& j, const AuditEntry& v) {
  j = {{"seq", v.seq}, {"when", v.when}, {"actor", v.actor}, {"event", v.event},
       {"detail", v.detail}};
}
void from_json(const json& j, AuditEntry& v) {
  v.seq = j.at("seq");
  v.when = j.at("when");
  v.actor = j.at("actor");
  v.event = j.at("event");
  v.detail = j.at("detail");
}
void to_json(json& j, const RuleRecord& v) {
  j = {{"name", v.name}, {"pep", v.pep}, {"priority", v.priority}, {"source", v.source}};
}
void from_json(const json& j, RuleRecord& v) {
  v.name = j.at("name");
  v.pep = j.at("pep");
  v.priority = j.at("priority");
  v.source = j.at("source");
}
void to_json(json& j, const WorkflowVersion& v) {
  j = {{"workflow_id", v.workflow_id}, {"collection", v.collection},
       {"procedure", v.procedure_name}, {"source", v.source},
       {"attached_us", v.attached_us}, {"attached_by", v.attached_by}};
}
void from_json(const json& j, WorkflowVersion& v) {
  v.workflow_id = j.at("workflow_id");
  v.collection = j.at("collection");
  v.procedure_name = j.at("procedure");
  v.source = j.at("source");
  v.attached_us = j.at("attached_us");
  v.attached_by = j.at("attached_by");
}
void to_json(json& j, const RunRecord& v) {
  j = {{"run_id", v.run_id},
       {"workflow_id", v.workflow_id},
       {"collection", v.collection},
       {"actor", v.actor},
       {"bindings", v.bindings},
       {"inputs", v.inputs},
       {"outputs", v.outputs},
       {"status", v.status == RunStatus::ok ? "ok" : "failed"},
       {"detail", v.detail},
       {"t_start", v.t_start},
       {"t_end", v.t_end},
       {"rerun_of", v.rerun_of}};
}
void from_json(const json& j, RunRecord& v) {
  v.run_id = j.at("run_id");
  v.workflow_id = j.at("workflow_id");
  v.collection = j.at("collection");
  v.actor = j.at("actor");
  v.bindings = j.at("bindings");
  v.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  v.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  v.status = j.at("status") == "ok" ? RunStatus::ok : RunStatus::failed;
  v.detail = j.at("detail");
  v.t_start = j.at("t_start");
  v.t_end = j.at("t_end");
  v.rerun_of = j.value("rerun_of", "");
}
void to_json(json& j, const Orphan& v) {
  j = {{"path", v.path}, {"resource", v.resource}, {"physical_ref", v.physical_ref},
       {"when", v.when}};
}
void from_json(const json& j, Orphan& v) {
  v.path = j.at("path");
  v.resource = j.at("resource");
  v.physical_ref = j.at("physical_ref");
  v.when = j.at("when");
}
void to_json(json& j, const CatalogState& v) {
  json avus = json::object();
  for (const auto& [path, set] : v.avus) avus[path] = set;
  j = {{"last_seq", v.last_seq},
       {"users", v.users},
       {"resources", v.resources},
       {"collections", v.collections},
       {"objects", v.objects},
       {"avus", avus},
       {"rules", v.rules},
       {"rule_base_version", v.rule_base_version},
       {"workflows", v.workflows},
       {"runs", v.runs},
       {"audit", v.audit},
       {"orphans", v.orphans}};
}
void from_json(const json& j, CatalogState& v) {
  v.last_seq = j.at("last_seq");
  v.users = j.at("users").get<std::map<std::string, User>>();
  v.resources = j.at("resources").get<std::map<std::string, Resource>>();
  v.collections = j.at("collections").get<std::map<std::string, Collection>>();
  v.objects = j.at("objects").get<std::map<std::string, DataObject>>();
  v.avus.clear();
  for (const auto& [path, arr] : j.at("avus").items())
    v.avus[path] = arr.get<std::set<AvuTriple>>();
  v.rules = j.at("rules").get<std::map<std::string, RuleRecord>>();
  v.rule_base_version = j.at("rule_base_version");
  v.workflows = j.at("workflows").get<std::map<std::string, WorkflowVersion>>();
  v.runs = j.at("runs").get<std::map<std::string, RunRecord>>();
  v.audit = j.at("audit").get<std::vector<AuditEntry>>();
  v.orphans = j.at("orphans").get<std::vector<Orphan>>();
}

// ---------------------------------------------------------------------------
// Metadata predicates
// ---------------------------------------------------------------------------

namespace {

struct PredLexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::MalformedPredicate,
                "malformed predicate at offset " + std::to_string(pos) + ": " + what);
  }
  std::string word() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
  std::string op() {
    skip_ws();
    if (text.substr(pos, 2) == "!=") return pos += 2, "!=";
    if (text.substr(pos, 2) == "==") return pos += 2, "=";
    if (text.substr(pos, 1) == "=") return pos += 1, "=";
    std::string w = word();
    std::transform(w.begin(), w.end(), w.begin(), ::tolower);
    if (w == "like") return w;
    fail("expected =, != or like");
  }
  std::string literal() {
    skip_ws();
    if (pos >= text.size()) fail("expected literal");
    std::string out;
    if (text[pos] != '"') {
      // Bare literal: up to whitespace.
      while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])))
        out += text[pos++];
      return out;
    }
    ++pos;
    while (pos < text.size() && text[pos] != '"') {
      if (text[pos] == '\\') {
        if (pos + 1 >= text.size()) fail("dangling escape");
        out += text[pos + 1];
        pos += 2;
      } else {
        out += text[pos++];
      }
    }
    if (pos >= text.size()) fail("unterminated string");
    ++pos;
    return out;
  }
  bool conjunction() {
    skip_ws();
    if (text.substr(pos, 2) == "&&") return pos += 2, true;
    std::size_t save = pos;
    std::string w = word();
    std::transform(w.begin(), w.end(), w.begin(), ::tolower);
    if (w == "and") return true;
    pos = save;
    return false;
  }
};

bool group_has(const std::vector<AvuClause>& g, AvuField f) {
  return std::any_of(g.begin(), g.end(), [f](const AvuClause& c) { return c.field == f; });
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

AvuPredicate parse_avu_predicate(std::string_view text) {
  PredLexer lx{text};
  AvuPredicate pred;
  if (lx.at_end()) lx.fail("empty predicate");
  while (true) {
    std::string f = lx.word();
    std::transform(f.begin(), f.end(), f.begin(), ::tolower);
    AvuClause c;
    if (f == "name" || f == "attr_name" || f == "attribute") c.field = AvuField::name;
    else if (f == "value" || f == "attr_value") c.field = AvuField::value;
    else if (f == "comment" || f == "attr_comment") c.field = AvuField::comment;
    else lx.fail("expected name, value or comment");
    std::string o = lx.op();
    c.op = o == "=" ? AvuOp::eq : o == "!=" ? AvuOp::ne : AvuOp::like;
    c.literal = lx.literal();
    if (c.field == AvuField::name || pred.groups.empty() || group_has(pred.groups.back(), c.field))
      pred.groups.emplace_back();
    pred.groups.back().push_back(std::move(c));
    if (lx.at_end()) break;
    if (!lx.conjunction()) lx.fail("expected 'and'");
  }
  return pred;
}

std::string format_avu_predicate(const AvuPredicate& pred) {
  std::string out;
  for (const auto& g : pred.groups) {
    for (const auto& c : g) {
      if (!out.empty()) out += " and ";
      out += c.field == AvuField::name ? "name" : c.field == AvuField::value ? "value" : "comment";
      out += c.op == AvuOp::eq ? " = " : c.op == AvuOp::ne ? " != " : " like ";
      out += quote(c.literal);
    }
  }
  return out;
}

bool clause_matches(const AvuClause& clause, const AvuTriple& t) noexcept {
  const std::string& v = clause.field == AvuField::name    ? t.attr_name
                         : clause.field == AvuField::value ? t.attr_value
                                                           : t.attr_comment;
  switch (clause.op) {
    case AvuOp::eq: return v == clause.literal;
    case AvuOp::ne: return v != clause.literal;
    case AvuOp::like: return glob_match(clause.literal, v);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Secrets
// ---------------------------------------------------------------------------

namespace {

constexpr int kPbkdfIterations = 10000;

std::string derive(std::string_view secret, std::string_view salt, int iterations) {
  unsigned char out[32];
  if (PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()),
                        reinterpret_cast<const unsigned char*>(salt.data()),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(), sizeof out,
                        out) != 1)
    throw Error(Errc::Internal, "key derivation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned char b : out) {
    s += hex[b >> 4];
    s += hex[b & 0xf];
  }
  return s;
}

std::string hash_secret(std::string_view secret) {
  const std::string salt = random_hex(16);
  return "pbkdf2-sha256$" + std::to_string(kPbkdfIterations) + "$" + salt + "$" +
         derive(secret, salt, kPbkdfIterations);
}

bool check_secret(std::string_view stored, std::string_view secret) {
  // pbkdf2-sha256$<iter>$<salt>$<hex>
  auto a = stored.find('$');
  auto b = stored.find('$', a + 1);
  auto c = stored.find('$', b + 1);
  if (a == std::string_view::npos || b == std::string_view::npos || c == std::string_view::npos)
    return false;
  int iterations = std::stoi(std::string(stored.substr(a + 1, b - a - 1)));
  std::string_view salt = stored.substr(b + 1, c - b - 1);
  return constant_time_equal(derive(secret, salt, iterations), stored.substr(c + 1));
}

// A fixed, well-formed hash to burn the same work for unknown users.
const std::string& decoy_hash() {
  static const std::string h = "pbkdf2-sha256$" + std::to_string(kPbkdfIterations) +
                               "$00000000000000000000000000000000$" + std::string(64, '0');
  return h;
}

// ---------------------------------------------------------------------------
// State machine: the single mutation path for live commits and replay.
// ---------------------------------------------------------------------------

[[noreturn]] void corrupt(const JournalRecord& rec, const std::string& why) {
  throw Error(Errc::CorruptJournal,
              "journal record " + std::to_string(rec.seq) + " (" + rec.op + "): " + why);
}

struct StateMachine {
  CatalogState s;
  // attr_name -> paths carrying at least one triple with that name
  std::map<std::string, std::set<std::string>> paths_by_name;

  void rebuild_index() {
    paths_by_name.clear();
    for (const auto& [path, set] : s.avus)
      for (const auto& t : set) paths_by_name[t.attr_name].insert(path);
  }

  void drop_avus(const std::string& path) {
    auto it = s.avus.find(path);
    if (it == s.avus.end()) return;
    for (const auto& t : it->second) {
      auto& paths = paths_by_name[t.attr_name];
      paths.erase(path);
      if (paths.empty()) paths_by_name.erase(t.attr_name);
    }
    s.avus.erase(it);
  }

  void attach(const std::string& path, const AvuTriple& t) {
    s.avus[path].insert(t);
    paths_by_name[t.attr_name].insert(path);
  }

  bool path_exists(const std::string& p) const {
    return s.collections.count(p) || s.objects.count(p);
  }

  void apply(const JournalRecord& rec) {
    if (rec.seq != s.last_seq + 1) corrupt(rec, "out of sequence");
    try {
      apply_op(rec);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      corrupt(rec, e.what());
    }
    s.last_seq = rec.seq;
  }

  void apply_op(const JournalRecord& rec) {
    const json& a = rec.args;
    const std::string& op = rec.op;
    if (op == "user.create") {
      User u = a.at("user").get<User>();
      if (s.users.count(u.name)) corrupt(rec, "duplicate user");
      s.users.emplace(u.name, std::move(u));
    } else if (op == "user.group_add") {
      auto it = s.users.find(a.at("user").get<std::string>());
      if (it == s.users.end()) corrupt(rec, "unknown user");
      it->second.groups.insert(a.at("group").get<std::string>());
    } else if (op == "resource.register") {
      Resource r = a.at("resource").get<Resource>();
      if (s.resources.count(r.name)) corrupt(rec, "duplicate resource");
      s.resources.emplace(r.name, std::move(r));
    } else if (op == "coll.create") {
      Collection c = a.at("collection").get<Collection>();
      if (path_exists(c.path)) corrupt(rec, "duplicate path");
      if (c.path != "/" && !s.collections.count(parent_path(c.path))) corrupt(rec, "no parent");
      s.collections.emplace(c.path, std::move(c));
    } else if (op == "acl.set") {
      const std::string path = a.at("path");
      const std::string who = a.at("principal");
      Perm p = parse_perm(a.at("perm").get<std::string>());
      Acl* acl = nullptr;
      if (auto c = s.collections.find(path); c != s.collections.end()) acl = &c->second.acl;
      else if (auto o = s.objects.find(path); o != s.objects.end()) acl = &o->second.acl;
      else corrupt(rec, "no such path");
      if (p == Perm::none) acl->erase(who);
      else (*acl)[who] = p;
    } else if (op == "avu.add") {
      const std::string path = a.at("path");
      if (!path_exists(path)) corrupt(rec, "no such path");
      attach(path, a.at("triple").get<AvuTriple>());
    } else if (op == "obj.put") {
      const std::string path = a.at("path");
      if (!s.collections.count(parent_path(path))) corrupt(rec, "no parent collection");
      if (s.collections.count(path)) corrupt(rec, "path is a collection");
      Replica rep = a.at("replica").get<Replica>();
      auto it = s.objects.find(path);
      if (it == s.objects.end()) {
        DataObject o;
        o.path = path;
        o.owner = a.at("actor");
        o.version = 1;
        o.replicas.push_back(std::move(rep));
        s.objects.emplace(path, std::move(o));
      } else {
        DataObject& o = it->second;
        ++o.version;
        std::vector<Replica> next;
        for (auto& r : o.replicas) {
          if (r.resource == rep.resource) continue;
          if (!(r.status == ReplicaStatus::good && r.checksum == rep.checksum))
            r.status = ReplicaStatus::stale;
          next.push_back(r);
        }
        next.insert(next.begin(), std::move(rep));
        o.replicas = std::move(next);
      }
      for (const auto& t : a.value("avus", json::array())) attach(path, t.get<AvuTriple>());
    } else if (op == "obj.replica_add") {
      auto it = s.objects.find(a.at("path").get<std::string>());
      if (it == s.objects.end()) corrupt(rec, "no such object");
      Replica rep = a.at("replica").get<Replica>();
      if (it->second.replica_on(rep.resource)) corrupt(rec, "duplicate replica resource");
      it->second.replicas.push_back(std::move(rep));
    } else if (op == "obj.replica_status") {
      auto it = s.objects.find(a.at("path").get<std::string>());
      if (it == s.objects.end()) corrupt(rec, "no such object");
      const std::string res = a.at("resource");
      bool found = false;
      for (auto& r : it->second.replicas)
        if (r.resource == res) {
          r.status = parse_replica_status(a.at("status").get<std::string>());
          found = true;
        }
      if (!found) corrupt(rec, "no such replica");
    } else if (op == "obj.replica_drop") {
      auto it = s.objects.find(a.at("path").get<std::string>());
      if (it == s.objects.end()) corrupt(rec, "no such object");
      auto& reps = it->second.replicas;
      const std::string res = a.at("resource");
      auto pos = std::find_if(reps.begin(), reps.end(),
                              [&](const Replica& r) { return r.resource == res; });
      if (pos == reps.end() || reps.size() == 1) corrupt(rec, "cannot drop replica");
      reps.erase(pos);
    } else if (op == "obj.remove") {
      const std::string path = a.at("path");
      if (!s.objects.erase(path)) corrupt(rec, "no such object");
      drop_avus(path);
    } else if (op == "orphan.add") {
      s.orphans.push_back(Orphan{a.at("path"), a.at("resource"), a.at("physical_ref"), rec.when});
    } else if (op == "rule.add") {
      for (const auto& j : a.at("rules")) {
        RuleRecord r = j.get<RuleRecord>();
        if (s.rules.count(r.name)) corrupt(rec, "duplicate rule");
        s.rules.emplace(r.name, std::move(r));
      }
      ++s.rule_base_version;
    } else if (op == "rule.remove") {
      if (!s.rules.erase(a.at("name").get<std::string>())) corrupt(rec, "no such rule");
      ++s.rule_base_version;
    } else if (op == "wf.attach") {
      WorkflowVersion wf = a.at("workflow").get<WorkflowVersion>();
      if (s.workflows.count(wf.workflow_id)) corrupt(rec, "duplicate workflow");
      s.workflows.emplace(wf.workflow_id, std::move(wf));
    } else if (op == "run.record") {
      RunRecord r = a.at("run").get<RunRecord>();
      if (s.runs.count(r.run_id)) corrupt(rec, "run records are immutable");
      s.runs.emplace(r.run_id, std::move(r));
    } else if (op == "audit") {
      AuditEntry e;
      e.seq = s.audit.empty() ? 1 : s.audit.back().seq + 1;
      e.when = rec.when;
      e.actor = a.at("actor");
      e.event = a.at("event");
      e.detail = a.at("detail");
      s.audit.push_back(std::move(e));
    } else {
      corrupt(rec, "unknown op");
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

struct Catalog::Impl {
  CatalogOptions opts;
  mutable std::shared_mutex mu;
  StateMachine sm;
  std::unique_ptr<Journal> journal;
  std::function<void(const JournalRecord&)> observer;

  // Caller holds the unique lock.
  void commit(std::string op, json args) {
    JournalRecord rec{sm.s.last_seq + 1, std::move(op), std::move(args), now_us()};
    if (journal) journal->append(rec);
    sm.apply(rec);
    if (observer) observer(rec);
    if (journal && opts.snapshot_every && rec.seq % opts.snapshot_every == 0)
      journal->write_snapshot(rec.seq, json(sm.s));
  }

  const User& require_user(const std::string& name) const {
    auto it = sm.s.users.find(name);
    if (it == sm.s.users.end()) throw Error(Errc::NoSuchUser, "no such user '" + name + "'");
    return it->second;
  }

  bool admin(std::string_view name) const {
    auto it = sm.s.users.find(std::string(name));
    return it != sm.s.users.end() && it->second.role == Role::admin;
  }

  void require_admin(const std::string& caller) const {
    if (!admin(caller)) throw Error(Errc::PermissionDenied, "'" + caller + "' is not an admin");
  }

  bool principal_exists(const std::string& name) const {
    if (sm.s.users.count(name)) return true;
    for (const auto& [_, u] : sm.s.users)
      if (u.groups.count(name)) return true;
    return false;
  }

  Perm perm(std::string_view path, std::string_view user) const {
    auto uit = sm.s.users.find(std::string(user));
    if (uit == sm.s.users.end()) return Perm::none;
    if (uit->second.role == Role::admin) return Perm::own;
    const std::string* owner = nullptr;
    const Acl* acl = nullptr;
    if (auto c = sm.s.collections.find(std::string(path)); c != sm.s.collections.end()) {
      owner = &c->second.owner;
      acl = &c->second.acl;
    } else if (auto o = sm.s.objects.find(std::string(path)); o != sm.s.objects.end()) {
      owner = &o->second.owner;
      acl = &o->second.acl;
    } else {
      return Perm::none;
    }
    if (*owner == user) return Perm::own;
    Perm best = Perm::none;
    auto consider = [&](const std::string& who) {
      if (auto it = acl->find(who); it != acl->end() && it->second > best) best = it->second;
    };
    consider(std::string(user));
    for (const auto& g : uit->second.groups) consider(g);
    return best;
  }
};

Catalog::Catalog(CatalogOptions opts) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(opts);
  if (impl_->opts.dir.empty()) return;
  impl_->journal = std::make_unique<Journal>(impl_->opts.dir, impl_->opts.sync_each_write);
  Journal::Recovered rec = impl_->journal->recover();
  if (rec.snapshot_state) {
    impl_->sm.s = rec.snapshot_state->get<CatalogState>();
    if (impl_->sm.s.last_seq != rec.snapshot_seq)
      throw Error(Errc::CorruptJournal, "snapshot seq does not match its state");
    impl_->sm.rebuild_index();
  }
  for (const auto& r : rec.records)
    if (r.seq > rec.snapshot_seq) impl_->sm.apply(r);
}

Catalog::~Catalog() = default;

void Catalog::bootstrap(const std::string& admin, const std::string& secret) {
  std::unique_lock lock(impl_->mu);
  if (!impl_->sm.s.users.empty()) throw Error(Errc::PermissionDenied, "catalog already bootstrapped");
  if (admin.empty()) throw Error(Errc::InvalidArgument, "admin name must be non-empty");
  User u{admin, Role::admin, hash_secret(secret), {}};
  impl_->commit("user.create", {{"user", u}});
  if (!impl_->sm.s.collections.count("/"))
    impl_->commit("coll.create", {{"collection", Collection{"/", admin, {}, CollectionKind::plain}}});
}

void Catalog::create_user(const std::string& caller, const std::string& name, Role role,
                          const std::string& secret) {
  if (name.empty() || name.find_first_of(" \t\n/$") != std::string::npos)
    throw Error(Errc::InvalidArgument, "invalid user name '" + name + "'");
  std::string hashed = hash_secret(secret);
  std::unique_lock lock(impl_->mu);
  impl_->require_admin(caller);
  if (impl_->sm.s.users.count(name)) throw Error(Errc::DuplicateName, "user '" + name + "' exists");
  impl_->commit("user.create", {{"user", User{name, role, std::move(hashed), {}}}});
  impl_->commit("audit", {{"actor", caller}, {"event", "user.create"}, {"detail", name}});
}

void Catalog::add_user_to_group(const std::string& caller, const std::string& user,
                                const std::string& group) {
  if (group.empty()) throw Error(Errc::InvalidArgument, "empty group name");
  std::unique_lock lock(impl_->mu);
  impl_->require_admin(caller);
  impl_->require_user(user);
  impl_->commit("user.group_add", {{"user", user}, {"group", group}});
}

std::optional<User> Catalog::user(std::string_view name) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.users.find(std::string(name));
  if (it == impl_->sm.s.users.end()) return std::nullopt;
  return it->second;
}

bool Catalog::is_admin(std::string_view name) const {
  std::shared_lock lock(impl_->mu);
  return impl_->admin(name);
}

bool Catalog::verify_secret(std::string_view name, std::string_view secret) const {
  std::string stored;
  {
    std::shared_lock lock(impl_->mu);
    auto it = impl_->sm.s.users.find(std::string(name));
    stored = it == impl_->sm.s.users.end() ? std::string() : it->second.secret_hash;
  }
  if (stored.empty()) {
    check_secret(decoy_hash(), secret);
    return false;
  }
  return check_secret(stored, secret);
}

void Catalog::register_resource(const std::string& caller, const Resource& res) {
  if (res.name.empty() || res.name.find_first_of(" \t\n/") != std::string::npos)
    throw Error(Errc::InvalidArgument, "invalid resource name '" + res.name + "'");
  std::unique_lock lock(impl_->mu);
  impl_->require_admin(caller);
  if (impl_->sm.s.resources.count(res.name))
    throw Error(Errc::DuplicateName, "resource '" + res.name + "' exists");
  impl_->commit("resource.register", {{"resource", res}});
  impl_->commit("audit", {{"actor", caller}, {"event", "resource.register"}, {"detail", res.name}});
}

std::optional<Resource> Catalog::resource(std::string_view name) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.resources.find(std::string(name));
  if (it == impl_->sm.s.resources.end()) return std::nullopt;
  return it->second;
}

std::vector<Resource> Catalog::resources() const {
  std::shared_lock lock(impl_->mu);
  std::vector<Resource> out;
  for (const auto& [_, r] : impl_->sm.s.resources) out.push_back(r);
  return out;
}

void Catalog::make_collection(const std::string& caller, const std::string& path,
                              const std::string& owner, CollectionKind kind) {
  require_logical_path(path);
  if (path == "/") throw Error(Errc::Duplicate, "root collection exists");
  std::unique_lock lock(impl_->mu);
  auto& sm = impl_->sm;
  impl_->require_user(caller);
  impl_->require_user(owner);
  const std::string parent = parent_path(path);
  if (!sm.s.collections.count(parent))
    throw Error(Errc::NoParent, "parent collection '" + parent + "' does not exist");
  if (sm.path_exists(path)) throw Error(Errc::Duplicate, "'" + path + "' exists");
  if (impl_->perm(parent, caller) < Perm::write)
    throw Error(Errc::PermissionDenied, "no write permission on '" + parent + "'");
  if (owner != caller && !impl_->admin(caller))
    throw Error(Errc::PermissionDenied, "only admins create collections for other users");
  impl_->commit("coll.create", {{"collection", Collection{path, owner, {}, kind}}});
}

std::optional<Collection> Catalog::collection(std::string_view path) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.collections.find(std::string(path));
  if (it == impl_->sm.s.collections.end()) return std::nullopt;
  return it->second;
}

namespace {

template <typename Map>
std::vector<std::string> children(const Map& m, std::string_view parent) {
  std::vector<std::string> out;
  const std::string prefix = parent == "/" ? "/" : std::string(parent) + "/";
  for (auto it = m.lower_bound(prefix); it != m.end(); ++it) {
    const std::string& p = it->first;
    if (p.compare(0, prefix.size(), prefix) != 0) break;
    if (p.size() > prefix.size() && p.find('/', prefix.size()) == std::string::npos)
      out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<std::string> Catalog::list_collections(std::string_view parent) const {
  std::shared_lock lock(impl_->mu);
  return children(impl_->sm.s.collections, parent);
}

std::vector<std::string> Catalog::list_objects(std::string_view parent) const {
  std::shared_lock lock(impl_->mu);
  return children(impl_->sm.s.objects, parent);
}

void Catalog::set_acl(const std::string& caller, const std::string& path,
                      const std::string& principal, Perm perm) {
  std::unique_lock lock(impl_->mu);
  if (!impl_->sm.path_exists(path)) throw Error(Errc::NoSuchPath, "no such path '" + path + "'");
  if (impl_->perm(path, caller) < Perm::own)
    throw Error(Errc::PermissionDenied, "'" + caller + "' does not own '" + path + "'");
  if (!impl_->principal_exists(principal))
    throw Error(Errc::NoSuchUser, "no such user or group '" + principal + "'");
  impl_->commit("acl.set", {{"path", path}, {"principal", principal}, {"perm", to_string(perm)}});
}

bool Catalog::check_access(std::string_view path, std::string_view user, Perm need) const {
  std::shared_lock lock(impl_->mu);
  if (!impl_->sm.path_exists(std::string(path)))
    throw Error(Errc::NoSuchPath, "no such path '" + std::string(path) + "'");
  return impl_->perm(path, user) >= need;
}

Perm Catalog::effective_perm(std::string_view path, std::string_view user) const {
  std::shared_lock lock(impl_->mu);
  return impl_->perm(path, user);
}

bool Catalog::path_exists(std::string_view path) const {
  std::shared_lock lock(impl_->mu);
  return impl_->sm.path_exists(std::string(path));
}

std::optional<DataObject> Catalog::object(std::string_view path) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.objects.find(std::string(path));
  if (it == impl_->sm.s.objects.end()) return std::nullopt;
  return it->second;
}

DataObject Catalog::record_put(const std::string& actor, const std::string& path,
                               const Replica& replica, const std::vector<AvuTriple>& initial_avus) {
  require_logical_path(path);
  if (!is_sha256_hex(replica.checksum))
    throw Error(Errc::InvalidArgument, "replica checksum must be 64 lowercase hex chars");
  std::unique_lock lock(impl_->mu);
  auto& sm = impl_->sm;
  if (!sm.s.collections.count(parent_path(path)))
    throw Error(Errc::NoSuchPath, "no collection '" + parent_path(path) + "'");
  if (sm.s.collections.count(path)) throw Error(Errc::Duplicate, "'" + path + "' is a collection");
  if (!sm.s.resources.count(replica.resource))
    throw Error(Errc::NoSuchResource, "no such resource '" + replica.resource + "'");
  for (const auto& t : initial_avus)
    if (t.attr_name.empty()) throw Error(Errc::InvalidArgument, "empty attribute name");
  impl_->commit("obj.put",
                {{"path", path}, {"actor", actor}, {"replica", replica}, {"avus", initial_avus}});
  return sm.s.objects.at(path);
}

void Catalog::add_replica(const std::string& path, const Replica& replica) {
  std::unique_lock lock(impl_->mu);
  auto it = impl_->sm.s.objects.find(path);
  if (it == impl_->sm.s.objects.end()) throw Error(Errc::NoSuchObject, "no such object '" + path + "'");
  if (it->second.replica_on(replica.resource))
    throw Error(Errc::Duplicate, "'" + path + "' already has a replica on " + replica.resource);
  if (!impl_->sm.s.resources.count(replica.resource))
    throw Error(Errc::NoSuchResource, "no such resource '" + replica.resource + "'");
  impl_->commit("obj.replica_add", {{"path", path}, {"replica", replica}});
}

void Catalog::set_replica_status(const std::string& path, const std::string& resource,
                                 ReplicaStatus status) {
  std::unique_lock lock(impl_->mu);
  auto it = impl_->sm.s.objects.find(path);
  if (it == impl_->sm.s.objects.end()) throw Error(Errc::NoSuchObject, "no such object '" + path + "'");
  if (!it->second.replica_on(resource))
    throw Error(Errc::NoSuchReplica, "'" + path + "' has no replica on " + resource);
  impl_->commit("obj.replica_status",
                {{"path", path}, {"resource", resource}, {"status", to_string(status)}});
}

void Catalog::drop_replica(const std::string& path, const std::string& resource) {
  std::unique_lock lock(impl_->mu);
  auto it = impl_->sm.s.objects.find(path);
  if (it == impl_->sm.s.objects.end()) throw Error(Errc::NoSuchObject, "no such object '" + path + "'");
  if (!it->second.replica_on(resource))
    throw Error(Errc::NoSuchReplica, "'" + path + "' has no replica on " + resource);
  if (it->second.replicas.size() == 1)
    throw Error(Errc::InvalidArgument, "cannot drop the last replica; remove the object instead");
  impl_->commit("obj.replica_drop", {{"path", path}, {"resource", resource}});
}

void Catalog::remove_object(const std::string& path) {
  std::unique_lock lock(impl_->mu);
  if (!impl_->sm.s.objects.count(path))
    throw Error(Errc::NoSuchObject, "no such object '" + path + "'");
  impl_->commit("obj.remove", {{"path", path}});
}

void Catalog::add_orphan(const std::string& path, const std::string& resource,
                         const std::string& physical_ref) {
  std::unique_lock lock(impl_->mu);
  impl_->commit("orphan.add", {{"path", path}, {"resource", resource}, {"physical_ref", physical_ref}});
}

std::vector<Orphan> Catalog::orphans() const {
  std::shared_lock lock(impl_->mu);
  return impl_->sm.s.orphans;
}

void Catalog::add_avu(const std::string& caller, const std::string& path, const AvuTriple& triple) {
  if (triple.attr_name.empty()) throw Error(Errc::InvalidArgument, "attribute name must be non-empty");
  std::unique_lock lock(impl_->mu);
  auto& sm = impl_->sm;
  if (!sm.path_exists(path)) throw Error(Errc::NoSuchPath, "no such path '" + path + "'");
  if (impl_->perm(path, caller) < Perm::write)
    throw Error(Errc::PermissionDenied, "no write permission on '" + path + "'");
  if (auto it = sm.s.avus.find(path); it != sm.s.avus.end() && it->second.count(triple)) return;
  impl_->commit("avu.add", {{"path", path}, {"triple", triple}});
}

void Catalog::add_avu_internal(const std::string& path, const AvuTriple& triple) {
  if (triple.attr_name.empty()) throw Error(Errc::InvalidArgument, "attribute name must be non-empty");
  std::unique_lock lock(impl_->mu);
  auto& sm = impl_->sm;
  if (!sm.path_exists(path)) throw Error(Errc::NoSuchPath, "no such path '" + path + "'");
  if (auto it = sm.s.avus.find(path); it != sm.s.avus.end() && it->second.count(triple)) return;
  impl_->commit("avu.add", {{"path", path}, {"triple", triple}});
}

std::vector<AvuTriple> Catalog::avus(std::string_view path) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.avus.find(std::string(path));
  if (it == impl_->sm.s.avus.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> Catalog::query_avu(const AvuPredicate& pred) const {
  if (pred.groups.empty()) throw Error(Errc::MalformedPredicate, "empty predicate");
  for (const auto& g : pred.groups)
    if (g.empty()) throw Error(Errc::MalformedPredicate, "empty clause group");

  std::shared_lock lock(impl_->mu);
  const auto& sm = impl_->sm;

  // Narrow with the most selective exact-name group, if any.
  const std::set<std::string>* seed = nullptr;
  for (const auto& g : pred.groups)
    for (const auto& c : g)
      if (c.field == AvuField::name && c.op == AvuOp::eq) {
        auto it = sm.paths_by_name.find(c.literal);
        if (it == sm.paths_by_name.end()) return {};
        if (!seed || it->second.size() < seed->size()) seed = &it->second;
      }

  auto satisfies = [&](const std::set<AvuTriple>& triples) {
    for (const auto& g : pred.groups) {
      bool any = std::any_of(triples.begin(), triples.end(), [&](const AvuTriple& t) {
        return std::all_of(g.begin(), g.end(), [&](const AvuClause& c) { return clause_matches(c, t); });
      });
      if (!any) return false;
    }
    return true;
  };

  std::vector<std::string> out;
  if (seed) {
    for (const auto& path : *seed)
      if (satisfies(sm.s.avus.at(path))) out.push_back(path);
  } else {
    for (const auto& [path, triples] : sm.s.avus)
      if (satisfies(triples)) out.push_back(path);
  }
  return out;
}

void Catalog::add_rules(const std::string& caller, const std::vector<RuleRecord>& rules) {
  std::unique_lock lock(impl_->mu);
  impl_->require_admin(caller);
  std::set<std::string> seen;
  for (const auto& r : rules) {
    if (impl_->sm.s.rules.count(r.name) || !seen.insert(r.name).second)
      throw Error(Errc::DuplicateRuleName, "rule '" + r.name + "' already exists");
  }
  if (rules.empty()) return;
  impl_->commit("rule.add", {{"rules", rules}});
  std::string names;
  for (const auto& r : rules) names += (names.empty() ? "" : ",") + r.name;
  impl_->commit("audit", {{"actor", caller}, {"event", "rule.add"}, {"detail", names}});
}

void Catalog::remove_rule(const std::string& caller, const std::string& name) {
  std::unique_lock lock(impl_->mu);
  impl_->require_admin(caller);
  if (!impl_->sm.s.rules.count(name)) throw Error(Errc::NoSuchRule, "no such rule '" + name + "'");
  impl_->commit("rule.remove", {{"name", name}});
  impl_->commit("audit", {{"actor", caller}, {"event", "rule.remove"}, {"detail", name}});
}

std::vector<RuleRecord> Catalog::rules() const {
  std::shared_lock lock(impl_->mu);
  std::vector<RuleRecord> out;
  for (const auto& [_, r] : impl_->sm.s.rules) out.push_back(r);
  return out;
}

std::uint64_t Catalog::rule_base_version() const {
  std::shared_lock lock(impl_->mu);
  return impl_->sm.s.rule_base_version;
}

void Catalog::record_workflow(const WorkflowVersion& wf) {
  std::unique_lock lock(impl_->mu);
  if (impl_->sm.s.workflows.count(wf.workflow_id)) return;
  if (!impl_->sm.s.collections.count(wf.collection))
    throw Error(Errc::NoSuchPath, "no collection '" + wf.collection + "'");
  impl_->commit("wf.attach", {{"workflow", wf}});
}

std::optional<WorkflowVersion> Catalog::workflow(std::string_view id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.workflows.find(std::string(id));
  if (it == impl_->sm.s.workflows.end()) return std::nullopt;
  return it->second;
}

std::vector<WorkflowVersion> Catalog::workflows(std::string_view collection) const {
  std::shared_lock lock(impl_->mu);
  std::vector<WorkflowVersion> out;
  for (const auto& [_, w] : impl_->sm.s.workflows)
    if (collection.empty() || w.collection == collection) out.push_back(w);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.attached_us, a.workflow_id) < std::tie(b.attached_us, b.workflow_id);
  });
  return out;
}

void Catalog::record_run(const RunRecord& run) {
  std::unique_lock lock(impl_->mu);
  if (impl_->sm.s.runs.count(run.run_id))
    throw Error(Errc::Duplicate, "run '" + run.run_id + "' is already recorded");
  impl_->commit("run.record", {{"run", run}});
}

std::optional<RunRecord> Catalog::run(std::string_view id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->sm.s.runs.find(std::string(id));
  if (it == impl_->sm.s.runs.end()) return std::nullopt;
  return it->second;
}

void Catalog::audit_append(const std::string& actor, const std::string& event,
                           const std::string& detail) {
  std::unique_lock lock(impl_->mu);
  impl_->commit("audit", {{"actor", actor}, {"event", event}, {"detail", detail}});
}

std::vector<AuditEntry> Catalog::audit_query(const std::string& caller,
                                             const AuditFilter& filter) const {
  std::shared_lock lock(impl_->mu);
  impl_->require_admin(caller);
  std::vector<AuditEntry> out;
  for (const auto& e : impl_->sm.s.audit) {
    if (e.when < filter.from_us || e.when >= filter.to_us) continue;
    if (!filter.event.empty() && e.event != filter.event) continue;
    if (!filter.actor.empty() && e.actor != filter.actor) continue;
    out.push_back(e);
  }
  return out;
}

CatalogState Catalog::state() const {
  std::shared_lock lock(impl_->mu);
  return impl_->sm.s;
}

std::uint64_t Catalog::last_seq() const {
  std::shared_lock lock(impl_->mu);
  return impl_->sm.s.last_seq;
}

void Catalog::flush() {
  std::unique_lock lock(impl_->mu);
  if (impl_->journal) impl_->journal->flush();
}

void Catalog::set_record_observer(std::function<void(const JournalRecord&)> fn) {
  std::unique_lock lock(impl_->mu);
  impl_->observer = std::move(fn);
}

CatalogState Catalog::journal_replay(const std::vector<JournalRecord>& records) {
  require_contiguous(records);
  StateMachine sm;
  for (const auto& r : records) sm.apply(r);
  return sm.s;
}

}  // namespace pg
