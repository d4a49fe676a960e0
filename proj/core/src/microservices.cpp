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
#include <charconv>
#include <regex>

#include <httplib.h>

#include "pg/engine.hpp"
#include "pg/error.hpp"
#include "pg/util.hpp"

namespace pg {

namespace {

using dsl::Value;
using Args = std::vector<Value>;

std::int64_t parse_int(std::string_view text, const std::string& what) {
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw Error(Errc::TypeMismatch, what + " does not hold an integer");
  return v;
}

void add(std::map<std::string, MicroService, std::less<>>& into, std::string name, int min_args,
         int max_args, decltype(MicroService::body) body, std::vector<int> reads = {},
         std::vector<int> writes = {}) {
  into.emplace(name, MicroService{name, min_args, max_args, std::move(reads), std::move(writes),
                                  std::move(body)});
}

std::string write_object(CallContext& cc, const Value& path, std::string bytes) {
  const std::string p = cc.resolve(path.as_string());
  cc.engine.put(cc.actor, p, bytes);
  if (cc.observer) cc.observer->on_write(p);
  return p;
}

Bytes read_object(CallContext& cc, const Value& path) {
  const std::string p = cc.resolve(path.as_string());
  Bytes b = cc.engine.get(cc.actor, p);
  if (cc.observer) cc.observer->on_read(p, sha256_hex(b));
  return b;
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string target;  // path and query
};

Url parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:.]+\])(:[0-9]{1,5})?([/?][^#\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re))
    throw Error(Errc::InvalidArgument, "not a well-formed http(s) URL: " + url, {url});
  Url u;
  u.origin = m[1].str() + "://" + m[2].str() + m[3].str();
  u.target = m[4].matched ? m[4].str() : "/";
  if (u.target[0] == '?') u.target = "/" + u.target;
  return u;
}

Bytes http_get(const std::string& url, std::chrono::seconds timeout) {
  Url u = parse_url(url);
  httplib::Client cli(u.origin);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  cli.set_follow_location(true);
  auto res = cli.Get(u.target);
  if (!res)
    throw Error(Errc::FetchFailed, "fetch of " + url + " failed: " + httplib::to_string(res.error()),
                {url});
  if (res->status != 200)
    throw Error(Errc::FetchFailed, "fetch of " + url + " returned HTTP " + std::to_string(res->status),
                {std::to_string(res->status)});
  return res->body;
}

}  // namespace

DataObject Engine::http_fetch(const std::string& actor, const std::string& url,
                              const std::string& dest_path, const std::string& resource) {
  parse_url(url);
  require_logical_path(dest_path);
  require_user(actor);

  // The cache marker is one triple: name fetch.url, value the URL, comment the
  // SHA-256 of the bytes fetched. It stays valid while the object still holds
  // exactly those bytes.
  AvuPredicate pred;
  pred.groups.push_back({{AvuField::name, AvuOp::eq, "fetch.url"}, {AvuField::value, AvuOp::eq, url}});
  for (const auto& path : catalog_.query_avu(pred)) {
    auto obj = catalog_.object(path);
    if (!obj) continue;
    auto sum = obj->checksum();
    if (!sum) continue;
    const auto triples = catalog_.avus(path);
    if (std::find(triples.begin(), triples.end(), AvuTriple{"fetch.url", url, *sum}) == triples.end())
      continue;
    if (!catalog_.check_access(path, actor, Perm::read)) throw Error(Errc::Denied, "no read permission on '" + path + "'");
    return *obj;
  }

  auto coll = catalog_.collection(parent_path(dest_path));
  if (!coll) throw Error(Errc::NoSuchPath, "no collection '" + parent_path(dest_path) + "'");
  if (!catalog_.check_access(coll->path, actor, Perm::write))
    throw Error(Errc::Denied, "no write permission on '" + coll->path + "'");

  ++fetch_count_;
  Bytes body = http_get(url, opts_.fetch_timeout);
  return put_impl(actor, dest_path, body, resource, {{"fetch.url", url, sha256_hex(body)}});
}

void register_builtin_microservices(std::map<std::string, MicroService, std::less<>>& into) {
  add(into, "set_avu", 3, 4, [](const Args& a, CallContext& cc) -> Value {
    AvuTriple t{a[1].to_display(), a[2].to_display(), a.size() > 3 ? a[3].to_display() : ""};
    cc.engine.add_avu(cc.actor, cc.resolve(a[0].as_string()), t);
    return true;
  }, {}, {0});
  add(into, "checksum", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    const std::string p = cc.resolve(a[0].as_string());
    auto obj = cc.engine.catalog().object(p);
    if (!obj) throw Error(Errc::NoSuchObject, "no such object '" + p + "'", {p});
    if (!cc.engine.catalog().check_access(p, cc.actor, Perm::read))
      throw Error(Errc::Denied, "no read permission on '" + p + "'");
    auto sum = obj->checksum();
    if (!sum) throw Error(Errc::AllReplicasSuspect, "no good replica of '" + p + "'", {p});
    if (cc.observer) cc.observer->on_read(p, *sum);
    return *sum;
  }, {0});
  add(into, "replicate_to", 2, 2, [](const Args& a, CallContext& cc) -> Value {
    return cc.engine.replicate(cc.actor, cc.resolve(a[0].as_string()), a[1].as_string()).resource;
  }, {0});
  add(into, "audit_msg", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    cc.engine.catalog().audit_append(cc.actor, "audit.msg", a[0].to_display());
    return true;
  });
  add(into, "http_fetch", 2, 3, [](const Args& a, CallContext& cc) -> Value {
    const std::string dest = cc.resolve(a[1].as_string());
    DataObject obj = cc.engine.http_fetch(cc.actor, a[0].as_string(), dest,
                                          a.size() > 2 ? a[2].as_string() : std::string());
    if (cc.observer) cc.observer->on_write(obj.path);
    return obj.path;
  }, {}, {1});
  add(into, "put_int", 2, 2, [](const Args& a, CallContext& cc) -> Value {
    return write_object(cc, a[0], std::to_string(a[1].as_int()));
  }, {}, {0});
  add(into, "put_str", 2, 2, [](const Args& a, CallContext& cc) -> Value {
    return write_object(cc, a[0], a[1].as_string());
  }, {}, {0});
  add(into, "get_int", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    return parse_int(read_object(cc, a[0]), "'" + a[0].as_string() + "'");
  }, {0});
  add(into, "get_str", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    return read_object(cc, a[0]);
  }, {0});
  add(into, "str", 1, 1, [](const Args& a, CallContext&) -> Value { return a[0].to_display(); });
  add(into, "int", 1, 1, [](const Args& a, CallContext&) -> Value {
    return a[0].is_int() ? a[0] : Value(parse_int(a[0].as_string(), "string"));
  });
  add(into, "len", 1, 1, [](const Args& a, CallContext&) -> Value {
    return static_cast<std::int64_t>(a[0].is_list() ? a[0].as_list().size() : a[0].as_string().size());
  });
  add(into, "exists", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    return cc.engine.catalog().path_exists(cc.resolve(a[0].as_string()));
  });
  add(into, "list_objects", 1, 1, [](const Args& a, CallContext& cc) -> Value {
    const std::string p = cc.resolve(a[0].as_string());
    if (!cc.engine.catalog().check_access(p, cc.actor, Perm::read))
      throw Error(Errc::Denied, "no read permission on '" + p + "'");
    return Value::List(cc.engine.catalog().list_objects(p));
  });
}

}  // namespace pg
