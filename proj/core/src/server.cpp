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
#include <thread>

#include <httplib.h>

#include "pg/gateway.hpp"
#include "pg/util.hpp"

namespace pg {

using nlohmann::json;
using httplib::Request;
using httplib::Response;

int http_status_for(Errc code) noexcept {
  switch (code) {
    case Errc::Unauthenticated:
    case Errc::BadCredentials: return 401;
    case Errc::PermissionDenied:
    case Errc::Denied: return 403;
    case Errc::NoSuchPath:
    case Errc::NoSuchUser:
    case Errc::NoSuchRule:
    case Errc::NoSuchResource:
    case Errc::NoSuchObject:
    case Errc::NoSuchReplica:
    case Errc::NoSuchWorkflow:
    case Errc::NoSuchRun: return 404;
    case Errc::DuplicateName:
    case Errc::Duplicate:
    case Errc::DuplicateRuleName:
    case Errc::StaleInputs: return 409;
    case Errc::FetchFailed: return 502;
    case Errc::PolicyError:
    case Errc::DriverError:
    case Errc::ChecksumMismatch:
    case Errc::AllReplicasSuspect:
    case Errc::CorruptJournal:
    case Errc::BindFailed:
    case Errc::Io:
    case Errc::Internal: return 500;
    default: return 400;
  }
}

int exit_code_for(Errc code) noexcept {
  const int status = http_status_for(code);
  if (status == 401 || status == 403) return 2;
  if (status >= 500) return 3;
  return 1;
}

namespace {

struct Call {
  std::string request_id;
  std::string user;
};

using Handler = std::function<void(const Request&, Response&, Call&)>;

void send_json(Response& res, int status, json body, const Call& c) {
  if (body.is_object()) body["request_id"] = c.request_id;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, const Error& e, const Call& c) {
  json body = {{"error", errc_name(e.code())}, {"message", e.what()}, {"subjects", e.subjects()}};
  if (const auto* se = dynamic_cast<const SyntaxError*>(&e)) {
    body["line"] = se->line();
    body["column"] = se->column();
  }
  send_json(res, http_status_for(e.code()), std::move(body), c);
}

json body_json(const Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
  return j;
}

std::string need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(Errc::InvalidArgument, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::string opt(const json& j, const char* key, std::string fallback = {}) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : fallback;
}

std::string query(const Request& req, const char* key, std::string fallback = {}) {
  return req.has_param(key) ? req.get_param_value(key) : fallback;
}

std::uint64_t query_u64(const Request& req, const char* key) {
  if (!req.has_param(key)) throw Error(Errc::InvalidArgument, std::string("missing query parameter '") + key + "'");
  const std::string v = req.get_param_value(key);
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty())
    throw Error(Errc::InvalidArgument, std::string("query parameter '") + key + "' must be an unsigned integer");
  return out;
}

std::int64_t query_i64(const Request& req, const char* key, std::int64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::int64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty())
    throw Error(Errc::InvalidArgument, std::string("query parameter '") + key + "' must be an integer");
  return out;
}

std::string bearer(const Request& req) {
  const std::string h = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (h.size() <= kPrefix.size() || h.compare(0, kPrefix.size(), kPrefix) != 0)
    throw Error(Errc::Unauthenticated, "missing bearer token");
  return h.substr(kPrefix.size());
}

json segment_json(const StreamSegment& s) {
  return {{"segment_id", s.segment_id}, {"t_min", s.t_min}, {"t_max", s.t_max},
          {"record_count", s.record_count}, {"object_path", s.object_path}};
}

}  // namespace

struct Server::Impl {
  explicit Impl(Zone& z) : zone(z) {
    // httplib's default sets SO_REUSEPORT, which lets a second server bind a
    // port that is already listening.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    // Idle keep-alive connections hold stop() until they time out.
    http.set_keep_alive_timeout(1);
  }

  httplib::Server::Handler wrap(bool auth, Handler fn) {
    return [this, auth, fn = std::move(fn)](const Request& req, Response& res) {
      Call c{random_hex(8), {}};
      res.set_header("X-Request-Id", c.request_id);
      try {
        if (auth) c.user = zone.sessions().authenticate(bearer(req));
        fn(req, res, c);
      } catch (const Error& e) {
        send_error(res, e, c);
      } catch (const json::exception& e) {
        send_error(res, Error(Errc::InvalidArgument, std::string("malformed JSON: ") + e.what()), c);
      } catch (const std::exception& e) {
        send_error(res, Error(Errc::Internal, e.what()), c);
      }
    };
  }

  void routes();

  Zone& zone;
  httplib::Server http;
  std::thread thread;
  bool bound = false;
};

void Server::Impl::routes() {
  http.set_error_handler([](const Request& req, Response& res) {
    if (res.status != 404 || !res.body.empty()) return;
    Call c{random_hex(8), {}};
    res.set_header("X-Request-Id", c.request_id);
    send_json(res, 404,
              {{"error", "NoSuchPath"}, {"message", "no route for " + req.method + " " + req.path},
               {"subjects", json::array()}},
              c);
  });
  Engine& engine = zone.engine();
  Catalog& catalog = zone.catalog();

  http.Get("/health", wrap(false, [this](const Request&, Response& res, Call& c) {
    send_json(res, 200, {{"zone", zone.config().zone_name}, {"status", "ok"}}, c);
  }));

  http.Post("/login", wrap(false, [this](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    std::string token = zone.sessions().login(need(b, "user"), need(b, "secret"));
    send_json(res, 200, {{"token", token}, {"user", need(b, "user")}}, c);
  }));

  http.Post("/logout", wrap(true, [this](const Request& req, Response& res, Call& c) {
    zone.sessions().logout(bearer(req));
    send_json(res, 200, json::object(), c);
  }));

  // Data objects ------------------------------------------------------------

  http.Put(R"(/data(/.*))", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    DataObject obj = engine.put(c.user, req.matches[1], req.body, query(req, "resource"));
    send_json(res, 200, obj, c);
  }));

  http.Get(R"(/data(/.*))", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    Bytes b = engine.get(c.user, req.matches[1]);
    res.status = 200;
    res.set_content(std::move(b), "application/octet-stream");
  }));

  http.Delete(R"(/data(/.*))", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    engine.remove(c.user, req.matches[1]);
    send_json(res, 200, json::object(), c);
  }));

  http.Post(R"(/data(/.*):(replicate|stage|archive|verify))",
            wrap(true, [&engine](const Request& req, Response& res, Call& c) {
              const std::string path = req.matches[1];
              const std::string verb = req.matches[2];
              json b = body_json(req);
              if (verb == "replicate") {
                send_json(res, 200, engine.replicate(c.user, path, need(b, "resource")), c);
              } else if (verb == "stage") {
                send_json(res, 200, engine.stage(c.user, path, need(b, "from"), need(b, "to")), c);
              } else if (verb == "archive") {
                send_json(res, 200, engine.archive(c.user, path, need(b, "resource")), c);
              } else {
                send_json(res, 200, {{"suspect", engine.verify_replicas(c.user, path)}}, c);
              }
            }));

  http.Get(R"(/objects(/.*))", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    const std::string path = req.matches[1];
    auto obj = catalog.object(path);
    if (!obj) throw Error(Errc::NoSuchObject, "no such object '" + path + "'", {path});
    if (!catalog.check_access(path, c.user, Perm::read))
      throw Error(Errc::Denied, "no read permission on '" + path + "'");
    json j = *obj;
    j["avus"] = catalog.avus(path);
    send_json(res, 200, j, c);
  }));

  // Collections and access -------------------------------------------------

  http.Post("/collections", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    engine.make_collection(c.user, need(b, "path"), parse_collection_kind(opt(b, "kind", "plain")),
                           opt(b, "owner"));
    send_json(res, 200, json::object(), c);
  }));

  http.Get(R"(/collections(/.*))", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    const std::string path = req.matches[1];
    auto coll = catalog.collection(path);
    if (!coll) throw Error(Errc::NoSuchPath, "no collection '" + path + "'", {path});
    if (!catalog.check_access(path, c.user, Perm::read))
      throw Error(Errc::Denied, "no read permission on '" + path + "'");
    send_json(res, 200,
              {{"collection", *coll},
               {"collections", catalog.list_collections(path)},
               {"objects", catalog.list_objects(path)}},
              c);
  }));

  http.Post("/acl", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    catalog.set_acl(c.user, need(b, "path"), need(b, "principal"), parse_perm(need(b, "perm")));
    send_json(res, 200, json::object(), c);
  }));

  // Metadata ----------------------------------------------------------------

  http.Post("/meta", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    engine.add_avu(c.user, need(b, "path"), {need(b, "name"), need(b, "value"), opt(b, "comment")});
    send_json(res, 200, json::object(), c);
  }));

  http.Get("/meta/query", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    std::vector<std::string> visible;
    for (auto& p : catalog.query_avu(parse_avu_predicate(query(req, "q"))))
      if (catalog.check_access(p, c.user, Perm::read)) visible.push_back(std::move(p));
    send_json(res, 200, {{"paths", visible}}, c);
  }));

  http.Get("/meta", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    const std::string path = query(req, "path");
    if (!catalog.check_access(path, c.user, Perm::read))
      throw Error(Errc::Denied, "no read permission on '" + path + "'");
    send_json(res, 200, {{"path", path}, {"avus", catalog.avus(path)}}, c);
  }));

  // Policies ----------------------------------------------------------------

  http.Post("/rules", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    std::string text = req.body;
    if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0)
      text = need(body_json(req), "text");
    auto added = engine.add_rules(c.user, text);
    send_json(res, 200, {{"added", added}, {"version", engine.list_rules().version}}, c);
  }));

  http.Get("/rules", wrap(true, [&engine](const Request&, Response& res, Call& c) {
    RuleBaseView v = engine.list_rules();
    send_json(res, 200, {{"version", v.version}, {"rules", v.rules}}, c);
  }));

  http.Delete(R"(/rules/([^/]+))", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    engine.remove_rule(c.user, req.matches[1]);
    send_json(res, 200, {{"version", engine.list_rules().version}}, c);
  }));

#ifdef PG_TEST_HOOKS
  http.Post("/microservices", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    auto proc = std::make_shared<const dsl::ProcedureAst>(dsl::parse_procedure(need(b, "procedure")));
    const int n = static_cast<int>(proc->params.size());
    MicroService ms;
    ms.name = need(b, "name");
    ms.min_args = ms.max_args = n;
    ms.body = [proc](const std::vector<dsl::Value>& args, CallContext& cc) -> dsl::Value {
      dsl::Bindings bound;
      for (std::size_t i = 0; i < args.size(); ++i) bound[proc->params[i]] = args[i];
      Verdict v = cc.engine.run_procedure(*proc, bound, cc.actor, cc.base_collection, cc.observer);
      if (v.kind == Verdict::Kind::deny) throw Error(Errc::Denied, v.message);
      if (v.kind == Verdict::Kind::error) throw Error(Errc::PolicyError, v.message);
      return true;
    };
    engine.register_microservice(c.user, std::move(ms));
    send_json(res, 200, {{"name", need(b, "name")}}, c);
  }));
#endif

  // Workflows ---------------------------------------------------------------

  http.Post("/workflows", wrap(true, [this](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    send_json(res, 200, zone.provenance().attach_workflow(c.user, need(b, "collection"), need(b, "source")),
              c);
  }));

  http.Get("/workflows", wrap(true, [this](const Request& req, Response& res, Call& c) {
    send_json(res, 200, {{"workflows", zone.provenance().list_workflows(query(req, "collection"))}}, c);
  }));

  http.Post("/runs", wrap(true, [this](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    RunOptions o;
    o.snapshot_inputs = b.value("snapshot", false);
    send_json(res, 200,
              zone.provenance().run_workflow(c.user, need(b, "workflow_id"),
                                             b.value("bindings", json::object()), o),
              c);
  }));

  http.Get("/runs/diff", wrap(true, [this](const Request& req, Response& res, Call& c) {
    send_json(res, 200, zone.provenance().diff_runs(query(req, "a"), query(req, "b")), c);
  }));

  // httplib reads any pattern containing "/:" as a path-parameter template,
  // so the character classes below list ":" first.
  http.Post(R"(/runs/([^:/]+):rerun)", wrap(true, [this](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    RunOptions o;
    o.snapshot_inputs = b.value("snapshot", false);
    send_json(res, 200,
              zone.provenance().rerun(c.user, req.matches[1], b.value("overrides", json::object()), o), c);
  }));

  http.Get(R"(/runs/([^:/]+))", wrap(true, [this](const Request& req, Response& res, Call& c) {
    send_json(res, 200, zone.provenance().run(req.matches[1]), c);
  }));

  // Streams -----------------------------------------------------------------

  http.Post(R"(/streams(/.*):ingest)", wrap(true, [this](const Request& req, Response& res, Call& c) {
    StreamSegment s = zone.streams().ingest(c.user, req.matches[1], req.body, query(req, "resource"));
    send_json(res, 200, segment_json(s), c);
  }));

  http.Get(R"(/streams(/.*):stat)", wrap(true, [this](const Request& req, Response& res, Call& c) {
    StreamStat s = zone.streams().stat(c.user, req.matches[1]);
    json j = {{"record_count", s.record_count}, {"segment_count", s.segment_count}};
    if (s.t_min) j["t_min"] = *s.t_min;
    if (s.t_max) j["t_max"] = *s.t_max;
    send_json(res, 200, j, c);
  }));

  http.Get(R"(/streams(/.*))", wrap(true, [this](const Request& req, Response& res, Call& c) {
    auto data = std::make_shared<Bytes>(
        zone.streams().read(c.user, req.matches[1], query_u64(req, "from"), query_u64(req, "to")));
    res.status = 200;
    res.set_chunked_content_provider("application/octet-stream",
                                     [data](std::size_t offset, httplib::DataSink& sink) {
                                       if (offset >= data->size()) {
                                         sink.done();
                                         return true;
                                       }
                                       const std::size_t n = std::min<std::size_t>(1 << 16, data->size() - offset);
                                       return sink.write(data->data() + offset, n);
                                     });
  }));

  // Audit and administration -----------------------------------------------

  http.Get("/audit", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    AuditFilter f;
    f.from_us = query_i64(req, "from", 0);
    f.to_us = query_i64(req, "to", INT64_MAX);
    f.event = query(req, "event");
    f.actor = query(req, "actor");
    send_json(res, 200, {{"entries", catalog.audit_query(c.user, f)}}, c);
  }));

  http.Post("/admin/users", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    catalog.create_user(c.user, need(b, "name"), parse_role(opt(b, "role", "user")), need(b, "secret"));
    send_json(res, 200, json::object(), c);
  }));

  http.Post("/admin/groups", wrap(true, [&catalog](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    catalog.add_user_to_group(c.user, need(b, "user"), need(b, "group"));
    send_json(res, 200, json::object(), c);
  }));

  http.Post("/admin/resources", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    Resource r{need(b, "name"), need(b, "driver"), need(b, "root"),
               parse_resource_kind(opt(b, "kind", "cache"))};
    engine.register_resource(c.user, r);
    send_json(res, 200, r, c);
  }));

  http.Post("/admin/drivers", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    engine.register_driver(c.user, need(b, "name"), make_builtin_driver(need(b, "type")));
    send_json(res, 200, {{"name", need(b, "name")}}, c);
  }));

  http.Get("/admin/drivers", wrap(true, [&engine](const Request&, Response& res, Call& c) {
    send_json(res, 200, {{"drivers", engine.drivers().names()}}, c);
  }));

  http.Get("/admin/orphans", wrap(true, [&catalog](const Request&, Response& res, Call& c) {
    if (!catalog.is_admin(c.user)) throw Error(Errc::PermissionDenied, "admin only");
    send_json(res, 200, {{"orphans", catalog.orphans()}}, c);
  }));

  http.Post("/admin/replicas", wrap(true, [&engine](const Request& req, Response& res, Call& c) {
    json b = body_json(req);
    engine.mark_replica(c.user, need(b, "path"), need(b, "resource"),
                        parse_replica_status(need(b, "status")));
    send_json(res, 200, json::object(), c);
  }));
}

Server::Server(Zone& zone) : impl_(std::make_unique<Impl>(zone)) { impl_->routes(); }

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (impl_->http.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0)
    throw Error(Errc::BindFailed, "cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void Server::run() {
  if (!impl_->bound) throw Error(Errc::BindFailed, "run() before bind()");
  impl_->http.listen_after_bind();
}

int Server::start(const std::string& host, int port) {
  int bound = bind(host, port);
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  try {
    impl_->zone.catalog().flush();
  } catch (...) {
  }
}

}  // namespace pg
