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
#include "pg/client.hpp"

#include <httplib.h>

#include "pg/error.hpp"
#include "pg/gateway.hpp"

namespace pg {

using nlohmann::json;

namespace {

// Percent-encodes everything except unreserved characters and `keep`.
std::string encode(std::string_view s, std::string_view keep) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' ||
        keep.find(static_cast<char>(c)) != std::string_view::npos) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::string path_part(std::string_view logical) { return encode(logical, "/"); }

std::string with_query(std::string path, std::initializer_list<std::pair<const char*, std::string>> q) {
  char sep = '?';
  for (const auto& [k, v] : q) {
    path += sep;
    path += k;
    path += '=';
    path += encode(v, "");
    sep = '&';
  }
  return path;
}

}  // namespace

struct Client::Impl {
  explicit Impl(const std::string& host, int port) : http(host, port) {
    http.set_url_encode(false);
    http.set_connection_timeout(10);
    http.set_read_timeout(300);
    http.set_write_timeout(300);
    http.set_keep_alive(true);
  }
  httplib::Client http;
};

Client::Client(const std::string& host, int port) : impl_(std::make_unique<Impl>(host, port)) {}

Client::Client(std::string_view addr) {
  auto [host, port] = split_host_port(addr);
  impl_ = std::make_unique<Impl>(host, port);
}

Client::~Client() = default;

std::string Client::call(std::string_view method, const std::string& target, const std::string& body,
                         const char* content_type) {
  auto& http = impl_->http;
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  httplib::Result res;
  if (method == "GET") res = http.Get(target, headers);
  else if (method == "DELETE") res = http.Delete(target, headers);
  else if (method == "PUT") res = http.Put(target, headers, body, content_type);
  else res = http.Post(target, headers, body, content_type);
  if (!res) throw Error(Errc::Io, "request failed: " + httplib::to_string(res.error()));
  request_id_ = res->get_header_value("X-Request-Id");
  if (res->status >= 400) {
    json err = json::parse(res->body, nullptr, false);
    if (err.is_object() && err.contains("error")) {
      throw Error(errc_from_name(err.value("error", "Internal")), err.value("message", ""),
                  err.value("subjects", std::vector<std::string>{}));
    }
    throw Error(Errc::Internal, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  return std::move(res->body);
}

namespace {

json as_json(const std::string& body) {
  json j = json::parse(body);
  if (j.is_object()) j.erase("request_id");
  return j;
}

constexpr const char* kJson = "application/json";
constexpr const char* kBytes = "application/octet-stream";

}  // namespace

std::string Client::login(const std::string& user, const std::string& secret) {
  json j = as_json(call("POST", "/login", json({{"user", user}, {"secret", secret}}).dump(), kJson));
  token_ = j.at("token").get<std::string>();
  return token_;
}

void Client::logout() {
  call("POST", "/logout", "", kJson);
  token_.clear();
}

json Client::health() { return as_json(call("GET", "/health", "", kJson)); }

json Client::put(const std::string& path, std::string_view bytes, const std::string& resource) {
  std::string target = "/data" + path_part(path);
  if (!resource.empty()) target = with_query(target, {{"resource", resource}});
  return as_json(call("PUT", target, std::string(bytes), kBytes));
}

Bytes Client::get(const std::string& path) {
  return call("GET", "/data" + path_part(path), "", kJson);
}

void Client::remove(const std::string& path) { call("DELETE", "/data" + path_part(path), "", kJson); }

json Client::replicate(const std::string& path, const std::string& resource) {
  return as_json(call("POST", "/data" + path_part(path) + ":replicate",
                         json({{"resource", resource}}).dump(), kJson));
}

json Client::stage(const std::string& path, const std::string& from, const std::string& to) {
  return as_json(call("POST", "/data" + path_part(path) + ":stage",
                         json({{"from", from}, {"to", to}}).dump(), kJson));
}

json Client::archive(const std::string& path, const std::string& resource) {
  return as_json(call("POST", "/data" + path_part(path) + ":archive",
                         json({{"resource", resource}}).dump(), kJson));
}

json Client::verify(const std::string& path) {
  return as_json(call("POST", "/data" + path_part(path) + ":verify", "{}", kJson));
}

json Client::stat(const std::string& path) {
  return as_json(call("GET", "/objects" + path_part(path), "", kJson));
}

void Client::mkdir(const std::string& path, const std::string& kind, const std::string& owner) {
  json b = {{"path", path}, {"kind", kind}};
  if (!owner.empty()) b["owner"] = owner;
  call("POST", "/collections", b.dump(), kJson);
}

json Client::list(const std::string& path) {
  return as_json(call("GET", "/collections" + path_part(path), "", kJson));
}

void Client::set_acl(const std::string& path, const std::string& principal, const std::string& perm) {
  call("POST", "/acl", json({{"path", path}, {"principal", principal}, {"perm", perm}}).dump(), kJson);
}

void Client::meta_add(const std::string& path, const std::string& name, const std::string& value,
                      const std::string& comment) {
  call("POST", "/meta",
          json({{"path", path}, {"name", name}, {"value", value}, {"comment", comment}}).dump(), kJson);
}

json Client::meta_query(const std::string& predicate) {
  return as_json(call("GET", with_query("/meta/query", {{"q", predicate}}), "", kJson));
}

json Client::meta_list(const std::string& path) {
  return as_json(call("GET", with_query("/meta", {{"path", path}}), "", kJson));
}

json Client::rule_add(const std::string& text) {
  return as_json(call("POST", "/rules", text, "text/plain"));
}

void Client::rule_remove(const std::string& name) {
  call("DELETE", "/rules/" + encode(name, ""), "", kJson);
}

json Client::rule_list() { return as_json(call("GET", "/rules", "", kJson)); }

void Client::register_microservice(const std::string& name, const std::string& procedure) {
  call("POST", "/microservices", json({{"name", name}, {"procedure", procedure}}).dump(), kJson);
}

json Client::wf_attach(const std::string& coll, const std::string& source) {
  return as_json(call("POST", "/workflows", json({{"collection", coll}, {"source", source}}).dump(), kJson));
}

json Client::wf_list(const std::string& coll) {
  return as_json(call("GET", with_query("/workflows", {{"collection", coll}}), "", kJson));
}

json Client::wf_run(const std::string& workflow_id, const json& bindings, bool snapshot) {
  return as_json(call(
      "POST", "/runs",
      json({{"workflow_id", workflow_id}, {"bindings", bindings}, {"snapshot", snapshot}}).dump(), kJson));
}

json Client::wf_rerun(const std::string& run_id, const json& overrides, bool snapshot) {
  return as_json(call("POST", "/runs/" + encode(run_id, "") + ":rerun",
                         json({{"overrides", overrides}, {"snapshot", snapshot}}).dump(), kJson));
}

json Client::run_get(const std::string& run_id) {
  return as_json(call("GET", "/runs/" + encode(run_id, ""), "", kJson));
}

json Client::diff(const std::string& a, const std::string& b) {
  return as_json(call("GET", with_query("/runs/diff", {{"a", a}, {"b", b}}), "", kJson));
}

json Client::stream_ingest(const std::string& coll, std::string_view bytes, const std::string& resource) {
  std::string target = "/streams" + path_part(coll) + ":ingest";
  if (!resource.empty()) target = with_query(target, {{"resource", resource}});
  return as_json(call("POST", target, std::string(bytes), kBytes));
}

Bytes Client::stream_read(const std::string& coll, std::uint64_t from, std::uint64_t to) {
  return call("GET",
                 with_query("/streams" + path_part(coll),
                            {{"from", std::to_string(from)}, {"to", std::to_string(to)}}),
                 "", kJson);
}

json Client::stream_stat(const std::string& coll) {
  return as_json(call("GET", "/streams" + path_part(coll) + ":stat", "", kJson));
}

void Client::add_user(const std::string& name, const std::string& role, const std::string& secret) {
  call("POST", "/admin/users", json({{"name", name}, {"role", role}, {"secret", secret}}).dump(), kJson);
}

void Client::add_to_group(const std::string& user, const std::string& group) {
  call("POST", "/admin/groups", json({{"user", user}, {"group", group}}).dump(), kJson);
}

void Client::add_resource(const std::string& name, const std::string& driver, const std::string& root,
                          const std::string& kind) {
  call("POST", "/admin/resources",
          json({{"name", name}, {"driver", driver}, {"root", root}, {"kind", kind}}).dump(), kJson);
}

void Client::add_driver(const std::string& name, const std::string& type) {
  call("POST", "/admin/drivers", json({{"name", name}, {"type", type}}).dump(), kJson);
}

json Client::drivers() { return as_json(call("GET", "/admin/drivers", "", kJson)); }

json Client::orphans() { return as_json(call("GET", "/admin/orphans", "", kJson)); }

json Client::audit(std::int64_t from_us, std::int64_t to_us, const std::string& event,
                   const std::string& actor) {
  return as_json(call("GET",
                         with_query("/audit", {{"from", std::to_string(from_us)},
                                               {"to", std::to_string(to_us)},
                                               {"event", event},
                                               {"actor", actor}}),
                         "", kJson));
}

void Client::mark_replica(const std::string& path, const std::string& resource, const std::string& status) {
  call("POST", "/admin/replicas",
          json({{"path", path}, {"resource", resource}, {"status", status}}).dump(), kJson);
}

}  // namespace pg
