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
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pg/util.hpp"

namespace pg {

/// Typed client for the zone's HTTP API. Failures surface as pg::Error with
/// the same code the server raised; transport failures as Error(Io).
class Client {
 public:
  Client(const std::string& host, int port);
  /// "host:port"
  explicit Client(std::string_view addr);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void set_token(std::string token) { token_ = std::move(token); }
  const std::string& token() const noexcept { return token_; }
  /// X-Request-Id of the latest response.
  const std::string& last_request_id() const noexcept { return request_id_; }

  std::string login(const std::string& user, const std::string& secret);
  void logout();
  nlohmann::json health();

  // Data
  nlohmann::json put(const std::string& path, std::string_view bytes, const std::string& resource = {});
  Bytes get(const std::string& path);
  void remove(const std::string& path);
  nlohmann::json replicate(const std::string& path, const std::string& resource);
  nlohmann::json stage(const std::string& path, const std::string& from, const std::string& to);
  nlohmann::json archive(const std::string& path, const std::string& resource);
  nlohmann::json verify(const std::string& path);
  nlohmann::json stat(const std::string& path);

  // Collections and access
  void mkdir(const std::string& path, const std::string& kind = "plain",
             const std::string& owner = {});
  nlohmann::json list(const std::string& path);
  void set_acl(const std::string& path, const std::string& principal, const std::string& perm);

  // Metadata
  void meta_add(const std::string& path, const std::string& name, const std::string& value,
                const std::string& comment = {});
  nlohmann::json meta_query(const std::string& predicate);
  nlohmann::json meta_list(const std::string& path);

  // Policies
  nlohmann::json rule_add(const std::string& text);
  void rule_remove(const std::string& name);
  nlohmann::json rule_list();
  void register_microservice(const std::string& name, const std::string& procedure);

  // Workflows
  nlohmann::json wf_attach(const std::string& coll, const std::string& source);
  nlohmann::json wf_list(const std::string& coll);
  nlohmann::json wf_run(const std::string& workflow_id, const nlohmann::json& bindings,
                        bool snapshot = false);
  nlohmann::json wf_rerun(const std::string& run_id, const nlohmann::json& overrides,
                          bool snapshot = false);
  nlohmann::json run_get(const std::string& run_id);
  nlohmann::json diff(const std::string& a, const std::string& b);

  // Streams
  nlohmann::json stream_ingest(const std::string& coll, std::string_view bytes,
                               const std::string& resource = {});
  Bytes stream_read(const std::string& coll, std::uint64_t from, std::uint64_t to);
  nlohmann::json stream_stat(const std::string& coll);

  // Administration
  void add_user(const std::string& name, const std::string& role, const std::string& secret);
  void add_to_group(const std::string& user, const std::string& group);
  void add_resource(const std::string& name, const std::string& driver, const std::string& root,
                    const std::string& kind);
  void add_driver(const std::string& name, const std::string& type);
  nlohmann::json drivers();
  nlohmann::json orphans();
  nlohmann::json audit(std::int64_t from_us = 0, std::int64_t to_us = INT64_MAX,
                       const std::string& event = {}, const std::string& actor = {});
  void mark_replica(const std::string& path, const std::string& resource,
                    const std::string& status);

 private:
  /// Sends one request; returns the response body or throws pg::Error.
  std::string call(std::string_view method, const std::string& target, const std::string& body,
                   const char* content_type);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string token_;
  std::string request_id_;
};

}  // namespace pg
