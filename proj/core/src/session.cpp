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
#include "pg/gateway.hpp"
#include "pg/util.hpp"

namespace pg {

SessionManager::SessionManager(Catalog& catalog, std::int64_t ttl_us)
    : catalog_(catalog), ttl_us_(ttl_us) {}

void SessionManager::set_clock(std::function<std::int64_t()> clock) {
  std::lock_guard lock(mu_);
  clock_ = std::move(clock);
}

std::int64_t SessionManager::now() const { return clock_ ? clock_() : now_us(); }

std::string SessionManager::login(const std::string& user, const std::string& secret) {
  if (!catalog_.verify_secret(user, secret)) {
    catalog_.audit_append(user, "login.fail", "");
    throw Error(Errc::BadCredentials, "bad user name or secret");
  }
  std::string token = random_hex(32);
  {
    std::lock_guard lock(mu_);
    const std::int64_t t = now();
    by_digest_[sha256_hex(token)] = Session{user, t, t + ttl_us_};
  }
  catalog_.audit_append(user, "login", "");
  return token;
}

std::string SessionManager::authenticate(std::string_view token) {
  const std::string digest = sha256_hex(token);
  std::lock_guard lock(mu_);
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end() || !constant_time_equal(it->first, digest))
    throw Error(Errc::Unauthenticated, "invalid or expired session token");
  if (now() >= it->second.expires_us) {
    by_digest_.erase(it);
    throw Error(Errc::Unauthenticated, "invalid or expired session token");
  }
  return it->second.user;
}

void SessionManager::logout(std::string_view token) {
  std::lock_guard lock(mu_);
  by_digest_.erase(sha256_hex(token));
}

std::size_t SessionManager::active() const {
  std::lock_guard lock(mu_);
  return by_digest_.size();
}

}  // namespace pg
