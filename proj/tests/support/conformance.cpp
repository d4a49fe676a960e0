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
#include "conformance.hpp"

#include <map>

#include "generators.hpp"
#include "pg/error.hpp"

namespace pgtest {
namespace {

std::string random_bytes(Rng& rng, std::size_t max) {
  std::string out(uniform(rng, 0, max), '\0');
  for (auto& c : out) c = static_cast<char>(uniform(rng, 0, 255));
  return out;
}

template <typename F>
bool throws_code(F&& f, pg::Errc* code) {
  try {
    f();
  } catch (const pg::Error& e) {
    if (code) *code = e.code();
    return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> run_driver_conformance(pg::StorageDriver& d, const std::string& root,
                                                std::uint64_t seed, std::size_t ops) {
  Rng rng(seed);
  std::vector<std::string> bad;
  std::map<std::string, std::string> model;
  std::vector<std::string> dead;
  const bool mutable_bytes = d.capabilities().supports_update;
  const bool can_unlink = d.capabilities().supports_unlink;
  auto fail = [&](std::size_t step, const std::string& what) {
    bad.push_back("step " + std::to_string(step) + ": " + what);
  };
  auto keys = [&] {
    std::vector<std::string> k;
    for (const auto& [ref, _] : model) k.push_back(ref);
    return k;
  };

  for (std::size_t step = 0; step < ops && bad.size() < 20; ++step) {
    const std::uint64_t roll = model.empty() ? 0 : uniform(rng, 0, 99);
    try {
      if (roll < 15) {
        const std::string ref = d.create(root);
        if (model.count(ref)) fail(step, "create returned a live ref");
        std::string bytes;
        pg::Handle h = d.open(ref);
        // Initial content goes in as appends, which every driver accepts.
        for (std::uint64_t i = 0, n = uniform(rng, 0, 3); i < n; ++i) {
          std::string chunk = random_bytes(rng, 40);
          d.write(h, bytes.size(), chunk);
          bytes += chunk;
        }
        d.close(h);
        model[ref] = bytes;
      } else if (roll < 40) {
        const std::string ref = pick(rng, keys());
        std::string& bytes = model[ref];
        const std::uint64_t off = uniform(rng, 0, bytes.size());
        const std::string chunk = random_bytes(rng, 32);
        pg::Handle h = d.open(ref);
        pg::Errc code{};
        const bool threw = throws_code([&] { d.write(h, off, chunk); }, &code);
        d.close(h);
        if (mutable_bytes) {
          if (threw) fail(step, "write at offset " + std::to_string(off) + " refused");
          if (bytes.size() < off + chunk.size()) bytes.resize(off + chunk.size());
          bytes.replace(off, chunk.size(), chunk);
        } else if (!threw || code != pg::Errc::Unsupported) {
          fail(step, "write to a sealed object was not refused as Unsupported");
        }
      } else if (roll < 70) {
        const std::string ref = pick(rng, keys());
        const std::string& bytes = model[ref];
        const std::uint64_t off = uniform(rng, 0, bytes.size() + 8);
        const std::size_t len = uniform(rng, 0, bytes.size() + 8);
        pg::Handle h = d.open(ref);
        const std::string got = d.read(h, off, len);
        d.close(h);
        const std::string want = off >= bytes.size() ? std::string() : bytes.substr(off, len);
        if (got != want) fail(step, "read(" + std::to_string(off) + ", " + std::to_string(len) + ") diverged");
        if (throws_code([&] { d.read(h, 0, 1); }, nullptr) == false)
          fail(step, "read on a closed handle succeeded");
      } else if (roll < 85) {
        const std::string ref = pick(rng, keys());
        const pg::StatResult st = d.stat(ref);
        if (!st.exists || st.size != model[ref].size())
          fail(step, "stat size " + std::to_string(st.size) + " want " + std::to_string(model[ref].size()));
      } else if (roll < 95) {
        const std::string ref = pick(rng, keys());
        pg::Errc code{};
        const bool threw = throws_code([&] { d.unlink(ref); }, &code);
        if (can_unlink) {
          if (threw) fail(step, "unlink refused");
          if (d.stat(ref).exists) fail(step, "stat after unlink reports exists");
          model.erase(ref);
          dead.push_back(ref);
        } else {
          if (!threw || code != pg::Errc::Unsupported) fail(step, "unlink was not refused as Unsupported");
          if (d.stat(ref).size != model[ref].size()) fail(step, "refused unlink changed the bytes");
        }
      } else {
        const std::string ref = dead.empty() ? root + "/no-such-ref" : pick(rng, dead);
        if (d.stat(ref).exists) fail(step, "stat of an unknown ref reports exists");
        if (!throws_code([&] { d.open(ref); }, nullptr)) fail(step, "open of an unknown ref succeeded");
        if (can_unlink && !throws_code([&] { d.unlink(ref); }, nullptr))
          fail(step, "unlink of an unknown ref succeeded");
      }
    } catch (const pg::Error& e) {
      fail(step, std::string("unexpected error: ") + e.what());
    }
  }

  for (const auto& [ref, bytes] : model) {
    if (pg::read_whole_object(d, ref) != bytes) bad.push_back("final bytes of " + ref + " diverged");
    if (can_unlink) d.unlink(ref);
  }
  return bad;
}

}  // namespace pgtest
