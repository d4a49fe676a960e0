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

// Microbenchmarks for the hot paths: PEP dispatch, metadata queries, stream
// reads, object I/O and rule parsing.

#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "pg/catalog.hpp"
#include "pg/engine.hpp"
#include "pg/ruledsl.hpp"
#include "pg/streams.hpp"

namespace {

using namespace pg;

constexpr const char* kAdmin = "rods";

struct Zone {
  Catalog catalog;
  Engine engine{catalog};
  StreamStore streams{engine};

  Zone() {
    catalog.bootstrap(kAdmin, "bench-secret");
    catalog.create_user(kAdmin, "alice", Role::user, "alice-secret");
    Resource r;
    r.name = "memResc";
    r.driver_name = "mem";
    r.root = "memResc";
    engine.register_resource(kAdmin, r);
    engine.make_collection(kAdmin, "/home");
    catalog.set_acl(kAdmin, "/home", "alice", Perm::write);
  }
};

std::string rule_text(int n) {
  std::string text;
  for (int i = 0; i < n; ++i) {
    text += "rule r" + std::to_string(i) + " priority " + std::to_string(i % 7) +
            " on pep.data.remove.pre when $obj.path matches \"/zone" + std::to_string(i) +
            "/*\" && $user.role != \"admin\" do deny(\"locked\")\n";
  }
  return text;
}

void BM_FirePep(benchmark::State& state) {
  Zone z;
  z.engine.add_rules(kAdmin, rule_text(static_cast<int>(state.range(0))));
  PepContext ctx = z.engine.context_for("alice", "remove");
  ctx.set("obj.path", std::string("/zone0/file")).set("obj.owner", std::string("alice"));
  for (auto _ : state) benchmark::DoNotOptimize(z.engine.fire_pep("pep.data.remove.pre", ctx));
}
BENCHMARK(BM_FirePep)->Arg(1)->Arg(16)->Arg(128);

void BM_AvuQuery(benchmark::State& state) {
  Catalog cat;
  cat.bootstrap(kAdmin, "bench-secret");
  std::mt19937_64 rng(1);
  const int paths = static_cast<int>(state.range(0));
  for (int p = 0; p < paths; ++p) {
    const std::string path = "/c" + std::to_string(p);
    cat.make_collection(kAdmin, path, kAdmin, CollectionKind::plain);
    for (int k = 0; k < 20; ++k)
      cat.add_avu(kAdmin, path, {"k" + std::to_string(rng() % 10), std::to_string(rng() % 100), ""});
  }
  const AvuPredicate pred = parse_avu_predicate(R"(name = "k3" && value = "42")");
  for (auto _ : state) benchmark::DoNotOptimize(cat.query_avu(pred));
}
BENCHMARK(BM_AvuQuery)->Arg(100)->Arg(1000);

void BM_StreamRead(benchmark::State& state) {
  Zone z;
  z.engine.make_collection(kAdmin, "/sensors", CollectionKind::stream, "alice");
  std::uint64_t t = 0;
  for (int s = 0; s < state.range(0); ++s) {
    std::vector<StreamRecord> seg;
    for (int i = 0; i < 50; ++i) seg.push_back({t += 10, "sample-" + std::to_string(i)});
    z.streams.ingest("alice", "/sensors", encode_records(seg));
  }
  for (auto _ : state) benchmark::DoNotOptimize(z.streams.read("alice", "/sensors", t / 4, t / 2));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StreamRead)->Arg(10)->Arg(100);

void BM_PutGet(benchmark::State& state) {
  Zone z;
  const std::string bytes(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) {
    z.engine.put("alice", "/home/obj", bytes);
    benchmark::DoNotOptimize(z.engine.get("alice", "/home/obj"));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0) * 2);
}
BENCHMARK(BM_PutGet)->Arg(1 << 10)->Arg(1 << 20);

void BM_ParseRules(benchmark::State& state) {
  const std::string text = rule_text(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dsl::parse_rules(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseRules)->Arg(20)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
