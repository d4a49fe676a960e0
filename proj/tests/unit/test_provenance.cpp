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
#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <future>
#include <thread>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "pg/error.hpp"
#include "pg/provenance.hpp"
#include "pg/util.hpp"
#include "workflows.hpp"

namespace {

using namespace pg;
using nlohmann::json;
using pgtest::kAdmin;

constexpr const char* kDouble = R"(procedure double($n) { $r = $n * 2; put_int("out", $r) })";
// SHA-256 of the ASCII bytes "42", frozen.
constexpr const char* kSha42 = "73475cb40a568e8da8a045ced110137e159f890ac4da883b6b17dc651b3a8049";

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(Errc::Internal, "none");
}

class ProvenanceTest : public ::testing::Test {
 protected:
  void SetUp() override { pgtest::seed_workflow_collection(g, "/wf"); }

  std::string attach(const std::string& src) {
    return g.provenance.attach_workflow("alice", "/wf", src).workflow_id;
  }

  pgtest::Grid g;
};

TEST_F(ProvenanceTest, AttachIsContentAddressed) {
  const auto a = g.provenance.attach_workflow("alice", "/wf", kDouble);
  EXPECT_EQ(a.workflow_id, sha256_hex(dsl::pretty_print(dsl::parse_procedure(kDouble))));
  EXPECT_EQ(a.procedure_name, "double");
  // Same canonical text, different layout.
  const auto b = g.provenance.attach_workflow(
      "alice", "/wf", "procedure double($n) {\n  $r = $n*2 ;\n  put_int( \"out\" , $r )\n}");
  EXPECT_EQ(a.workflow_id, b.workflow_id);
  EXPECT_EQ(b.attached_us, a.attached_us);
  const auto c = g.provenance.attach_workflow(
      "alice", "/wf", R"(procedure double($n) { $r = $n * 3; put_int("out", $r) })");
  EXPECT_NE(c.workflow_id, a.workflow_id);
  EXPECT_EQ(g.provenance.list_workflows("/wf").size(), 2u);
}

TEST_F(ProvenanceTest, AttachIffCanonicalEqualProperty) {
  pgtest::Rng rng(7);
  std::map<std::string, std::string> by_canonical;
  for (int i = 0; i < 200; ++i) {
    const auto proc = pgtest::random_procedure(rng);
    const std::string text = dsl::pretty_print(proc);
    const auto id = attach(text);
    auto [it, fresh] = by_canonical.emplace(text, id);
    EXPECT_EQ(it->second, id);
    if (!fresh) continue;
    for (const auto& [other, oid] : by_canonical) {
      if (other == text) continue;
      EXPECT_NE(oid, id);
    }
  }
  EXPECT_EQ(g.provenance.list_workflows("/wf").size(), by_canonical.size());
}

TEST_F(ProvenanceTest, AttachErrors) {
  const auto before = g.catalog.state().workflows;
  EXPECT_EQ(error_of([&] { attach("procedure broken($n) { $r = "); }).code(), Errc::SyntaxError);
  EXPECT_EQ(g.catalog.state().workflows, before);
  g.engine.make_collection(kAdmin, "/plain", CollectionKind::plain, "alice");
  EXPECT_EQ(error_of([&] { g.provenance.attach_workflow("alice", "/plain", kDouble); }).code(),
            Errc::NotAWorkflowCollection);
  EXPECT_EQ(error_of([&] { g.provenance.attach_workflow("bob", "/wf", kDouble); }).code(),
            Errc::PermissionDenied);
  EXPECT_EQ(error_of([&] { g.provenance.attach_workflow("alice", "/none", kDouble); }).code(),
            Errc::NoSuchPath);
}

TEST_F(ProvenanceTest, RunCapturesOutputs) {
  const auto id = attach(kDouble);
  const auto r = g.provenance.run_workflow("alice", id, {{"n", 21}});
  EXPECT_EQ(r.status, RunStatus::ok);
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_EQ(r.outputs.at("/wf/out"), kSha42);
  EXPECT_EQ(pgtest::oracle_sha256("42"), kSha42);
  EXPECT_EQ(g.engine.get("alice", "/wf/out"), "42");
  EXPECT_TRUE(r.inputs.empty());
  EXPECT_EQ(r.workflow_id, id);
  EXPECT_LE(r.t_start, r.t_end);
  EXPECT_EQ(g.provenance.run(r.run_id), r);
}

TEST_F(ProvenanceTest, RunCapturesInputs) {
  const auto id = attach(R"(procedure shift($n) { $x = get_int("in/n.txt"); put_int("shifted", $x + $n) })");
  const auto r = g.provenance.run_workflow("alice", id, {{"n", 5}});
  ASSERT_EQ(r.inputs.size(), 1u);
  EXPECT_EQ(r.inputs.at("/wf/in/n.txt"), pgtest::oracle_sha256("20"));
  EXPECT_EQ(r.outputs.at("/wf/shifted"), pgtest::oracle_sha256("25"));
}

TEST_F(ProvenanceTest, DynamicReadsAreRecorded) {
  // The read path is computed, so only execution can discover it.
  const auto id = attach(R"(procedure dyn($name) { $x = get_str("in/" + $name); put_str("copy", $x) })");
  const auto r = g.provenance.run_workflow("alice", id, {{"name", "a.txt"}});
  EXPECT_EQ(r.inputs.count("/wf/in/a.txt"), 1u);
  EXPECT_EQ(r.outputs.at("/wf/copy"), pgtest::oracle_sha256("alpha"));
}

TEST_F(ProvenanceTest, StaticPathDiscovery) {
  const auto proc = dsl::parse_procedure(
      R"(procedure p($n) { $x = get_int("in/n.txt"); $y = get_str("/abs/in"); put_int("out", $x); put_str($n, "x") })");
  const auto [reads, writes] = g.provenance.static_paths(proc, "/wf");
  EXPECT_EQ(reads, (std::set<std::string>{"/wf/in/n.txt", "/abs/in"}));
  EXPECT_EQ(writes, (std::set<std::string>{"/wf/out"}));
}

TEST_F(ProvenanceTest, BindingErrors) {
  const auto id = attach(kDouble);
  EXPECT_EQ(error_of([&] { g.provenance.run_workflow("alice", id, json::object()); }).code(),
            Errc::InvalidArgument);
  EXPECT_EQ(error_of([&] { g.provenance.run_workflow("alice", id, {{"n", 1}, {"m", 2}}); }).code(),
            Errc::InvalidArgument);
  EXPECT_EQ(error_of([&] { g.provenance.run_workflow("alice", id, json::array()); }).code(),
            Errc::InvalidArgument);
  EXPECT_EQ(error_of([&] { g.provenance.run_workflow("alice", "beef", {{"n", 1}}); }).code(),
            Errc::NoSuchWorkflow);
  EXPECT_TRUE(g.catalog.state().runs.empty());
}

TEST_F(ProvenanceTest, FailedRunMarksWritesSuspect) {
  const auto id = attach(R"(procedure half($n) { put_int("partial", $n); put_int("q", 10 / $n) })");
  const auto r = g.provenance.run_workflow("alice", id, {{"n", 0}});
  EXPECT_EQ(r.status, RunStatus::failed);
  EXPECT_TRUE(r.outputs.empty());
  EXPECT_FALSE(r.detail.empty());
  auto obj = g.catalog.object("/wf/partial");
  ASSERT_TRUE(obj);
  for (const auto& rep : obj->replicas) EXPECT_EQ(rep.status, ReplicaStatus::suspect);
  EXPECT_EQ(g.provenance.run(r.run_id).status, RunStatus::failed);
}

TEST_F(ProvenanceTest, PolicyGatesRuns) {
  const auto id = attach(kDouble);
  g.engine.add_rules(kAdmin, R"(rule no_bob on pep.workflow.run.pre when $user.name == "bob" do deny("not bob"))");
  g.catalog.set_acl("alice", "/wf", "bob", Perm::write);
  EXPECT_EQ(error_of([&] { g.provenance.run_workflow("bob", id, {{"n", 1}}); }).code(), Errc::Denied);
  EXPECT_TRUE(g.catalog.state().runs.empty());
  EXPECT_EQ(g.provenance.run_workflow("alice", id, {{"n", 1}}).status, RunStatus::ok);
}

TEST_F(ProvenanceTest, RunIsAuditedAndExported) {
  const auto id = attach(kDouble);
  const auto r = g.provenance.run_workflow("alice", id, {{"n", 21}});
  AuditFilter f;
  f.event = "workflow.run";
  const auto entries = g.catalog.audit_query(kAdmin, f);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(json::parse(entries[0].detail).at("run_id"), r.run_id);
  const std::string doc = g.engine.get("alice", "/wf/runs/" + r.run_id + ".json");
  EXPECT_EQ(json::parse(doc).get<RunRecord>(), r);
}

TEST_F(ProvenanceTest, RerunReproducesOutputs) {
  const auto id = attach(kDouble);
  const auto r1 = g.provenance.run_workflow("alice", id, {{"n", 21}});
  // Another researcher re-executes the analysis.
  g.catalog.set_acl("alice", "/wf", "bob", Perm::write);
  g.catalog.set_acl("alice", "/wf/out", "bob", Perm::write);
  const auto r2 = g.provenance.rerun("bob", r1.run_id);
  EXPECT_EQ(r2.status, RunStatus::ok) << r2.detail;
  EXPECT_NE(r2.run_id, r1.run_id);
  EXPECT_EQ(r2.rerun_of, r1.run_id);
  EXPECT_EQ(r2.workflow_id, r1.workflow_id);
  EXPECT_EQ(r2.outputs, r1.outputs);
  EXPECT_EQ(r2.bindings, r1.bindings);
  const auto d = g.provenance.diff_runs(r1.run_id, r2.run_id);
  EXPECT_TRUE(d.differing_outputs().empty());
}

TEST_F(ProvenanceTest, RerunAfterInputChangeIsStale) {
  const auto id = attach(R"(procedure shift($n) { $x = get_int("in/n.txt"); put_int("shifted", $x + $n) })");
  const auto r = g.provenance.run_workflow("alice", id, {{"n", 5}});
  g.engine.put("alice", "/wf/in/n.txt", "30");
  const auto runs_before = g.catalog.state().runs.size();
  const Error e = error_of([&] { g.provenance.rerun("alice", r.run_id); });
  EXPECT_EQ(e.code(), Errc::StaleInputs);
  EXPECT_EQ(e.subjects(), (std::vector<std::string>{"/wf/in/n.txt"}));
  EXPECT_EQ(g.catalog.state().runs.size(), runs_before);
  g.engine.remove("alice", "/wf/in/n.txt");
  EXPECT_EQ(error_of([&] { g.provenance.rerun("alice", r.run_id); }).code(), Errc::StaleInputs);
}

TEST_F(ProvenanceTest, OverrideDiffsExactlyOnePath) {
  const auto id = attach(kDouble);
  const auto r1 = g.provenance.run_workflow("alice", id, {{"n", 21}});
  const auto r2 = g.provenance.rerun("alice", r1.run_id, {{"n", 22}});
  EXPECT_EQ(r2.bindings, json({{"n", 22}}));
  EXPECT_EQ(r2.outputs.at("/wf/out"), pgtest::oracle_sha256("44"));
  const auto d = g.provenance.diff_runs(r1.run_id, r2.run_id);
  EXPECT_FALSE(d.workflow_mismatch);
  EXPECT_EQ(d.differing_outputs(), (std::vector<std::string>{"/wf/out"}));
  ASSERT_EQ(d.bindings.size(), 1u);
  EXPECT_EQ(d.bindings[0].name, "n");
  EXPECT_EQ(d.bindings[0].a, json(21));
  EXPECT_EQ(d.bindings[0].b, json(22));
}

TEST_F(ProvenanceTest, DiffReflexiveAndMismatch) {
  const auto a = g.provenance.run_workflow("alice", attach(kDouble), {{"n", 2}});
  const auto b = g.provenance.run_workflow(
      "alice", attach(R"(procedure triple($n) { put_int("out", $n * 3) })"), {{"n", 2}});
  const auto self = g.provenance.diff_runs(a.run_id, a.run_id);
  EXPECT_FALSE(self.workflow_mismatch);
  for (const auto& c : self.outputs) EXPECT_EQ(c.kind, PathDiff::identical);
  EXPECT_TRUE(self.bindings.empty());
  const auto d = g.provenance.diff_runs(a.run_id, b.run_id);
  EXPECT_TRUE(d.workflow_mismatch);
  EXPECT_EQ(d, g.provenance.diff_runs(a.run_id, b.run_id));
  EXPECT_EQ(error_of([&] { g.provenance.diff_runs(a.run_id, "nope"); }).code(), Errc::NoSuchRun);
  EXPECT_EQ(error_of([&] { g.provenance.run("nope"); }).code(), Errc::NoSuchRun);
  EXPECT_EQ(error_of([&] { g.provenance.rerun("alice", "nope"); }).code(), Errc::NoSuchRun);
}

TEST_F(ProvenanceTest, DiffSoundnessProperty) {
  // Reports identical for a path iff the recorded checksums match.
  const auto id = attach(R"(procedure fanout($a, $b) { put_int("a.out", $a); put_int("b.out", $b) })");
  pgtest::Rng rng(11);
  std::vector<RunRecord> runs;
  for (int i = 0; i < 12; ++i)
    runs.push_back(g.provenance.run_workflow(
        "alice", id, {{"a", pgtest::uniform(rng, 0, 2)}, {"b", pgtest::uniform(rng, 0, 2)}}));
  for (const auto& ra : runs) {
    for (const auto& rb : runs) {
      const auto d = g.provenance.diff_runs(ra.run_id, rb.run_id);
      for (const auto& c : d.outputs) {
        const bool in_a = ra.outputs.count(c.path), in_b = rb.outputs.count(c.path);
        if (in_a && in_b) {
          const bool same = ra.outputs.at(c.path) == rb.outputs.at(c.path);
          EXPECT_EQ(c.kind == PathDiff::identical, same) << c.path;
          if (!same) {
            EXPECT_EQ(c.kind, PathDiff::differing);
          }
        } else {
          EXPECT_EQ(c.kind, in_a ? PathDiff::only_in_a : PathDiff::only_in_b);
        }
      }
    }
  }
}

TEST_F(ProvenanceTest, DiffClassifiesOneSidedPaths) {
  const auto a = g.provenance.run_workflow(
      "alice", attach(R"(procedure one() { put_int("x", 1) })"), json::object());
  const auto b = g.provenance.run_workflow(
      "alice", attach(R"(procedure two() { put_int("y", 1) })"), json::object());
  const auto d = g.provenance.diff_runs(a.run_id, b.run_id);
  ASSERT_EQ(d.outputs.size(), 2u);
  EXPECT_EQ(d.outputs[0].path, "/wf/x");
  EXPECT_EQ(d.outputs[0].kind, PathDiff::only_in_a);
  EXPECT_EQ(d.outputs[1].kind, PathDiff::only_in_b);
  EXPECT_TRUE(d.outputs[1].checksum_a.empty());
}

TEST_F(ProvenanceTest, SnapshotCopiesInputs) {
  const auto id = attach(R"(procedure greet($name) { $s = get_str("in/a.txt"); put_str("greeting.txt", $s + ", " + $name) })");
  RunOptions opts;
  opts.snapshot_inputs = true;
  const auto r = g.provenance.run_workflow("alice", id, {{"name", "bob"}}, opts);
  const std::string snap = "/wf/runs/" + r.run_id + "/input-0";
  EXPECT_EQ(g.engine.get("alice", snap), "alpha");
  bool tagged = false;
  for (const auto& t : g.catalog.avus(snap))
    tagged |= t.attr_name == "snapshot.of" && t.attr_value == "/wf/in/a.txt";
  EXPECT_TRUE(tagged);
  EXPECT_EQ(g.engine.get("alice", "/wf/greeting.txt"), "alpha, bob");
}

TEST_F(ProvenanceTest, RunRecordsAreWrittenOnce) {
  std::map<std::string, int> writes;
  g.catalog.set_record_observer([&](const JournalRecord& rec) {
    if (rec.op == "run.record") ++writes[rec.args.at("run").at("run_id").get<std::string>()];
  });
  const auto id = attach(kDouble);
  std::vector<std::string> ids;
  auto r = g.provenance.run_workflow("alice", id, {{"n", 1}});
  ids.push_back(r.run_id);
  for (int i = 0; i < 5; ++i) {
    r = g.provenance.rerun("alice", r.run_id, {{"n", i}});
    ids.push_back(r.run_id);
    g.provenance.diff_runs(ids.front(), r.run_id);
  }
  EXPECT_EQ(writes.size(), ids.size());
  for (const auto& [_, n] : writes) EXPECT_EQ(n, 1);
  EXPECT_EQ(error_of([&] { g.catalog.record_run(g.provenance.run(ids[0])); }).code(), Errc::Duplicate);
  g.catalog.set_record_observer(nullptr);
}

TEST_F(ProvenanceTest, CorpusIsDeterministic) {
  for (const auto& w : pgtest::workflow_corpus()) {
    const auto id = attach(w.source);
    const auto r1 = g.provenance.run_workflow("alice", id, w.bindings);
    ASSERT_EQ(r1.status, RunStatus::ok) << w.source << ": " << r1.detail;
    ASSERT_EQ(r1.outputs.size(), w.outputs.size()) << w.source;
    for (const auto& [rel, bytes] : w.outputs)
      EXPECT_EQ(r1.outputs.at(join_path("/wf", rel)), pgtest::oracle_sha256(bytes)) << w.source;
    const auto r2 = g.provenance.rerun("alice", r1.run_id);
    EXPECT_EQ(r2.outputs, r1.outputs) << w.source;
    const auto r3 = g.provenance.rerun("alice", r1.run_id, {{w.override_name, w.override_value}});
    std::vector<std::string> expected;
    for (const auto& rel : w.override_changes) expected.push_back(join_path("/wf", rel));
    EXPECT_EQ(g.provenance.diff_runs(r1.run_id, r3.run_id).differing_outputs(), expected) << w.source;
  }
}

TEST(PathSetLock, DisjointSetsProceedTogether) {
  PathSetLock locks;
  PathSetLock::Guard a(locks, {"/a"});
  auto f = std::async(std::launch::async, [&] { PathSetLock::Guard b(locks, {"/b"}); return true; });
  ASSERT_EQ(f.wait_for(std::chrono::seconds(5)), std::future_status::ready);
}

TEST(PathSetLock, OverlappingSetsSerializeInArrivalOrder) {
  PathSetLock locks;
  std::vector<int> order;
  std::mutex mu;
  std::optional<PathSetLock::Guard> first;
  first.emplace(locks, std::set<std::string>{"/a", "/b"});
  std::atomic<int> started{0};
  auto second = std::async(std::launch::async, [&] {
    ++started;
    PathSetLock::Guard g(locks, {"/b"});
    std::lock_guard l(mu);
    order.push_back(2);
  });
  while (started.load() == 0) std::this_thread::yield();
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  {
    std::lock_guard l(mu);
    EXPECT_TRUE(order.empty());
    order.push_back(1);
  }
  first.reset();
  second.get();
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST_F(ProvenanceTest, ConcurrentDisjointRuns) {
  const auto id = attach(R"(procedure w($p, $n) { put_int($p, $n) })");
  std::vector<std::future<RunRecord>> fs;
  for (int i = 0; i < 8; ++i)
    fs.push_back(std::async(std::launch::async, [&, i] {
      return g.provenance.run_workflow("alice", id, {{"p", "out" + std::to_string(i)}, {"n", i}});
    }));
  for (int i = 0; i < 8; ++i) {
    const auto r = fs[i].get();
    EXPECT_EQ(r.status, RunStatus::ok);
    EXPECT_EQ(g.engine.get("alice", "/wf/out" + std::to_string(i)), std::to_string(i));
  }
}

}  // namespace
