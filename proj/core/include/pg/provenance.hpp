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

#include <condition_variable>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pg/engine.hpp"

namespace pg {

enum class PathDiff { identical, differing, only_in_a, only_in_b };
std::string to_string(PathDiff d);

struct PathComparison {
  std::string path;
  PathDiff kind = PathDiff::identical;
  std::string checksum_a;  // empty when absent from a
  std::string checksum_b;
  bool operator==(const PathComparison&) const = default;
};

struct BindingComparison {
  std::string name;
  std::optional<nlohmann::json> a;
  std::optional<nlohmann::json> b;
  bool operator==(const BindingComparison&) const = default;
};

struct DiffReport {
  std::string run_a;
  std::string run_b;
  std::string workflow_a;
  std::string workflow_b;
  bool workflow_mismatch = false;
  std::vector<PathComparison> inputs;   // every path of either run, sorted
  std::vector<PathComparison> outputs;
  std::vector<BindingComparison> bindings;  // differing bindings only
  bool operator==(const DiffReport&) const = default;

  /// Output paths classified as anything other than identical.
  std::vector<std::string> differing_outputs() const;
};

void to_json(nlohmann::json& j, const DiffReport& d);
void to_json(nlohmann::json& j, const PathComparison& c);

struct RunOptions {
  /// Copy input bytes into <coll>/runs/<run_id>/ (at most kSnapshotLimit).
  bool snapshot_inputs = false;
};

inline constexpr std::uint64_t kSnapshotLimit = 16ull << 20;

/// Blocks until a path set is disjoint from every set held or queued ahead
/// of it, so overlapping holders proceed in arrival order.
class PathSetLock {
 public:
  class Guard {
   public:
    Guard(PathSetLock& owner, std::set<std::string> paths);
    ~Guard();
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    PathSetLock& owner_;
    std::list<std::pair<std::set<std::string>, bool>>::iterator slot_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::list<std::pair<std::set<std::string>, bool>> queue_;  // (paths, granted)
};

/// Workflow collections: versioned procedures, captured runs, reruns and
/// run comparison.
class Provenance {
 public:
  explicit Provenance(Engine& engine);

  /// Identical canonical text yields the existing version.
  WorkflowVersion attach_workflow(const std::string& actor, const std::string& coll,
                                  const std::string& source);
  std::vector<WorkflowVersion> list_workflows(const std::string& coll) const;

  RunRecord run_workflow(const std::string& actor, const std::string& workflow_id,
                         const nlohmann::json& bindings, const RunOptions& opts = {});
  /// Throws Error(StaleInputs) naming every input whose checksum changed.
  RunRecord rerun(const std::string& actor, const std::string& run_id,
                  const nlohmann::json& overrides = nlohmann::json::object(),
                  const RunOptions& opts = {});
  RunRecord run(const std::string& run_id) const;
  DiffReport diff_runs(const std::string& a, const std::string& b) const;

  /// Logical paths a procedure names as literal read and write arguments,
  /// resolved against `coll`.
  std::pair<std::set<std::string>, std::set<std::string>> static_paths(
      const dsl::ProcedureAst& proc, const std::string& coll) const;

 private:
  RunRecord execute(const std::string& actor, const WorkflowVersion& wf,
                    const nlohmann::json& bindings, const RunOptions& opts,
                    const std::string& rerun_of);
  void ensure_collection(const std::string& path, const std::string& owner);
  void snapshot_inputs(const std::string& actor, const std::string& dir,
                       const std::map<std::string, std::string>& inputs);

  Engine& engine_;
  PathSetLock locks_;
};

}  // namespace pg
