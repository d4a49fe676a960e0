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
// Deterministic workflow corpus: pure micro-services plus object I/O only.
#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"

namespace pgtest {

struct CorpusWorkflow {
  std::string source;
  nlohmann::json bindings;
  std::map<std::string, std::string> outputs;  // path relative to the collection -> bytes
  std::string override_name;
  nlohmann::json override_value;
  std::vector<std::string> override_changes;  // relative output paths the override alters
};

const std::vector<CorpusWorkflow>& workflow_corpus();

/// Creates `coll` as a workflow collection owned by alice and stores the
/// inputs the corpus reads (in/a.txt, in/n.txt).
void seed_workflow_collection(Grid& g, const std::string& coll);

}  // namespace pgtest
