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
// Reference implementations the system under test is checked against. They
// share no code with core.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "generators.hpp"

namespace pgtest {

/// Glob with * (any run, including "/") and ? (one byte); dynamic programming.
bool oracle_glob(std::string_view pattern, std::string_view text);

/// Linear scan over every fact.
std::set<std::string> avu_oracle(const std::vector<AvuFact>& facts, const PredSpec& spec);

/// Lowercase hex SHA-256 through OpenSSL's one-shot API.
std::string oracle_sha256(std::string_view data);

/// 8-byte big-endian t, 4-byte big-endian length, payload.
std::string oracle_frame(std::uint64_t t, std::string_view payload);

/// Filter-and-sort over all ingested records. Segment ids are positions in
/// `segments` plus one (ingest order).
std::string stream_oracle(const std::vector<std::vector<pg::StreamRecord>>& segments,
                          std::uint64_t lo, std::uint64_t hi);

}  // namespace pgtest
