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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace pg {

/// Object payloads are carried as byte strings; no text encoding is implied.
using Bytes = std::string;

/// Microseconds since the Unix epoch.
std::int64_t now_us();

/// SHA-256 of `data` as 64 lowercase hex characters.
std::string sha256_hex(std::string_view data);
bool is_sha256_hex(std::string_view s) noexcept;

/// `n` cryptographically random bytes, hex encoded (2n characters).
std::string random_hex(std::size_t n);

bool constant_time_equal(std::string_view a, std::string_view b) noexcept;

/// Anchored glob match. `*` matches any run of bytes (including '/'),
/// `?` exactly one byte. No escapes, no character classes.
bool glob_match(std::string_view pattern, std::string_view text) noexcept;

// Logical paths are absolute, "/"-separated, at most 4096 bytes, and carry
// no empty, "." or ".." segments. "/" is the zone root.
inline constexpr std::size_t kMaxPathBytes = 4096;
bool is_valid_logical_path(std::string_view path) noexcept;
/// Throws Error(InvalidArgument) on an invalid path.
void require_logical_path(std::string_view path);
std::string parent_path(std::string_view path);
std::string_view leaf_name(std::string_view path) noexcept;
std::string join_path(std::string_view collection, std::string_view leaf);

/// True when `path` lies strictly below `collection`.
bool is_under(std::string_view path, std::string_view collection) noexcept;

}  // namespace pg
