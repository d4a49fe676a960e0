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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pg {

/// Error categories surfaced by every module. The names double as the
/// stable wire identifiers used by the gateway (see errc_name()).
enum class Errc {
  DuplicateName,
  PermissionDenied,
  UnknownDriver,
  NoParent,
  Duplicate,
  NoSuchPath,
  NoSuchUser,
  MalformedPredicate,
  CorruptJournal,
  SyntaxError,
  UnboundVariable,
  TypeMismatch,
  DivisionByZero,
  ArithmeticOverflow,
  UnknownPep,
  DuplicateRuleName,
  NoSuchRule,
  UnknownMicroService,
  Denied,
  PolicyError,
  NoSuchResource,
  DriverError,
  Unsupported,
  NoSuchObject,
  AllReplicasSuspect,
  ChecksumMismatch,
  NoSuchReplica,
  WrongKind,
  FetchFailed,
  BadFraming,
  TimestampsDecreasing,
  BadInterval,
  NotAStreamCollection,
  NotAWorkflowCollection,
  NoSuchWorkflow,
  StaleInputs,
  NoSuchRun,
  BadCredentials,
  Unauthenticated,
  BindFailed,
  InvalidArgument,
  Io,
  Internal,
};

std::string_view errc_name(Errc code) noexcept;
/// Inverse of errc_name(); unknown names map to Errc::Internal.
Errc errc_from_name(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(Errc code, const std::string& message, std::vector<std::string> subjects)
      : std::runtime_error(message), code_(code), subjects_(std::move(subjects)) {}

  Errc code() const noexcept { return code_; }

  // Paths, names or tokens the error is about (e.g. the stale inputs of a
  // rerun). Empty for most errors.
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }

 private:
  Errc code_;
  std::vector<std::string> subjects_;
};

/// Parser failure with a source position and the set of tokens that would
/// have been accepted there.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, std::vector<std::string> expected, const std::string& found);
  SyntaxError(int line, int column, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::vector<std::string>& expected() const noexcept { return subjects(); }

 private:
  int line_;
  int column_;
};

}  // namespace pg
