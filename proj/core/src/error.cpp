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

#include "pg/error.hpp"

#include <array>
#include <utility>

namespace pg {

namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 43> kNames{{
    {Errc::DuplicateName, "DuplicateName"},
    {Errc::PermissionDenied, "PermissionDenied"},
    {Errc::UnknownDriver, "UnknownDriver"},
    {Errc::NoParent, "NoParent"},
    {Errc::Duplicate, "Duplicate"},
    {Errc::NoSuchPath, "NoSuchPath"},
    {Errc::NoSuchUser, "NoSuchUser"},
    {Errc::MalformedPredicate, "MalformedPredicate"},
    {Errc::CorruptJournal, "CorruptJournal"},
    {Errc::SyntaxError, "SyntaxError"},
    {Errc::UnboundVariable, "UnboundVariable"},
    {Errc::TypeMismatch, "TypeMismatch"},
    {Errc::DivisionByZero, "DivisionByZero"},
    {Errc::ArithmeticOverflow, "ArithmeticOverflow"},
    {Errc::UnknownPep, "UnknownPep"},
    {Errc::DuplicateRuleName, "DuplicateRuleName"},
    {Errc::NoSuchRule, "NoSuchRule"},
    {Errc::UnknownMicroService, "UnknownMicroService"},
    {Errc::Denied, "Denied"},
    {Errc::PolicyError, "PolicyError"},
    {Errc::NoSuchResource, "NoSuchResource"},
    {Errc::DriverError, "DriverError"},
    {Errc::Unsupported, "Unsupported"},
    {Errc::NoSuchObject, "NoSuchObject"},
    {Errc::AllReplicasSuspect, "AllReplicasSuspect"},
    {Errc::ChecksumMismatch, "ChecksumMismatch"},
    {Errc::NoSuchReplica, "NoSuchReplica"},
    {Errc::WrongKind, "WrongKind"},
    {Errc::FetchFailed, "FetchFailed"},
    {Errc::BadFraming, "BadFraming"},
    {Errc::TimestampsDecreasing, "TimestampsDecreasing"},
    {Errc::BadInterval, "BadInterval"},
    {Errc::NotAStreamCollection, "NotAStreamCollection"},
    {Errc::NotAWorkflowCollection, "NotAWorkflowCollection"},
    {Errc::NoSuchWorkflow, "NoSuchWorkflow"},
    {Errc::StaleInputs, "StaleInputs"},
    {Errc::NoSuchRun, "NoSuchRun"},
    {Errc::BadCredentials, "BadCredentials"},
    {Errc::Unauthenticated, "Unauthenticated"},
    {Errc::BindFailed, "BindFailed"},
    {Errc::InvalidArgument, "InvalidArgument"},
    {Errc::Io, "Io"},
    {Errc::Internal, "Internal"},
}};

std::string describe(int line, int column, const std::vector<std::string>& expected,
                     const std::string& found) {
  std::string msg = "line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": unexpected " + found + ", expected ";
  if (expected.size() > 1) msg += "one of ";
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) msg += ", ";
    msg += expected[i];
  }
  return msg;
}

}  // namespace

std::string_view errc_name(Errc code) noexcept {
  for (const auto& [c, name] : kNames)
    if (c == code) return name;
  return "Internal";
}

Errc errc_from_name(std::string_view name) noexcept {
  for (const auto& [c, n] : kNames)
    if (n == name) return c;
  return Errc::Internal;
}

SyntaxError::SyntaxError(int line, int column, std::vector<std::string> expected,
                         const std::string& found)
    : Error(Errc::SyntaxError, describe(line, column, expected, found), expected),
      line_(line),
      column_(column) {}

SyntaxError::SyntaxError(int line, int column, const std::string& message)
    : Error(Errc::SyntaxError,
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

}  // namespace pg
