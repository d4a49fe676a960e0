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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pg::dsl::detail {

enum class Tok {
  End, Ident, Var, Int, String,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket, Comma, Semi,
  Assign, Eq, Ne, Lt, Le, Gt, Ge, Plus, Minus, Star, Slash, Bang, AndAnd, OrOr,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;       // identifier/variable name, decoded string, or digits
  std::uint64_t number = 0;
  int line = 1;
  int column = 1;
};

/// Human-readable token description used in error messages.
std::string describe(Tok kind);
std::string describe(const Token& tok);

/// Throws pg::SyntaxError on characters outside the language.
std::vector<Token> tokenize(std::string_view text);

}  // namespace pg::dsl::detail
