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
#include "ruledsl_lexer.hpp"

#include <cstdio>

#include "pg/error.hpp"

namespace pg::dsl::detail {

std::string describe(Tok kind) {
  switch (kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Var: return "variable";
    case Tok::Int: return "integer";
    case Tok::String: return "string";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Assign: return "'='";
    case Tok::Eq: return "'=='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Bang: return "'!'";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
  }
  return "token";
}

std::string describe(const Token& tok) {
  switch (tok.kind) {
    case Tok::Ident: return "'" + tok.text + "'";
    case Tok::Var: return "'$" + tok.text + "'";
    case Tok::Int: return "integer " + tok.text;
    case Tok::String: return "string";
    default: return describe(tok.kind);
  }
}

namespace {

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (ident_start(c)) {
        t.kind = Tok::Ident;
        t.text = dotted_name();
      } else if (c == '$') {
        advance();
        if (pos_ >= text_.size() || !ident_start(text_[pos_]))
          throw SyntaxError(t.line, t.column, "expected a variable name after '$'");
        t.kind = Tok::Var;
        t.text = dotted_name();
      } else if (c >= '0' && c <= '9') {
        t.kind = Tok::Int;
        number(t);
      } else if (c == '"') {
        t.kind = Tok::String;
        t.text = string_literal(t);
      } else {
        t.kind = punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool peek_is(std::size_t off, char c) const {
    return pos_ + off < text_.size() && text_[pos_ + off] == c;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string dotted_name() {
    std::string out;
    while (true) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) {
        out += text_[pos_];
        advance();
      }
      if (peek_is(0, '.') && pos_ + 1 < text_.size() && ident_start(text_[pos_ + 1])) {
        out += '.';
        advance();
        continue;
      }
      return out;
    }
  }

  void number(Token& t) {
    constexpr std::uint64_t kLimit = 9223372036854775808ULL;  // |INT64_MIN|
    std::uint64_t v = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      std::uint64_t d = static_cast<std::uint64_t>(text_[pos_] - '0');
      if (v > (kLimit - d) / 10) throw SyntaxError(t.line, t.column, "integer literal out of range");
      v = v * 10 + d;
      t.text += text_[pos_];
      advance();
    }
    if (pos_ < text_.size() && ident_char(text_[pos_]))
      throw SyntaxError(line_, col_, "unexpected character after integer literal");
    t.number = v;
  }

  std::string string_literal(const Token& t) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) throw SyntaxError(t.line, t.column, "unterminated string literal");
      char c = text_[pos_];
      if (c == '"') {
        advance();
        return out;
      }
      if (c == '\\') {
        int l = line_, col = col_;
        advance();
        if (pos_ >= text_.size()) throw SyntaxError(t.line, t.column, "unterminated string literal");
        char e = text_[pos_];
        if (e == '"' || e == '\\') out += e;
        else if (e == 'n') out += '\n';
        else throw SyntaxError(l, col, "unknown escape sequence");
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  Tok punct(const Token& t) {
    char c = text_[pos_];
    auto two = [&](char next, Tok yes, Tok no) {
      advance();
      if (pos_ < text_.size() && text_[pos_] == next) {
        advance();
        return yes;
      }
      return no;
    };
    switch (c) {
      case '(': advance(); return Tok::LParen;
      case ')': advance(); return Tok::RParen;
      case '{': advance(); return Tok::LBrace;
      case '}': advance(); return Tok::RBrace;
      case '[': advance(); return Tok::LBracket;
      case ']': advance(); return Tok::RBracket;
      case ',': advance(); return Tok::Comma;
      case ';': advance(); return Tok::Semi;
      case '+': advance(); return Tok::Plus;
      case '-': advance(); return Tok::Minus;
      case '*': advance(); return Tok::Star;
      case '/': advance(); return Tok::Slash;
      case '=': return two('=', Tok::Eq, Tok::Assign);
      case '!': return two('=', Tok::Ne, Tok::Bang);
      case '<': return two('=', Tok::Le, Tok::Lt);
      case '>': return two('=', Tok::Ge, Tok::Gt);
      case '&':
        if (peek_is(1, '&')) {
          advance();
          advance();
          return Tok::AndAnd;
        }
        break;
      case '|':
        if (peek_is(1, '|')) {
          advance();
          advance();
          return Tok::OrOr;
        }
        break;
      default: break;
    }
    unsigned char uc = static_cast<unsigned char>(c);
    char shown[16];
    if (uc >= 0x20 && uc < 0x7f) std::snprintf(shown, sizeof shown, "'%c'", c);
    else std::snprintf(shown, sizeof shown, "byte 0x%02x", uc);
    throw SyntaxError(t.line, t.column, std::string("unexpected character ") + shown);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

}  // namespace pg::dsl::detail
