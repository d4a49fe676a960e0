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
#include <cstdint>
#include <limits>
#include <set>

#include "pg/error.hpp"
#include "pg/ruledsl.hpp"
#include "ruledsl_lexer.hpp"

namespace pg::dsl {

using detail::Tok;
using detail::Token;

// ---------------------------------------------------------------------------
// AST construction and structural equality
// ---------------------------------------------------------------------------

ExprPtr make_literal(Value v) { return std::make_shared<Expr>(Expr{Expr::Literal{std::move(v)}}); }
ExprPtr make_var(std::string name) { return std::make_shared<Expr>(Expr{Expr::Var{std::move(name)}}); }
ExprPtr make_unary(UnOp op, ExprPtr operand) {
  return std::make_shared<Expr>(Expr{Expr::Unary{op, std::move(operand)}});
}
ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Expr>(Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_call(std::string name, std::vector<ExprPtr> args) {
  return std::make_shared<Expr>(Expr{Expr::Call{std::move(name), std::move(args)}});
}
ExprPtr make_list(std::vector<ExprPtr> items) {
  return std::make_shared<Expr>(Expr{Expr::List{std::move(items)}});
}

namespace {

bool same(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

}  // namespace

bool operator==(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Expr::Literal>) return x.value == y.value;
        else if constexpr (std::is_same_v<T, Expr::Var>) return x.name == y.name;
        else if constexpr (std::is_same_v<T, Expr::Unary>) return x.op == y.op && x.operand == y.operand;
        else if constexpr (std::is_same_v<T, Expr::Binary>)
          return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
        else if constexpr (std::is_same_v<T, Expr::Call>) return x.name == y.name && same(x.args, y.args);
        else return same(x.items, y.items);
      },
      a.node);
}

bool operator==(const Action& a, const Action& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Action::Invoke>) return x.call == y.call;
        else if constexpr (std::is_same_v<T, Action::Assign>) return x.var == y.var && x.value == y.value;
        else if constexpr (std::is_same_v<T, Action::If>)
          return x.cond == y.cond && x.then_chain == y.then_chain && x.else_chain == y.else_chain;
        else if constexpr (std::is_same_v<T, Action::Foreach>)
          return x.var == y.var && x.list == y.list && x.body == y.body;
        else if constexpr (std::is_same_v<T, Action::Allow>) return true;
        else return x.reason == y.reason;
      },
      a.node);
}

bool operator==(const RuleAst& a, const RuleAst& b) {
  return a.name == b.name && a.priority == b.priority && a.pep == b.pep &&
         a.condition == b.condition && a.actions == b.actions;
}

bool operator==(const ProcedureAst& a, const ProcedureAst& b) {
  return a.name == b.name && a.params == b.params && a.body == b.body;
}

bool is_system_variable(std::string_view name) noexcept {
  return name == "user.name" || name == "user.role" || name == "op" || name == "obj.path" ||
         name == "obj.owner" || name == "coll.path" || name == "resc.name";
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxDepth = 200;

const std::set<std::string, std::less<>> kKeywords = {
    "rule", "priority", "on",    "when", "do",    "if",        "else",  "foreach",
    "in",   "allow",    "deny",  "true", "false", "matches",   "procedure"};

bool is_keyword(std::string_view s) { return kKeywords.count(s) > 0; }

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(detail::tokenize(text)) {}

  std::vector<RuleAst> ruleset() {
    std::vector<RuleAst> out;
    while (cur().kind != Tok::End) {
      if (!is_kw("rule")) fail({"'rule'", "end of input"});
      out.push_back(rule());
    }
    return out;
  }

  ProcedureAst procedure() {
    ProcedureAst p;
    expect_kw("procedure");
    p.name = name("procedure name");
    expect(Tok::LParen, "'('");
    std::set<std::string> declared;
    if (cur().kind != Tok::RParen) {
      while (true) {
        const Token& t = cur();
        if (t.kind != Tok::Var) fail({"parameter variable"});
        if (t.text.find('.') != std::string::npos || is_system_variable(t.text))
          throw SyntaxError(t.line, t.column, "parameter $" + t.text + " shadows a context variable");
        if (!declared.insert(t.text).second)
          throw SyntaxError(t.line, t.column, "duplicate parameter $" + t.text);
        p.params.push_back(t.text);
        ++i_;
        if (cur().kind == Tok::Comma) {
          ++i_;
          continue;
        }
        break;
      }
    }
    expect(Tok::RParen, "')'");
    declared_ = &declared;
    p.body = braced_chain();
    declared_ = nullptr;
    if (cur().kind != Tok::End) fail({"end of input"});
    return p;
  }

  ExprPtr standalone_expr() {
    ExprPtr e = expr();
    if (cur().kind != Tok::End) fail({"operator", "end of input"});
    return e;
  }

 private:
  const Token& cur() const { return toks_[i_]; }
  const Token& peek(std::size_t n = 1) const {
    return toks_[std::min(i_ + n, toks_.size() - 1)];
  }
  bool is_kw(std::string_view kw) const { return cur().kind == Tok::Ident && cur().text == kw; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(cur().line, cur().column, std::move(expected), detail::describe(cur()));
  }

  const Token& expect(Tok kind, const char* what) {
    if (cur().kind != kind) fail({what});
    return toks_[i_++];
  }

  void expect_kw(const char* kw) {
    if (!is_kw(kw)) fail({std::string("'") + kw + "'"});
    ++i_;
  }

  std::string name(const char* what) {
    if (cur().kind != Tok::Ident || is_keyword(cur().text)) fail({what});
    return toks_[i_++].text;
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth)
        throw SyntaxError(p.cur().line, p.cur().column, "nesting too deep");
    }
    ~DepthGuard() { --p.depth_; }
  };

  RuleAst rule() {
    RuleAst r;
    expect_kw("rule");
    r.name = name("rule name");
    if (is_kw("priority")) {
      ++i_;
      r.priority = signed_int();
    }
    expect_kw("on");
    if (cur().kind != Tok::Ident || is_keyword(cur().text)) fail({"PEP name"});
    r.pep = toks_[i_++].text;
    if (is_kw("when")) {
      ++i_;
      r.condition = expr();
    } else {
      r.condition = make_literal(true);
    }
    expect_kw("do");
    r.actions = chain();
    if (cur().kind != Tok::End && !is_kw("rule")) fail({"';'", "'rule'", "end of input"});
    return r;
  }

  std::int64_t signed_int() {
    bool neg = false;
    if (cur().kind == Tok::Minus) {
      neg = true;
      ++i_;
    }
    const Token& t = expect(Tok::Int, "integer");
    return to_int(t, neg);
  }

  static std::int64_t to_int(const Token& t, bool negate) {
    constexpr std::uint64_t kMaxPos = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (negate) {
      if (t.number == kMaxPos + 1) return std::numeric_limits<std::int64_t>::min();
      return -static_cast<std::int64_t>(t.number);
    }
    if (t.number > kMaxPos) throw SyntaxError(t.line, t.column, "integer literal out of range");
    return static_cast<std::int64_t>(t.number);
  }

  bool chain_ends() const { return cur().kind == Tok::End || cur().kind == Tok::RBrace || is_kw("rule"); }

  Chain chain() {
    DepthGuard g(*this);
    Chain out;
    out.push_back(item());
    while (cur().kind == Tok::Semi) {
      ++i_;
      if (chain_ends()) break;
      out.push_back(item());
    }
    return out;
  }

  Chain braced_chain() {
    expect(Tok::LBrace, "'{'");
    Chain out;
    if (cur().kind != Tok::RBrace) out = chain();
    expect(Tok::RBrace, "'}'");
    return out;
  }

  void declare(const std::string& var) {
    if (declared_) declared_->insert(var);
  }

  Action item() {
    DepthGuard g(*this);
    const Token& t = cur();
    if (t.kind == Tok::Ident && t.text == "allow") {
      ++i_;
      expect(Tok::LParen, "'('");
      expect(Tok::RParen, "')'");
      return Action{Action::Allow{}};
    }
    if (t.kind == Tok::Ident && t.text == "deny") {
      ++i_;
      expect(Tok::LParen, "'('");
      std::string reason = expect(Tok::String, "string").text;
      expect(Tok::RParen, "')'");
      return Action{Action::Deny{std::move(reason)}};
    }
    if (t.kind == Tok::Ident && t.text == "if") return if_item();
    if (t.kind == Tok::Ident && t.text == "foreach") {
      ++i_;
      const Token& v = expect(Tok::Var, "loop variable");
      if (v.text.find('.') != std::string::npos || is_system_variable(v.text))
        throw SyntaxError(v.line, v.column, "cannot assign to context variable $" + v.text);
      std::string var = v.text;
      expect_kw("in");
      ExprPtr list = expr();
      declare(var);
      Chain body = braced_chain();
      return Action{Action::Foreach{std::move(var), std::move(list), std::move(body)}};
    }
    if (t.kind == Tok::Var) {
      if (t.text.find('.') != std::string::npos || is_system_variable(t.text))
        throw SyntaxError(t.line, t.column, "cannot assign to context variable $" + t.text);
      std::string var = t.text;
      ++i_;
      expect(Tok::Assign, "'='");
      ExprPtr value = expr();
      declare(var);
      return Action{Action::Assign{std::move(var), std::move(value)}};
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text) && peek().kind == Tok::LParen)
      return Action{Action::Invoke{call()}};
    fail({"micro-service call", "assignment", "'if'", "'foreach'", "'allow'", "'deny'"});
  }

  Action if_item() {
    expect_kw("if");
    ExprPtr cond = expr();
    Chain then_chain = braced_chain();
    Chain else_chain;
    if (is_kw("else")) {
      ++i_;
      if (is_kw("if")) {
        DepthGuard g(*this);
        else_chain.push_back(if_item());
      } else {
        else_chain = braced_chain();
      }
    }
    return Action{Action::If{std::move(cond), std::move(then_chain), std::move(else_chain)}};
  }

  ExprPtr call() {
    std::string fn = toks_[i_++].text;
    expect(Tok::LParen, "'('");
    std::vector<ExprPtr> args;
    if (cur().kind != Tok::RParen) {
      args.push_back(expr());
      while (cur().kind == Tok::Comma) {
        ++i_;
        args.push_back(expr());
      }
    }
    expect(Tok::RParen, "')'");
    return make_call(std::move(fn), std::move(args));
  }

  // expr := or
  ExprPtr expr() {
    DepthGuard g(*this);
    ExprPtr lhs = and_expr();
    while (cur().kind == Tok::OrOr) {
      ++i_;
      lhs = make_binary(BinOp::lor, lhs, and_expr());
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = cmp_expr();
    while (cur().kind == Tok::AndAnd) {
      ++i_;
      lhs = make_binary(BinOp::land, lhs, cmp_expr());
    }
    return lhs;
  }

  ExprPtr cmp_expr() {
    ExprPtr lhs = add_expr();
    while (true) {
      BinOp op;
      switch (cur().kind) {
        case Tok::Eq: op = BinOp::eq; break;
        case Tok::Ne: op = BinOp::ne; break;
        case Tok::Lt: op = BinOp::lt; break;
        case Tok::Le: op = BinOp::le; break;
        case Tok::Gt: op = BinOp::gt; break;
        case Tok::Ge: op = BinOp::ge; break;
        default:
          if (is_kw("matches")) {
            op = BinOp::matches;
            break;
          }
          return lhs;
      }
      ++i_;
      lhs = make_binary(op, lhs, add_expr());
    }
  }

  ExprPtr add_expr() {
    ExprPtr lhs = mul_expr();
    while (cur().kind == Tok::Plus || cur().kind == Tok::Minus) {
      BinOp op = cur().kind == Tok::Plus ? BinOp::add : BinOp::sub;
      ++i_;
      lhs = make_binary(op, lhs, mul_expr());
    }
    return lhs;
  }

  ExprPtr mul_expr() {
    ExprPtr lhs = unary();
    while (cur().kind == Tok::Star || cur().kind == Tok::Slash) {
      BinOp op = cur().kind == Tok::Star ? BinOp::mul : BinOp::div;
      ++i_;
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    DepthGuard g(*this);
    if (cur().kind == Tok::Bang) {
      ++i_;
      return make_unary(UnOp::lnot, unary());
    }
    if (cur().kind == Tok::Minus) {
      ++i_;
      if (cur().kind == Tok::Int) return make_literal(to_int(toks_[i_++], true));
      ExprPtr operand = unary();
      // Fold negation of an integer literal so that printing is canonical.
      if (const auto* lit = std::get_if<Expr::Literal>(&operand->node);
          lit && lit->value.is_int() && lit->value.as_int() != std::numeric_limits<std::int64_t>::min())
        return make_literal(-lit->value.as_int());
      return make_unary(UnOp::neg, std::move(operand));
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Int: ++i_; return make_literal(to_int(t, false));
      case Tok::String: ++i_; return make_literal(t.text);
      case Tok::Var:
        if (declared_ && !is_system_variable(t.text) && !declared_->count(t.text))
          throw SyntaxError(t.line, t.column, "undeclared variable $" + t.text);
        ++i_;
        return make_var(t.text);
      case Tok::LParen: {
        ++i_;
        ExprPtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::LBracket: {
        ++i_;
        std::vector<ExprPtr> items;
        if (cur().kind != Tok::RBracket) {
          items.push_back(expr());
          while (cur().kind == Tok::Comma) {
            ++i_;
            items.push_back(expr());
          }
        }
        expect(Tok::RBracket, "']'");
        return make_list(std::move(items));
      }
      case Tok::Ident:
        if (t.text == "true" || t.text == "false") {
          ++i_;
          return make_literal(t.text == "true");
        }
        if (!is_keyword(t.text) && peek().kind == Tok::LParen) return call();
        break;
      default: break;
    }
    fail({"expression"});
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int depth_ = 0;
  std::set<std::string>* declared_ = nullptr;
};

using CallVisitor = std::function<void(const Expr::Call&)>;

void visit_calls(const Expr& e, const CallVisitor& fn);

void visit_calls(const Chain& chain, const CallVisitor& fn) {
  for (const auto& a : chain) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Action::Invoke>) visit_calls(*x.call, fn);
          else if constexpr (std::is_same_v<T, Action::Assign>) visit_calls(*x.value, fn);
          else if constexpr (std::is_same_v<T, Action::If>) {
            visit_calls(*x.cond, fn);
            visit_calls(x.then_chain, fn);
            visit_calls(x.else_chain, fn);
          } else if constexpr (std::is_same_v<T, Action::Foreach>) {
            visit_calls(*x.list, fn);
            visit_calls(x.body, fn);
          }
        },
        a.node);
  }
}

void visit_calls(const Expr& e, const CallVisitor& fn) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Expr::Call>) {
          fn(x);
          for (const auto& arg : x.args) visit_calls(*arg, fn);
        } else if constexpr (std::is_same_v<T, Expr::Unary>) {
          visit_calls(*x.operand, fn);
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          visit_calls(*x.lhs, fn);
          visit_calls(*x.rhs, fn);
        } else if constexpr (std::is_same_v<T, Expr::List>) {
          for (const auto& item : x.items) visit_calls(*item, fn);
        }
      },
      e.node);
}

}  // namespace

std::vector<RuleAst> parse_rules(std::string_view text) { return Parser(text).ruleset(); }

ProcedureAst parse_procedure(std::string_view text) { return Parser(text).procedure(); }

ExprPtr parse_expr(std::string_view text) { return Parser(text).standalone_expr(); }

void for_each_call(const Chain& chain, const std::function<void(const Expr::Call&)>& fn) {
  visit_calls(chain, fn);
}

std::vector<std::string> literal_call_arguments(const Chain& chain) {
  std::vector<std::string> out;
  visit_calls(chain, [&](const Expr::Call& c) {
    for (const auto& arg : c.args)
      if (const auto* lit = std::get_if<Expr::Literal>(&arg->node); lit && lit->value.is_string())
        out.push_back(lit->value.as_string());
  });
  return out;
}

}  // namespace pg::dsl
