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

// Rule and procedure language.
//
//   ruleset   := { rule }
//   rule      := "rule" IDENT ["priority" INT] "on" PEP ["when" expr] "do" chain
//   procedure := "procedure" IDENT "(" [VAR {"," VAR}] ")" "{" chain "}"
//   chain     := item { ";" item }
//   item      := call | VAR "=" expr | "if" expr "{" chain "}" ["else" ("{" chain "}" | if)]
//              | "foreach" VAR "in" expr "{" chain "}" | "allow" "(" ")" | "deny" "(" STRING ")"
//
// Expressions, loosest to tightest: ||, &&, comparisons and `matches`, + -,
// * /, unary ! and -. Values are strings, 64-bit integers, booleans and lists
// of strings. `#` starts a comment that runs to end of line.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace pg::dsl {

class Value {
 public:
  using List = std::vector<std::string>;

  Value() : data_(false) {}
  Value(bool b) : data_(b) {}
  Value(std::int64_t i) : data_(i) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(List l) : data_(std::move(l)) {}

  bool is_bool() const noexcept { return std::holds_alternative<bool>(data_); }
  bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(data_); }
  bool is_string() const noexcept { return std::holds_alternative<std::string>(data_); }
  bool is_list() const noexcept { return std::holds_alternative<List>(data_); }

  // Throw Error(TypeMismatch) on the wrong type.
  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_string() const;
  const List& as_list() const;

  std::string_view type_name() const noexcept;
  /// Human-readable rendering; strings are not quoted.
  std::string to_display() const;

  bool operator==(const Value&) const = default;

 private:
  std::variant<std::string, std::int64_t, bool, List> data_;
};

void to_json(nlohmann::json& j, const Value& v);
/// Throws Error(InvalidArgument) for JSON with no Value equivalent.
void from_json(const nlohmann::json& j, Value& v);

using Bindings = std::map<std::string, Value, std::less<>>;

enum class BinOp { eq, ne, lt, le, gt, ge, matches, add, sub, mul, div, land, lor };
enum class UnOp { lnot, neg };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  struct Literal {
    Value value;
  };
  struct Var {
    std::string name;  // without the leading '$'
  };
  struct Unary {
    UnOp op;
    ExprPtr operand;
  };
  struct Binary {
    BinOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  struct Call {
    std::string name;
    std::vector<ExprPtr> args;
  };
  struct List {
    std::vector<ExprPtr> items;
  };

  std::variant<Literal, Var, Unary, Binary, Call, List> node;
};

bool operator==(const Expr& a, const Expr& b);
bool operator==(const ExprPtr& a, const ExprPtr& b);

ExprPtr make_literal(Value v);
ExprPtr make_var(std::string name);
ExprPtr make_unary(UnOp op, ExprPtr operand);
ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(std::string name, std::vector<ExprPtr> args);
ExprPtr make_list(std::vector<ExprPtr> items);

struct Action;
using Chain = std::vector<Action>;

struct Action {
  struct Invoke {
    ExprPtr call;  // always an Expr::Call
  };
  struct Assign {
    std::string var;
    ExprPtr value;
  };
  struct If {
    ExprPtr cond;
    Chain then_chain;
    Chain else_chain;
  };
  struct Foreach {
    std::string var;
    ExprPtr list;
    Chain body;
  };
  struct Allow {};
  struct Deny {
    std::string reason;
  };

  std::variant<Invoke, Assign, If, Foreach, Allow, Deny> node;
};

bool operator==(const Action& a, const Action& b);

struct RuleAst {
  std::string name;
  std::int64_t priority = 0;
  std::string pep;
  ExprPtr condition;  // literal true when the rule has no `when`
  Chain actions;
};

bool operator==(const RuleAst& a, const RuleAst& b);

struct ProcedureAst {
  std::string name;
  std::vector<std::string> params;
  Chain body;
};

bool operator==(const ProcedureAst& a, const ProcedureAst& b);

/// Read-only context variables available to every rule and procedure.
bool is_system_variable(std::string_view name) noexcept;

// Parsing. Both throw pg::SyntaxError with line, column and expected tokens.
// Input of any bytes is accepted; the parser never crashes.
std::vector<RuleAst> parse_rules(std::string_view text);
ProcedureAst parse_procedure(std::string_view text);
ExprPtr parse_expr(std::string_view text);

// Canonical text. parse(pretty_print(a)) == a for every parsed AST.
std::string pretty_print(const Expr& e);
std::string pretty_print(const RuleAst& r);
std::string pretty_print(const std::vector<RuleAst>& rules);
std::string pretty_print(const ProcedureAst& p);

/// Resolves a call inside an expression. Receives evaluated arguments.
using CallHandler = std::function<Value(const std::string& name, std::vector<Value> args)>;

/// Strict left-to-right evaluation; && and || short-circuit. Without a call
/// handler a call raises Error(UnknownMicroService).
/// Errors: UnboundVariable, TypeMismatch, DivisionByZero, ArithmeticOverflow.
Value eval_expr(const Expr& e, const Bindings& vars, const CallHandler* calls = nullptr);

/// Visits every call in a chain, outer calls before their arguments.
void for_each_call(const Chain& chain, const std::function<void(const Expr::Call&)>& fn);

/// String literals appearing as call arguments anywhere in a chain.
std::vector<std::string> literal_call_arguments(const Chain& chain);

}  // namespace pg::dsl
