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
#include "pg/ruledsl.hpp"

namespace pg::dsl {

namespace {

// Binding strength; higher binds tighter.
int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Expr::Binary>(&e.node)) {
    switch (b->op) {
      case BinOp::lor: return 1;
      case BinOp::land: return 2;
      case BinOp::eq: case BinOp::ne: case BinOp::lt: case BinOp::le:
      case BinOp::gt: case BinOp::ge: case BinOp::matches: return 3;
      case BinOp::add: case BinOp::sub: return 4;
      case BinOp::mul: case BinOp::div: return 5;
    }
  }
  if (std::holds_alternative<Expr::Unary>(e.node)) return 6;
  return 7;
}

const char* op_text(BinOp op) {
  switch (op) {
    case BinOp::eq: return "==";
    case BinOp::ne: return "!=";
    case BinOp::lt: return "<";
    case BinOp::le: return "<=";
    case BinOp::gt: return ">";
    case BinOp::ge: return ">=";
    case BinOp::matches: return "matches";
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::land: return "&&";
    case BinOp::lor: return "||";
  }
  return "?";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

std::string literal_text(const Value& v) {
  if (v.is_string()) return quote(v.as_string());
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  std::string out = "[";
  const auto& items = v.as_list();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += quote(items[i]);
  }
  return out + "]";
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print_args(const std::vector<ExprPtr>& args, std::string& out) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    print(*args[i], out);
  }
}

void print(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Expr::Literal>) {
          out += literal_text(x.value);
        } else if constexpr (std::is_same_v<T, Expr::Var>) {
          out += '$';
          out += x.name;
        } else if constexpr (std::is_same_v<T, Expr::Unary>) {
          out += x.op == UnOp::lnot ? "!" : "-";
          print_child(*x.operand, precedence(*x.operand) < 6, out);
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          const int p = precedence(e);
          print_child(*x.lhs, precedence(*x.lhs) < p, out);
          out += ' ';
          out += op_text(x.op);
          out += ' ';
          // Left-associative: an equal-precedence right operand needs parens.
          print_child(*x.rhs, precedence(*x.rhs) <= p, out);
        } else if constexpr (std::is_same_v<T, Expr::Call>) {
          out += x.name;
          out += '(';
          print_args(x.args, out);
          out += ')';
        } else {
          out += '[';
          print_args(x.items, out);
          out += ']';
        }
      },
      e.node);
}

void print(const Chain& chain, std::string& out);

void print_braced(const Chain& chain, std::string& out) {
  if (chain.empty()) {
    out += "{ }";
    return;
  }
  out += "{ ";
  print(chain, out);
  out += " }";
}

void print(const Action& a, std::string& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Action::Invoke>) {
          print(*x.call, out);
        } else if constexpr (std::is_same_v<T, Action::Assign>) {
          out += '$' + x.var + " = ";
          print(*x.value, out);
        } else if constexpr (std::is_same_v<T, Action::If>) {
          out += "if ";
          print(*x.cond, out);
          out += ' ';
          print_braced(x.then_chain, out);
          if (!x.else_chain.empty()) {
            out += " else ";
            print_braced(x.else_chain, out);
          }
        } else if constexpr (std::is_same_v<T, Action::Foreach>) {
          out += "foreach $" + x.var + " in ";
          print(*x.list, out);
          out += ' ';
          print_braced(x.body, out);
        } else if constexpr (std::is_same_v<T, Action::Allow>) {
          out += "allow()";
        } else {
          out += "deny(" + quote(x.reason) + ")";
        }
      },
      a.node);
}

void print(const Chain& chain, std::string& out) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) out += "; ";
    print(chain[i], out);
  }
}

bool is_literal_true(const ExprPtr& e) {
  if (!e) return true;
  const auto* lit = std::get_if<Expr::Literal>(&e->node);
  return lit && lit->value.is_bool() && lit->value.as_bool();
}

}  // namespace

std::string pretty_print(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

std::string pretty_print(const RuleAst& r) {
  std::string out = "rule " + r.name;
  if (r.priority != 0) out += " priority " + std::to_string(r.priority);
  out += " on " + r.pep;
  if (!is_literal_true(r.condition)) {
    out += " when ";
    print(*r.condition, out);
  }
  out += " do ";
  print(r.actions, out);
  return out;
}

std::string pretty_print(const std::vector<RuleAst>& rules) {
  std::string out;
  for (const auto& r : rules) out += pretty_print(r) + "\n";
  return out;
}

std::string pretty_print(const ProcedureAst& p) {
  std::string out = "procedure " + p.name + "(";
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    if (i) out += ", ";
    out += '$' + p.params[i];
  }
  out += ") ";
  print_braced(p.body, out);
  return out;
}

}  // namespace pg::dsl
