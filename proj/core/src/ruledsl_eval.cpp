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
#include <limits>

#include "pg/error.hpp"
#include "pg/ruledsl.hpp"
#include "pg/util.hpp"

namespace pg::dsl {

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void mismatch(std::string_view want, const Value& got) {
  throw Error(Errc::TypeMismatch,
              "expected " + std::string(want) + ", got " + std::string(got.type_name()));
}

}  // namespace

bool Value::as_bool() const {
  if (!is_bool()) mismatch("bool", *this);
  return std::get<bool>(data_);
}

std::int64_t Value::as_int() const {
  if (!is_int()) mismatch("int", *this);
  return std::get<std::int64_t>(data_);
}

const std::string& Value::as_string() const {
  if (!is_string()) mismatch("string", *this);
  return std::get<std::string>(data_);
}

const Value::List& Value::as_list() const {
  if (!is_list()) mismatch("list", *this);
  return std::get<List>(data_);
}

std::string_view Value::type_name() const noexcept {
  if (is_bool()) return "bool";
  if (is_int()) return "int";
  if (is_string()) return "string";
  return "list";
}

std::string Value::to_display() const {
  if (is_bool()) return as_bool() ? "true" : "false";
  if (is_int()) return std::to_string(as_int());
  if (is_string()) return as_string();
  std::string out = "[";
  for (std::size_t i = 0; i < as_list().size(); ++i) out += (i ? "," : "") + as_list()[i];
  return out + "]";
}

void to_json(nlohmann::json& j, const Value& v) {
  if (v.is_bool()) j = v.as_bool();
  else if (v.is_int()) j = v.as_int();
  else if (v.is_string()) j = v.as_string();
  else j = v.as_list();
}

void from_json(const nlohmann::json& j, Value& v) {
  if (j.is_boolean()) v = Value(j.get<bool>());
  else if (j.is_number_integer()) v = Value(j.get<std::int64_t>());
  else if (j.is_string()) v = Value(j.get<std::string>());
  else if (j.is_array()) {
    Value::List items;
    for (const auto& e : j) {
      if (!e.is_string()) throw Error(Errc::InvalidArgument, "list values must hold strings");
      items.push_back(e.get<std::string>());
    }
    v = Value(std::move(items));
  } else {
    throw Error(Errc::InvalidArgument, "unsupported value " + j.dump());
  }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

class Evaluator {
 public:
  Evaluator(const Bindings& vars, const CallHandler* calls) : vars_(vars), calls_(calls) {}

  Value eval(const Expr& e) {
    return std::visit([&](const auto& x) { return eval_node(x); }, e.node);
  }

 private:
  Value eval_node(const Expr::Literal& x) { return x.value; }

  Value eval_node(const Expr::Var& x) {
    auto it = vars_.find(x.name);
    if (it == vars_.end()) throw Error(Errc::UnboundVariable, "unbound variable $" + x.name);
    return it->second;
  }

  Value eval_node(const Expr::Unary& x) {
    Value v = eval(*x.operand);
    if (x.op == UnOp::lnot) return !v.as_bool();
    std::int64_t i = v.as_int();
    if (i == std::numeric_limits<std::int64_t>::min())
      throw Error(Errc::ArithmeticOverflow, "integer overflow in negation");
    return -i;
  }

  Value eval_node(const Expr::Call& x) {
    std::vector<Value> args;
    args.reserve(x.args.size());
    for (const auto& a : x.args) args.push_back(eval(*a));
    if (!calls_ || !*calls_)
      throw Error(Errc::UnknownMicroService, "no micro-services available to call " + x.name);
    return (*calls_)(x.name, std::move(args));
  }

  Value eval_node(const Expr::List& x) {
    Value::List items;
    for (const auto& a : x.items) items.push_back(eval(*a).as_string());
    return items;
  }

  Value eval_node(const Expr::Binary& x) {
    if (x.op == BinOp::land) {
      if (!eval(*x.lhs).as_bool()) return false;
      return eval(*x.rhs).as_bool();
    }
    if (x.op == BinOp::lor) {
      if (eval(*x.lhs).as_bool()) return true;
      return eval(*x.rhs).as_bool();
    }
    Value a = eval(*x.lhs);
    Value b = eval(*x.rhs);
    switch (x.op) {
      case BinOp::eq:
      case BinOp::ne: {
        if (a.type_name() != b.type_name())
          throw Error(Errc::TypeMismatch, "cannot compare " + std::string(a.type_name()) + " with " +
                                              std::string(b.type_name()));
        return (a == b) == (x.op == BinOp::eq);
      }
      case BinOp::lt: case BinOp::le: case BinOp::gt: case BinOp::ge: return order(x.op, a, b);
      case BinOp::matches: return glob_match(b.as_string(), a.as_string());
      case BinOp::add:
        if (a.is_string() && b.is_string()) return a.as_string() + b.as_string();
        return arith(x.op, a.as_int(), b.as_int());
      case BinOp::sub: case BinOp::mul: case BinOp::div: return arith(x.op, a.as_int(), b.as_int());
      default: break;
    }
    throw Error(Errc::Internal, "unhandled operator");
  }

  static Value order(BinOp op, const Value& a, const Value& b) {
    int c;
    if (a.is_int() && b.is_int()) {
      c = a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int() ? 1 : 0;
    } else if (a.is_string() && b.is_string()) {
      int r = a.as_string().compare(b.as_string());
      c = r < 0 ? -1 : r > 0 ? 1 : 0;
    } else {
      throw Error(Errc::TypeMismatch, "cannot order " + std::string(a.type_name()) + " and " +
                                          std::string(b.type_name()));
    }
    switch (op) {
      case BinOp::lt: return c < 0;
      case BinOp::le: return c <= 0;
      case BinOp::gt: return c > 0;
      default: return c >= 0;
    }
  }

  static Value arith(BinOp op, std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    bool overflow = false;
    switch (op) {
      case BinOp::add: overflow = __builtin_add_overflow(a, b, &r); break;
      case BinOp::sub: overflow = __builtin_sub_overflow(a, b, &r); break;
      case BinOp::mul: overflow = __builtin_mul_overflow(a, b, &r); break;
      case BinOp::div:
        if (b == 0) throw Error(Errc::DivisionByZero, "division by zero");
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) overflow = true;
        else r = a / b;
        break;
      default: break;
    }
    if (overflow) throw Error(Errc::ArithmeticOverflow, "integer overflow");
    return r;
  }

  const Bindings& vars_;
  const CallHandler* calls_;
};

}  // namespace

Value eval_expr(const Expr& e, const Bindings& vars, const CallHandler* calls) {
  return Evaluator(vars, calls).eval(e);
}

}  // namespace pg::dsl
