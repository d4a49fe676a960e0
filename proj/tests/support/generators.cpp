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
#include "generators.hpp"

#include <algorithm>

namespace pgtest {

namespace dsl = pg::dsl;

std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// DSL ------------------------------------------------------------------------

namespace {

const std::vector<std::string> kSystemVars = {"user.name", "user.role", "op",       "obj.path",
                                              "obj.owner", "coll.path", "resc.name"};
const std::vector<std::string> kLocalNames = {"a", "b", "n", "x", "tmp", "count", "path_2", "r"};
const std::vector<std::string> kCallNames = {"set_avu", "checksum", "audit_msg", "touch",
                                             "len",     "str",      "my_ms_1",   "f"};
const std::vector<std::string> kPeps = {"pep.data.put.pre",    "pep.data.remove.pre",
                                        "pep.data.get.post",   "pep.meta.add.pre",
                                        "pep.stream.ingest.pre", "pep.workflow.run.post"};

dsl::Value random_literal(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return dsl::Value(random_dsl_string(rng, 12));
    case 1: return dsl::Value(static_cast<std::int64_t>(uniform(rng, 0, 1000)));
    case 2: return dsl::Value(static_cast<std::int64_t>(uniform(rng, 0, UINT64_MAX >> 1)));
    default: return dsl::Value(coin(rng));
  }
}

dsl::BinOp random_binop(Rng& rng) {
  static const dsl::BinOp ops[] = {dsl::BinOp::eq,  dsl::BinOp::ne,  dsl::BinOp::lt,
                                   dsl::BinOp::le,  dsl::BinOp::gt,  dsl::BinOp::ge,
                                   dsl::BinOp::matches, dsl::BinOp::add, dsl::BinOp::sub,
                                   dsl::BinOp::mul, dsl::BinOp::div, dsl::BinOp::land,
                                   dsl::BinOp::lor};
  return ops[uniform(rng, 0, std::size(ops) - 1)];
}

dsl::Chain random_chain(Rng& rng, int depth, std::vector<std::string>& vars, bool track);

dsl::Action random_action(Rng& rng, int depth, std::vector<std::string>& vars, bool track) {
  std::uint64_t kind = depth <= 0 ? uniform(rng, 0, 1) : uniform(rng, 0, 5);
  if (kind == 0) {
    std::vector<dsl::ExprPtr> args;
    for (std::uint64_t i = 0, n = uniform(rng, 0, 3); i < n; ++i)
      args.push_back(random_expr(rng, std::max(depth - 1, 0), vars));
    return dsl::Action{dsl::Action::Invoke{dsl::make_call(pick(rng, kCallNames), std::move(args))}};
  }
  if (kind == 1) {
    dsl::ExprPtr value = random_expr(rng, std::max(depth - 1, 0), vars);
    std::string var = pick(rng, kLocalNames);
    if (track && std::find(vars.begin(), vars.end(), var) == vars.end()) vars.push_back(var);
    return dsl::Action{dsl::Action::Assign{var, std::move(value)}};
  }
  if (kind == 2) {
    dsl::ExprPtr cond = random_expr(rng, depth - 1, vars);
    dsl::Chain then_chain = coin(rng, 0.2) ? dsl::Chain{} : random_chain(rng, depth - 1, vars, track);
    dsl::Chain else_chain;
    if (coin(rng)) else_chain = random_chain(rng, depth - 1, vars, track);
    return dsl::Action{dsl::Action::If{std::move(cond), std::move(then_chain), std::move(else_chain)}};
  }
  if (kind == 3) {
    dsl::ExprPtr list = random_expr(rng, depth - 1, vars);
    std::string var = pick(rng, kLocalNames);
    if (track && std::find(vars.begin(), vars.end(), var) == vars.end()) vars.push_back(var);
    return dsl::Action{dsl::Action::Foreach{var, std::move(list), random_chain(rng, depth - 1, vars, track)}};
  }
  if (kind == 4) return dsl::Action{dsl::Action::Allow{}};
  return dsl::Action{dsl::Action::Deny{random_dsl_string(rng, 16)}};
}

dsl::Chain random_chain(Rng& rng, int depth, std::vector<std::string>& vars, bool track) {
  dsl::Chain out;
  for (std::uint64_t i = 0, n = uniform(rng, 1, 3); i < n; ++i)
    out.push_back(random_action(rng, depth, vars, track));
  return out;
}

}  // namespace

std::string random_dsl_string(Rng& rng, std::size_t max_len) {
  std::string s;
  for (std::uint64_t i = 0, n = uniform(rng, 0, max_len); i < n; ++i) {
    std::uint64_t r = uniform(rng, 0, 99);
    if (r < 4) s += '"';
    else if (r < 8) s += '\\';
    else if (r < 10) s += '\n';
    else s += static_cast<char>(uniform(rng, 0x20, 0x7e));
  }
  return s;
}

dsl::ExprPtr random_expr(Rng& rng, int depth, const std::vector<std::string>& vars) {
  std::uint64_t kind = depth <= 0 ? uniform(rng, 0, 1) : uniform(rng, 0, 6);
  switch (kind) {
    case 0: return dsl::make_literal(random_literal(rng));
    case 1:
      if (!vars.empty() && coin(rng, 0.6)) return dsl::make_var(pick(rng, vars));
      return dsl::make_literal(random_literal(rng));
    case 2: {
      dsl::ExprPtr operand = random_expr(rng, depth - 1, vars);
      // A negated integer literal is folded by the parser; keep such trees canonical.
      if (const auto* lit = std::get_if<dsl::Expr::Literal>(&operand->node); lit && lit->value.is_int())
        return dsl::make_unary(dsl::UnOp::lnot, operand);
      return dsl::make_unary(coin(rng) ? dsl::UnOp::lnot : dsl::UnOp::neg, operand);
    }
    case 3: {
      std::vector<dsl::ExprPtr> args;
      for (std::uint64_t i = 0, n = uniform(rng, 0, 3); i < n; ++i)
        args.push_back(random_expr(rng, depth - 1, vars));
      return dsl::make_call(pick(rng, kCallNames), std::move(args));
    }
    case 4: {
      std::vector<dsl::ExprPtr> items;
      for (std::uint64_t i = 0, n = uniform(rng, 0, 3); i < n; ++i)
        items.push_back(random_expr(rng, depth - 1, vars));
      return dsl::make_list(std::move(items));
    }
    default:
      return dsl::make_binary(random_binop(rng), random_expr(rng, depth - 1, vars),
                              random_expr(rng, depth - 1, vars));
  }
}

dsl::RuleAst random_rule(Rng& rng, const std::string& name) {
  dsl::RuleAst r;
  r.name = name;
  r.priority = coin(rng, 0.3) ? static_cast<std::int64_t>(uniform(rng, 0, 200)) - 100 : 0;
  r.pep = pick(rng, kPeps);
  std::vector<std::string> vars = kSystemVars;
  for (const auto& l : kLocalNames) vars.push_back(l);
  r.condition = coin(rng, 0.2) ? dsl::make_literal(true) : random_expr(rng, 3, vars);
  r.actions = random_chain(rng, 3, vars, false);
  return r;
}

dsl::ProcedureAst random_procedure(Rng& rng) {
  dsl::ProcedureAst p;
  p.name = "proc_" + std::to_string(uniform(rng, 0, 999));
  std::vector<std::string> vars = kSystemVars;
  for (std::uint64_t i = 0, n = uniform(rng, 0, 3); i < n; ++i) {
    std::string param = "p" + std::to_string(i);
    p.params.push_back(param);
    vars.push_back(param);
  }
  p.body = coin(rng, 0.1) ? dsl::Chain{} : random_chain(rng, 3, vars, true);
  return p;
}

std::string fuzz_input(Rng& rng, const std::vector<std::string>& corpus, std::size_t max_len) {
  static const std::vector<std::string> kTokens = {
      "rule", "on", "do", "when", "priority", "if", "else", "foreach", "in", "allow()", "deny(",
      "procedure", "(", ")", "{", "}", "[", "]", ";", ",", "$", "$x", "\"", "\\", "==", "!=",
      "&&", "||", "!", "-", "*", "/", "matches", "9223372036854775808", "-9223372036854775808",
      "#", "\n", "pep.data.put.pre", "\xff", "\0"};
  std::string s;
  switch (uniform(rng, 0, 3)) {
    case 0:  // raw bytes
      for (std::uint64_t i = 0, n = uniform(rng, 0, 256); i < n; ++i)
        s += static_cast<char>(uniform(rng, 0, 255));
      break;
    case 1:  // token soup
      for (std::uint64_t i = 0, n = uniform(rng, 0, 80); i < n; ++i) {
        s += pick(rng, kTokens);
        if (coin(rng)) s += ' ';
      }
      break;
    case 2:  // deep nesting
      s = std::string(uniform(rng, 0, 5000), pick(rng, std::vector<char>{'(', '[', '!', '-', '{'}));
      break;
    default: {  // mutated corpus text
      s = corpus.empty() ? std::string() : pick(rng, corpus);
      for (std::uint64_t i = 0, n = uniform(rng, 1, 8); i < n && !s.empty(); ++i) {
        std::size_t at = uniform(rng, 0, s.size() - 1);
        switch (uniform(rng, 0, 3)) {
          case 0: s.erase(at, uniform(rng, 1, 16)); break;
          case 1: s.insert(at, pick(rng, kTokens)); break;
          case 2: s[at] = static_cast<char>(uniform(rng, 0, 255)); break;
          default: s.insert(at, s.substr(uniform(rng, 0, s.size() - 1), uniform(rng, 1, 32))); break;
        }
      }
    }
  }
  if (s.size() > max_len) s.resize(max_len);
  return s;
}

// Metadata ---------------------------------------------------------------------

namespace {
const std::vector<std::string> kAttrNames = {"instrument", "site", "owner", "format", "run",
                                             "quality", "units", "project"};
const std::vector<std::string> kAttrValues = {"antenna-42", "antenna-7", "antenna-", "alpha",
                                              "beta",       "gamma",     "42",       "a*b",
                                              "x?y",        "",          "value with space"};
const std::vector<std::string> kAttrComments = {"", "array id", "calibrated", "raw", "v2"};
}  // namespace

std::vector<AvuFact> random_avus(Rng& rng, std::size_t count, std::size_t paths) {
  std::vector<AvuFact> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AvuFact f;
    f.path = "/home/p" + std::to_string(uniform(rng, 0, paths - 1));
    f.triple.attr_name = pick(rng, kAttrNames);
    f.triple.attr_value = coin(rng, 0.8) ? pick(rng, kAttrValues)
                                         : "v" + std::to_string(uniform(rng, 0, 500));
    f.triple.attr_comment = pick(rng, kAttrComments);
    out.push_back(std::move(f));
  }
  return out;
}

namespace {
std::string glob_from(Rng& rng, const std::string& base) {
  std::string g;
  for (char c : base) {
    std::uint64_t r = uniform(rng, 0, 9);
    if (r == 0) g += '?';
    else if (r == 1) g += '*';
    else if (r == 2) continue;
    else g += c;
  }
  if (coin(rng, 0.3)) g += '*';
  if (coin(rng, 0.2)) g.insert(0, "*");
  return g;
}

PredClause random_clause(Rng& rng, pg::AvuField field, const std::vector<AvuFact>& facts) {
  PredClause c{field, pg::AvuOp::eq, {}};
  const AvuFact& f = pick(rng, facts);
  std::string base = field == pg::AvuField::name    ? f.triple.attr_name
                     : field == pg::AvuField::value ? f.triple.attr_value
                                                    : f.triple.attr_comment;
  if (coin(rng, 0.1)) base = "nothing-" + std::to_string(uniform(rng, 0, 9));
  std::uint64_t op = uniform(rng, 0, 9);
  if (op < 5) {
    c.op = pg::AvuOp::eq;
    c.literal = base;
  } else if (op < 7) {
    c.op = pg::AvuOp::ne;
    c.literal = base;
  } else {
    c.op = pg::AvuOp::like;
    c.literal = glob_from(rng, base);
  }
  return c;
}
}  // namespace

PredSpec random_predicate(Rng& rng, const std::vector<AvuFact>& facts) {
  PredSpec spec;
  for (std::uint64_t g = 0, n = uniform(rng, 1, 3); g < n; ++g) {
    std::vector<PredClause> group;
    bool lead_name = g > 0 || coin(rng, 0.8);
    if (lead_name) group.push_back(random_clause(rng, pg::AvuField::name, facts));
    if (!lead_name || coin(rng, 0.6)) group.push_back(random_clause(rng, pg::AvuField::value, facts));
    if (coin(rng, 0.2)) group.push_back(random_clause(rng, pg::AvuField::comment, facts));
    spec.push_back(std::move(group));
  }
  return spec;
}

std::string predicate_text(const PredSpec& spec) {
  std::string out;
  for (const auto& group : spec) {
    for (const auto& c : group) {
      if (!out.empty()) out += " and ";
      out += c.field == pg::AvuField::name ? "name" : c.field == pg::AvuField::value ? "value" : "comment";
      out += c.op == pg::AvuOp::eq ? " = " : c.op == pg::AvuOp::ne ? " != " : " like ";
      out += '"';
      for (char ch : c.literal) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
      }
      out += '"';
    }
  }
  return out;
}

// Streams ----------------------------------------------------------------------

std::vector<std::vector<pg::StreamRecord>> random_segments(Rng& rng, std::size_t segments,
                                                           std::size_t max_records,
                                                           std::uint64_t t_span) {
  std::vector<std::vector<pg::StreamRecord>> out;
  std::size_t budget = max_records;
  for (std::size_t s = 0; s < segments; ++s) {
    std::size_t remaining_segments = segments - s;
    std::size_t cap = std::max<std::size_t>(1, budget - (remaining_segments - 1));
    std::size_t n = uniform(rng, 1, std::max<std::size_t>(1, std::min<std::size_t>(cap, 2 * max_records / segments)));
    budget -= n;
    std::uint64_t t = uniform(rng, 0, t_span);
    std::vector<pg::StreamRecord> seg;
    for (std::size_t i = 0; i < n; ++i) {
      if (coin(rng, 0.8)) t += uniform(rng, 0, t_span / 50 + 1);  // repeats allowed
      pg::StreamRecord r;
      r.t = t;
      for (std::uint64_t k = 0, len = uniform(rng, 0, 24); k < len; ++k)
        r.payload += static_cast<char>(uniform(rng, 0, 255));
      seg.push_back(std::move(r));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace pgtest
