// SPDX-License-Identifier: Apache-2.0
#include "ad_common.hpp"

#include <algorithm>

#include "adomp/error.hpp"
#include "adomp/frontend.hpp"

namespace adomp::detail {

namespace {

void walk_assignments(const std::vector<Stmt>& body, const std::set<std::string>& active, std::set<std::string>& out,
                      const Program& program) {
  auto consider = [&](const Ref& lhs, const Expr& rhs) {
    const VarDecl* d = program.find(lhs.name);
    if (!d || d->type != BaseType::Real || d->is_param()) return;
    for (const auto& v : active) {
      if (references(rhs, v)) {
        out.insert(lhs.name);
        return;
      }
    }
  };
  for (const auto& s : body) {
    std::visit(Overloaded{
                   [&](const Assign& a) { consider(a.lhs, a.rhs); },
                   [&](const Increment& a) { consider(a.lhs, a.rhs); },
                   [&](const SeqLoop& l) { walk_assignments(l.body, active, out, program); },
                   [&](const ParallelLoop& l) { walk_assignments(l.body, active, out, program); },
                   [&](const ParallelRegion& r) { walk_assignments(r.body, active, out, program); },
                   [&](const If& i) {
                     walk_assignments(i.then_body, active, out, program);
                     walk_assignments(i.else_body, active, out, program);
                   },
                   [&](const CallStmt&) {},
               },
               s.node);
  }
}

void check_body(const std::vector<Stmt>& body, const std::set<std::string>& active) {
  for (const auto& s : body) {
    std::visit(Overloaded{
                   [&](const Increment& a) {
                     if (a.atomic && a.lhs.is_array_cell() && active.count(a.lhs.name))
                       throw TransformError("line " + std::to_string(a.loc.line) +
                                            ": atomic increment of array cell '" + a.lhs.name +
                                            "' cannot be differentiated; atomic updates must target scalars");
                   },
                   [&](const SeqLoop& l) { check_body(l.body, active); },
                   [&](const ParallelLoop& l) {
                     if (l.in_region) throw TransformError("worksharing loops inside explicit regions are not differentiable input");
                     check_body(l.body, active);
                   },
                   [&](const ParallelRegion& r) {
                     throw TransformError("line " + std::to_string(r.loc.line) +
                                          ": explicit parallel regions are not differentiable input");
                   },
                   [&](const If& i) {
                     check_body(i.then_body, active);
                     check_body(i.else_body, active);
                   },
                   [&](const CallStmt& c) {
                     throw TransformError("line " + std::to_string(c.loc.line) + ": runtime call '" + c.name +
                                          "' is not differentiable input");
                   },
                   [&](const Assign&) {},
               },
               s.node);
  }
}

}  // namespace

std::set<std::string> active_variables(const Program& program) {
  std::set<std::string> active;
  for (const auto& d : program.decls)
    if (d.active && d.type == BaseType::Real) active.insert(d.name);
  for (;;) {
    std::set<std::string> next = active;
    walk_assignments(program.body, active, next, program);
    if (next == active) return active;
    active = std::move(next);
  }
}

void check_derivative_names(const Program& program, const std::set<std::string>& active, const std::string& suffix) {
  for (const auto& d : program.decls) {
    if (d.name.rfind("ad_", 0) == 0)
      throw SemanticError(d.loc.line, "name '" + d.name + "' is reserved for generated variables");
    if (active.count(d.name) && program.find(d.name + suffix))
      throw SemanticError(d.loc.line, "derivative name '" + d.name + suffix + "' collides with a declared variable");
  }
}

void check_transformable(const Program& program, const std::set<std::string>& active) {
  check_body(program.body, active);
}

Ref renamed(const Ref& r, const std::string& suffix) {
  Ref out = r;
  out.name += suffix;
  return out;
}

bool is_integer_expr(const Expr& e, const Program& program) { return type_of(e, program) == ValueType::Integer; }

Expr trip_count_expr(const Expr& start, const Expr& end, const Expr& stride) {
  using namespace build;
  Expr span = add(sub(end, start), stride);
  const auto* lit = std::get_if<IntLit>(&stride.node);
  if (!(lit && lit->value == 1)) span = div(span, stride);
  return call(Intrinsic::Max, {integer(0), span});
}

Expr last_iterate_expr(const Expr& start, const Expr& end, const Expr& stride) {
  using namespace build;
  const auto* lit = std::get_if<IntLit>(&stride.node);
  if (lit && lit->value == 1) {
    const auto* s = std::get_if<IntLit>(&start.node);
    return call(Intrinsic::Max, {end, s ? integer(s->value - 1) : sub(start, integer(1))});
  }
  return add(start, mul(sub(trip_count_expr(start, end, stride), integer(1)), stride));
}

std::optional<std::int64_t> eval_int_const(const Expr& e, const std::map<std::string, std::int64_t>& hints) {
  return std::visit(
      Overloaded{
          [&](const IntLit& l) -> std::optional<std::int64_t> { return l.value; },
          [&](const Ref& r) -> std::optional<std::int64_t> {
            auto it = hints.find(r.name);
            if (r.is_array_cell() || it == hints.end()) return std::nullopt;
            return it->second;
          },
          [&](const Unary& u) -> std::optional<std::int64_t> {
            auto v = eval_int_const(*u.operand, hints);
            if (!v || u.op != UnaryOp::Neg) return std::nullopt;
            return -*v;
          },
          [&](const Binary& b) -> std::optional<std::int64_t> {
            auto l = eval_int_const(*b.lhs, hints);
            auto r = eval_int_const(*b.rhs, hints);
            if (!l || !r) return std::nullopt;
            switch (b.op) {
              case BinaryOp::Add: return *l + *r;
              case BinaryOp::Sub: return *l - *r;
              case BinaryOp::Mul: return *l * *r;
              case BinaryOp::Div:
                if (*r == 0) return std::nullopt;
                return *l / *r;
              default: return std::nullopt;
            }
          },
          [&](const IntrinsicCall& c) -> std::optional<std::int64_t> {
            if (c.args.size() != 2 || (c.fn != Intrinsic::Max && c.fn != Intrinsic::Min)) return std::nullopt;
            auto l = eval_int_const(c.args[0], hints);
            auto r = eval_int_const(c.args[1], hints);
            if (!l || !r) return std::nullopt;
            return c.fn == Intrinsic::Max ? std::max(*l, *r) : std::min(*l, *r);
          },
          [&](const RealLit&) -> std::optional<std::int64_t> { return std::nullopt; },
      },
      e.node);
}

Expr negated(const Expr& e) {
  if (const auto* lit = std::get_if<IntLit>(&e.node)) return build::integer(-lit->value);
  if (const auto* u = std::get_if<Unary>(&e.node); u && u->op == UnaryOp::Neg) return *u->operand;
  return build::neg(e);
}

}  // namespace adomp::detail
