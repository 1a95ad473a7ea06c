// SPDX-License-Identifier: Apache-2.0
#include "adomp/tangent.hpp"

#include "ad_common.hpp"
#include "adomp/error.hpp"
#include "adomp/frontend.hpp"

namespace adomp {

namespace {

using namespace detail;
using namespace build;

// a + b, folding a negated b into a subtraction.
Expr plus(Expr a, Expr b) {
  if (const auto* u = std::get_if<Unary>(&b.node); u && u->op == UnaryOp::Neg) return sub(std::move(a), *u->operand);
  return add(std::move(a), std::move(b));
}

Expr minus(Expr a, Expr b) {
  if (const auto* u = std::get_if<Unary>(&b.node); u && u->op == UnaryOp::Neg) return add(std::move(a), *u->operand);
  return sub(std::move(a), std::move(b));
}

class TangentBuilder {
 public:
  TangentBuilder(const Program& program, std::set<std::string> active)
      : program_(program), active_(std::move(active)) {}

  std::optional<Expr> expr(const Expr& e) const {
    if (is_integer_expr(e, program_)) return std::nullopt;
    return std::visit(
        Overloaded{
            [&](const RealLit&) -> std::optional<Expr> { return std::nullopt; },
            [&](const IntLit&) -> std::optional<Expr> { return std::nullopt; },
            [&](const Ref& r) -> std::optional<Expr> {
              if (!active_.count(r.name)) return std::nullopt;
              return ref(renamed(r, "d"));
            },
            [&](const Unary& u) -> std::optional<Expr> {
              auto t = expr(*u.operand);
              if (!t) return std::nullopt;
              return neg(*t);
            },
            [&](const Binary& b) -> std::optional<Expr> { return binary_rule(b); },
            [&](const IntrinsicCall& c) -> std::optional<Expr> {
              const Expr& a = c.args.at(0);
              auto t = expr(a);
              if (!t) return std::nullopt;
              switch (c.fn) {
                case Intrinsic::Sin: return mul(*t, call(Intrinsic::Cos, {a}));
                case Intrinsic::Cos: return neg(mul(*t, call(Intrinsic::Sin, {a})));
                case Intrinsic::Exp: return mul(*t, call(Intrinsic::Exp, {a}));
                case Intrinsic::Sqrt: return div(*t, mul(real(2.0), call(Intrinsic::Sqrt, {a})));
                default: throw TransformError(to_string(c.fn) + " of an active value is not differentiable");
              }
            },
        },
        e.node);
  }

  std::vector<Stmt> body(const std::vector<Stmt>& in) const {
    std::vector<Stmt> out;
    for (const auto& s : in) stmt(s, out);
    return out;
  }

 private:
  std::optional<Expr> binary_rule(const Binary& b) const {
    const Expr& x = *b.lhs;
    const Expr& y = *b.rhs;
    auto tx = expr(x);
    auto ty = expr(y);
    if (!tx && !ty) return std::nullopt;
    switch (b.op) {
      case BinaryOp::Add:
        if (tx && ty) return plus(*tx, *ty);
        return tx ? *tx : *ty;
      case BinaryOp::Sub:
        if (tx && ty) return minus(*tx, *ty);
        return tx ? *tx : neg(*ty);
      case BinaryOp::Mul:
        if (tx && ty) return plus(mul(*tx, y), mul(x, *ty));
        return tx ? mul(*tx, y) : mul(x, *ty);
      case BinaryOp::Div:
        if (!ty) return div(*tx, y);
        if (!tx) return neg(div(mul(div(x, y), *ty), y));
        return div(sub(*tx, mul(div(x, y), *ty)), y);
      default:
        return std::nullopt;
    }
  }

  void stmt(const Stmt& s, std::vector<Stmt>& out) const {
    std::visit(Overloaded{
                   [&](const Assign& a) {
                     if (active_.count(a.lhs.name)) {
                       Stmt d = assign(renamed(a.lhs, "d"), expr(a.rhs).value_or(real(0.0)));
                       std::get<Assign>(d.node).loc = a.loc;
                       out.push_back(std::move(d));
                     }
                     out.push_back(s);
                   },
                   [&](const Increment& a) {
                     if (active_.count(a.lhs.name)) {
                       if (auto t = expr(a.rhs)) {
                         Stmt d = increment(renamed(a.lhs, "d"), *t, a.atomic);
                         std::get<Increment>(d.node).loc = a.loc;
                         out.push_back(std::move(d));
                       }
                     }
                     out.push_back(s);
                   },
                   [&](const SeqLoop& l) {
                     SeqLoop copy = l;
                     copy.body = body(l.body);
                     out.push_back(Stmt{std::move(copy)});
                   },
                   [&](const ParallelLoop& l) {
                     ParallelLoop copy = l;
                     copy.body = body(l.body);
                     copy.clauses.ad_override.clear();
                     for (const auto& [v, entry] : l.clauses.scoping)
                       if (active_.count(v)) copy.clauses.scoping[v + "d"] = entry;
                     out.push_back(Stmt{std::move(copy)});
                   },
                   [&](const If& i) {
                     If copy = i;
                     copy.then_body = body(i.then_body);
                     copy.else_body = body(i.else_body);
                     out.push_back(Stmt{std::move(copy)});
                   },
                   [&](const auto&) { out.push_back(s); },
               },
               s.node);
  }

  const Program& program_;
  std::set<std::string> active_;
};

}  // namespace

std::optional<Expr> tangent_expr(const Expr& e, const Program& program) {
  return TangentBuilder(program, active_variables(program)).expr(e);
}

Program differentiate_tangent(const Program& program) {
  std::set<std::string> active = active_variables(program);
  check_derivative_names(program, active, "d");
  check_transformable(program, active);

  Program out;
  out.name = program.name + "_d";
  for (const auto& p : program.params) {
    out.params.push_back(p);
    if (active.count(p)) out.params.push_back(p + "d");
  }
  for (const auto& d : program.decls) {
    out.decls.push_back(d);
    if (active.count(d.name)) {
      VarDecl dd = d;
      dd.name += "d";
      dd.active = false;
      out.decls.push_back(std::move(dd));
    }
  }
  out.body = TangentBuilder(program, active).body(program.body);
  validate(out);
  return out;
}

}  // namespace adomp
