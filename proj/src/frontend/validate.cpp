// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "adomp/frontend.hpp"

namespace adomp {

namespace {

bool numeric(ValueType t) { return t != ValueType::Logical; }

ValueType check_expr(const Expr& e, const Program& p, int line);

ValueType check_ref(const Ref& r, const Program& p, int line) {
  const VarDecl* d = p.find(r.name);
  if (!d) throw SemanticError(line, "undeclared variable '" + r.name + "'");
  if (r.index && !d->is_array()) throw SemanticError(line, "scalar '" + r.name + "' used with an index");
  if (!r.index && d->is_array()) throw SemanticError(line, "array '" + r.name + "' used without an index");
  if (r.index && check_expr(*r.index, p, line) != ValueType::Integer)
    throw SemanticError(line, "index of '" + r.name + "' is not an integer expression");
  return d->type == BaseType::Real ? ValueType::Real : ValueType::Integer;
}

ValueType check_expr(const Expr& e, const Program& p, int line) {
  return std::visit(
      [&](const auto& n) -> ValueType {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RealLit>) {
          return ValueType::Real;
        } else if constexpr (std::is_same_v<T, IntLit>) {
          return ValueType::Integer;
        } else if constexpr (std::is_same_v<T, Ref>) {
          return check_ref(n, p, line);
        } else if constexpr (std::is_same_v<T, Unary>) {
          ValueType t = check_expr(*n.operand, p, line);
          if (n.op == UnaryOp::Not) {
            if (t != ValueType::Logical) throw SemanticError(line, "operand of .not. is not logical");
            return t;
          }
          if (!numeric(t)) throw SemanticError(line, "negation of a logical value");
          return t;
        } else if constexpr (std::is_same_v<T, Binary>) {
          ValueType a = check_expr(*n.lhs, p, line);
          ValueType b = check_expr(*n.rhs, p, line);
          switch (n.op) {
            case BinaryOp::And:
            case BinaryOp::Or:
              if (a != ValueType::Logical || b != ValueType::Logical)
                throw SemanticError(line, "operands of .and./.or. must be logical");
              return ValueType::Logical;
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
              if (!numeric(a) || !numeric(b)) throw SemanticError(line, "arithmetic on a logical value");
              return (a == ValueType::Real || b == ValueType::Real) ? ValueType::Real : ValueType::Integer;
            default:
              if (!numeric(a) || !numeric(b)) throw SemanticError(line, "comparison of logical values");
              return ValueType::Logical;
          }
        } else if constexpr (std::is_same_v<T, IntrinsicCall>) {
          std::vector<ValueType> ts;
          for (const auto& a : n.args) ts.push_back(check_expr(a, p, line));
          switch (n.fn) {
            case Intrinsic::Mod:
            case Intrinsic::Max:
            case Intrinsic::Min:
              if (ts.size() != 2 || ts[0] != ValueType::Integer || ts[1] != ValueType::Integer)
                throw SemanticError(line, to_string(n.fn) + " takes two integer arguments");
              return ValueType::Integer;
            default:
              if (ts.size() != 1 || !numeric(ts[0]))
                throw SemanticError(line, to_string(n.fn) + " takes one numeric argument");
              return ValueType::Real;
          }
        }
      },
      e.node);
}

struct CallSignature {
  const char* name;
  // 'r' real value, 'i' integer value, 'R' real lvalue, 'I' integer lvalue
  const char* args;
};

constexpr CallSignature kCalls[] = {
    {"push_real8", "r"},          {"pop_real8", "R"},
    {"push_integer4", "i"},       {"pop_integer4", "I"},
    {"push_integer8", "i"},       {"pop_integer8", "I"},
    {"save_top", "I"},            {"restore_top", "i"},
    {"get_static_schedule", "iiiII"},
    {"init_dynamic_schedule", ""}, {"record_dynamic_schedule", "ii"},
    {"finalize_dynamic_schedule", ""}, {"atomic_add", "Rr"},
};

struct LoopFrame {
  std::string counter;
  std::vector<std::string> bound_vars;
};

class Validator {
 public:
  explicit Validator(Program& p) : p_(p) {}

  void run() {
    check_decls();
    check_body(p_.body, Ctx{});
  }

 private:
  struct Ctx {
    bool in_parallel = false;
    bool direct_in_region = false;
  };

  void check_decls() {
    std::set<std::string> seen;
    for (const auto& d : p_.decls) {
      int line = d.loc.line;
      if (!seen.insert(d.name).second) throw SemanticError(line, "variable '" + d.name + "' declared twice");
      if (d.type == BaseType::Integer && d.extent) throw SemanticError(line, "integer arrays are not supported");
      if (d.type == BaseType::Integer && d.active) throw SemanticError(line, "integer variable '" + d.name + "' cannot be active");
      bool in_header = std::find(p_.params.begin(), p_.params.end(), d.name) != p_.params.end();
      if (d.is_param() && !in_header)
        throw SemanticError(line, "'" + d.name + "' has an intent but is not a routine parameter");
      if (!d.is_param() && in_header)
        throw SemanticError(line, "parameter '" + d.name + "' needs an intent");
      if (d.extent) {
        std::vector<const Ref*> refs;
        collect_refs(*d.extent, refs);
        for (const Ref* r : refs) {
          const VarDecl* rd = p_.find(r->name);
          if (!rd || rd->type != BaseType::Integer || rd->is_array() || rd->intent != Intent::In)
            throw SemanticError(line, "extent of '" + d.name + "' must only use integer intent(in) parameters");
        }
        if (check_expr(*d.extent, p_, line) != ValueType::Integer)
          throw SemanticError(line, "extent of '" + d.name + "' is not an integer expression");
        if (auto* lit = std::get_if<IntLit>(&d.extent->node); lit && lit->value <= 0)
          throw SemanticError(line, "extent of '" + d.name + "' must be positive");
      }
    }
    std::set<std::string> params;
    for (const auto& name : p_.params) {
      if (!params.insert(name).second) throw SemanticError(0, "parameter '" + name + "' listed twice");
      if (!p_.find(name)) throw SemanticError(0, "parameter '" + name + "' is not declared");
    }
  }

  void check_write(const Ref& lhs, int line) {
    const VarDecl* d = p_.find(lhs.name);
    if (d && d->intent == Intent::In) throw SemanticError(line, "assignment to intent(in) parameter '" + lhs.name + "'");
    for (const auto& f : loops_) {
      if (f.counter == lhs.name) throw SemanticError(line, "loop counter '" + lhs.name + "' modified inside its loop");
      if (std::find(f.bound_vars.begin(), f.bound_vars.end(), lhs.name) != f.bound_vars.end())
        throw SemanticError(line, "loop bound variable '" + lhs.name + "' modified inside the loop");
    }
  }

  void check_assignment(const Ref& lhs, const Expr& rhs, int line) {
    ValueType lt = check_ref(lhs, p_, line);
    ValueType rt = check_expr(rhs, p_, line);
    if (rt == ValueType::Logical) throw SemanticError(line, "logical value assigned to '" + lhs.name + "'");
    if (lt == ValueType::Integer && rt == ValueType::Real)
      throw SemanticError(line, "real value assigned to integer '" + lhs.name + "'");
    check_write(lhs, line);
  }

  LoopFrame check_loop_header(const std::string& counter, const Expr& start, const Expr& end, const Expr& stride,
                              int line) {
    const VarDecl* d = p_.find(counter);
    if (!d) throw SemanticError(line, "undeclared loop counter '" + counter + "'");
    if (d->type != BaseType::Integer || d->is_array())
      throw SemanticError(line, "loop counter '" + counter + "' must be a scalar integer");
    if (d->intent == Intent::In) throw SemanticError(line, "loop counter '" + counter + "' is an intent(in) parameter");
    for (const auto& f : loops_)
      if (f.counter == counter) throw SemanticError(line, "loop counter '" + counter + "' reused by a nested loop");
    LoopFrame frame{counter, {}};
    for (const Expr* e : {&start, &end, &stride}) {
      if (check_expr(*e, p_, line) != ValueType::Integer)
        throw SemanticError(line, "loop bounds must be integer expressions");
      std::vector<const Ref*> refs;
      collect_refs(*e, refs);
      for (const Ref* r : refs) {
        if (r->name == counter) throw SemanticError(line, "loop bounds must not use the loop's own counter");
        frame.bound_vars.push_back(r->name);
      }
    }
    if (auto* lit = std::get_if<IntLit>(&stride.node); lit && lit->value == 0)
      throw SemanticError(line, "loop stride must not be zero");
    return frame;
  }

  void default_scoping(ClauseSet& cs, const std::vector<Stmt>& body, const std::vector<std::string>& extra_private,
                       const std::vector<std::string>& header_vars) {
    std::vector<std::string> vars;
    collect_vars(body, vars);
    for (const auto& v : header_vars)
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    std::vector<std::string> counters = extra_private;
    collect_counters(body, counters);
    for (const auto& v : vars) {
      if (cs.scoping.count(v)) continue;
      bool is_counter = std::find(counters.begin(), counters.end(), v) != counters.end();
      cs.scoping[v] = ScopeEntry{is_counter ? Scope::Private : Scope::Shared, false};
    }
  }

  static void collect_counters(const std::vector<Stmt>& body, std::vector<std::string>& out) {
    for (const auto& s : body) {
      if (auto* l = std::get_if<SeqLoop>(&s.node)) {
        out.push_back(l->counter);
        collect_counters(l->body, out);
      } else if (auto* pl = std::get_if<ParallelLoop>(&s.node)) {
        out.push_back(pl->counter);
        collect_counters(pl->body, out);
      } else if (auto* i = std::get_if<If>(&s.node)) {
        collect_counters(i->then_body, out);
        collect_counters(i->else_body, out);
      }
    }
  }

  void check_clause_vars(const ClauseSet& cs, int line) {
    for (const auto& [v, e] : cs.scoping) {
      if (!p_.find(v)) throw SemanticError(line, "undeclared variable '" + v + "' in clause");
      if (e.scope == Scope::ReductionSum && p_.find(v)->type != BaseType::Real)
        throw SemanticError(line, "reduction variable '" + v + "' must be real");
    }
  }

  void check_body(std::vector<Stmt>& body, Ctx ctx) {
    for (auto& s : body) check_stmt(s, ctx);
  }

  void check_stmt(Stmt& s, Ctx ctx) {
    Ctx inner = ctx;
    inner.direct_in_region = false;
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            check_assignment(n.lhs, n.rhs, n.loc.line);
          } else if constexpr (std::is_same_v<T, Increment>) {
            check_assignment(n.lhs, n.rhs, n.loc.line);
            if (n.atomic && p_.find(n.lhs.name)->type != BaseType::Real)
              throw SemanticError(n.loc.line, "atomic increment target must be real");
          } else if constexpr (std::is_same_v<T, SeqLoop>) {
            loops_.push_back(check_loop_header(n.counter, n.start, n.end, n.stride, n.loc.line));
            check_body(n.body, inner);
            loops_.pop_back();
          } else if constexpr (std::is_same_v<T, ParallelLoop>) {
            int line = n.loc.line;
            if (n.in_region) {
              if (!ctx.direct_in_region)
                throw SemanticError(line, "'!$omp do' must appear directly inside a parallel region");
              if (!n.clauses.scoping.empty())
                throw SemanticError(line, "only schedule(...) is supported on '!$omp do'");
            } else if (ctx.in_parallel) {
              throw SemanticError(line, "nested parallel constructs are not supported");
            }
            LoopFrame frame = check_loop_header(n.counter, n.start, n.end, n.stride, line);
            if (!n.in_region) {
              check_clause_vars(n.clauses, line);
              if (auto sc = n.clauses.scope_of(n.counter); sc && *sc != Scope::Private)
                throw SemanticError(line, "loop counter '" + n.counter + "' must be private");
              default_scoping(n.clauses, n.body, {n.counter}, frame.bound_vars);
              auto it = n.clauses.scoping.find(n.counter);
              if (it == n.clauses.scoping.end()) n.clauses.scoping[n.counter] = ScopeEntry{Scope::Private, false};
              for (const auto& [v, ov] : n.clauses.ad_override) {
                if (n.clauses.scope_of(v) != Scope::Shared)
                  throw SemanticError(line, "omp_adjoint override on '" + v + "', which is not shared");
              }
            }
            loops_.push_back(std::move(frame));
            Ctx body_ctx{true, false};
            check_body(n.body, body_ctx);
            loops_.pop_back();
          } else if constexpr (std::is_same_v<T, ParallelRegion>) {
            int line = n.loc.line;
            if (ctx.in_parallel) throw SemanticError(line, "nested parallel constructs are not supported");
            check_clause_vars(n.clauses, line);
            for (const auto& [v, e] : n.clauses.scoping)
              if (e.scope == Scope::LastPrivate)
                throw SemanticError(line, "lastprivate is not allowed on a parallel region");
            std::vector<std::string> counters;
            collect_counters(n.body, counters);
            for (const auto& c : counters)
              if (auto sc = n.clauses.scope_of(c); sc && *sc != Scope::Private)
                throw SemanticError(line, "loop counter '" + c + "' must be private in the region");
            default_scoping(n.clauses, n.body, {}, {});
            check_body(n.body, Ctx{true, true});
          } else if constexpr (std::is_same_v<T, If>) {
            if (check_expr(n.cond, p_, n.loc.line) != ValueType::Logical)
              throw SemanticError(n.loc.line, "if condition is not logical");
            check_body(n.then_body, inner);
            check_body(n.else_body, inner);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            check_call(n);
          }
        },
        s.node);
  }

  void check_call(const CallStmt& c) {
    int line = c.loc.line;
    const CallSignature* sig = nullptr;
    for (const auto& k : kCalls)
      if (c.name == k.name) sig = &k;
    if (!sig) throw SemanticError(line, "call to unknown routine '" + c.name + "'");
    std::string_view want = sig->args;
    if (c.args.size() != want.size())
      throw SemanticError(line, c.name + " expects " + std::to_string(want.size()) + " argument(s)");
    for (std::size_t k = 0; k < want.size(); ++k) {
      char w = want[k];
      const Expr& a = c.args[k];
      ValueType t = check_expr(a, p_, line);
      bool is_lvalue = w == 'R' || w == 'I';
      if (is_lvalue) {
        auto* r = std::get_if<Ref>(&a.node);
        if (!r) throw SemanticError(line, "argument " + std::to_string(k + 1) + " of " + c.name + " must be a variable");
        if (w != 'R' || c.name != "atomic_add") check_write(*r, line);
      }
      bool want_real = w == 'r' || w == 'R';
      if (want_real ? t != ValueType::Real && !(w == 'r' && t == ValueType::Integer) : t != ValueType::Integer)
        throw SemanticError(line, "argument " + std::to_string(k + 1) + " of " + c.name + " has the wrong type");
    }
  }

  Program& p_;
  std::vector<LoopFrame> loops_;
};

}  // namespace

void validate(Program& program) { Validator(program).run(); }

ValueType type_of(const Expr& expr, const Program& program) { return check_expr(expr, program, 0); }

}  // namespace adomp
