// SPDX-License-Identifier: Apache-2.0
#include "adomp/adjoint.hpp"

#include <algorithm>

#include "ad_common.hpp"
#include "adomp/error.hpp"
#include "adomp/frontend.hpp"

namespace adomp {

std::string to_string(AdjointScope s) {
  switch (s) {
    case AdjointScope::Private: return "private";
    case AdjointScope::FirstPrivate: return "firstprivate";
    case AdjointScope::ReductionSum: return "reduction";
    case AdjointScope::Shared: return "shared";
    case AdjointScope::SharedAtomic: return "shared_atomic";
  }
  return "?";
}

std::string to_string(ScopingSource s) {
  switch (s) {
    case ScopingSource::Rule: return "rule";
    case ScopingSource::DecisionTree: return "decision_tree";
    case ScopingSource::UserOverride: return "override";
  }
  return "?";
}

AdjointScoping decide_adjoint_scoping(const AccessSummary& summary, Scope primal_scope,
                                      std::optional<OverrideScope> override_scope,
                                      std::optional<std::uint64_t> footprint_bytes, std::uint64_t budget) {
  AdjointScoping out;
  out.variable = summary.variable;
  out.primal_scope = primal_scope;
  switch (primal_scope) {
    case Scope::Private: out.adjoint = AdjointScope::Private; return out;
    case Scope::FirstPrivate: out.adjoint = AdjointScope::ReductionSum; return out;
    case Scope::ReductionSum:
    case Scope::LastPrivate: out.adjoint = AdjointScope::FirstPrivate; return out;
    case Scope::Shared: break;
  }
  const AccessPattern p = summary.pattern;
  if (override_scope) {
    out.source = ScopingSource::UserOverride;
    switch (*override_scope) {
      case OverrideScope::Shared:
        out.adjoint = AdjointScope::Shared;
        if (p == AccessPattern::ReadOnly || p == AccessPattern::MixedUnprovable)
          out.warning = "shared adjoint of '" + out.variable + "' may race (access pattern " + to_string(p) + ")";
        break;
      case OverrideScope::ReductionSum:
        out.adjoint = AdjointScope::ReductionSum;
        if (p != AccessPattern::ReadOnly && p != AccessPattern::NotAccessed)
          out.warning = "reduction adjoint of '" + out.variable + "' is only valid for read-only variables (access pattern " +
                        to_string(p) + ")";
        break;
      case OverrideScope::AtomicShared: out.adjoint = AdjointScope::SharedAtomic; break;
    }
    return out;
  }
  out.source = ScopingSource::DecisionTree;
  switch (p) {
    case AccessPattern::NotAccessed:
    case AccessPattern::ExclusiveSingleThread:
    case AccessPattern::AtomicIncrementOnly: out.adjoint = AdjointScope::Shared; break;
    case AccessPattern::ReadOnly: {
      bool fits = footprint_bytes ? *footprint_bytes <= budget : budget == kUnlimitedBudget;
      out.adjoint = fits ? AdjointScope::ReductionSum : AdjointScope::SharedAtomic;
      break;
    }
    case AccessPattern::MixedUnprovable: out.adjoint = AdjointScope::SharedAtomic; break;
  }
  return out;
}

namespace {

using namespace detail;
using namespace build;

std::optional<std::uint64_t> footprint(const VarDecl& d, const std::map<std::string, std::int64_t>& hints) {
  if (!d.is_array()) return 8;
  auto n = eval_int_const(*d.extent, hints);
  if (!n || *n < 0) return std::nullopt;
  return static_cast<std::uint64_t>(*n) * 8;
}

Stmt loop(std::string counter, Expr start, Expr end, Expr stride, std::vector<Stmt> body) {
  return Stmt{SeqLoop{std::move(counter), std::move(start), std::move(end), std::move(stride), std::move(body), {}}};
}

Stmt if_then(Expr cond, std::vector<Stmt> then_body, std::vector<Stmt> else_body = {}) {
  return Stmt{If{std::move(cond), std::move(then_body), std::move(else_body), {}}};
}

// Expressions a statement evaluates directly, nested statements excluded.
std::vector<const Expr*> own_exprs(const Stmt& s) {
  std::vector<const Expr*> out;
  std::visit(Overloaded{
                 [&](const Assign& a) {
                   if (a.lhs.index) out.push_back(a.lhs.index.get());
                   out.push_back(&a.rhs);
                 },
                 [&](const Increment& a) {
                   if (a.lhs.index) out.push_back(a.lhs.index.get());
                   out.push_back(&a.rhs);
                 },
                 [&](const SeqLoop& l) { out.insert(out.end(), {&l.start, &l.end, &l.stride}); },
                 [&](const ParallelLoop& l) { out.insert(out.end(), {&l.start, &l.end, &l.stride}); },
                 [&](const If& i) { out.push_back(&i.cond); },
                 [&](const CallStmt& c) {
                   for (const auto& a : c.args) out.push_back(&a);
                 },
                 [&](const ParallelRegion&) {},
             },
             s.node);
  return out;
}

// Loop counters read somewhere other than inside a loop over that counter.
void counters_read_outside(const std::vector<Stmt>& body, std::vector<std::string>& enclosing,
                           const std::set<std::string>& counters, std::set<std::string>& out) {
  for (const auto& s : body) {
    for (const Expr* e : own_exprs(s)) {
      std::vector<const Ref*> refs;
      collect_refs(*e, refs);
      for (const Ref* r : refs)
        if (counters.count(r->name) && std::find(enclosing.begin(), enclosing.end(), r->name) == enclosing.end())
          out.insert(r->name);
    }
    std::visit(Overloaded{
                   [&](const SeqLoop& l) {
                     enclosing.push_back(l.counter);
                     counters_read_outside(l.body, enclosing, counters, out);
                     enclosing.pop_back();
                   },
                   [&](const ParallelLoop& l) {
                     enclosing.push_back(l.counter);
                     counters_read_outside(l.body, enclosing, counters, out);
                     enclosing.pop_back();
                   },
                   [&](const If& i) {
                     counters_read_outside(i.then_body, enclosing, counters, out);
                     counters_read_outside(i.else_body, enclosing, counters, out);
                   },
                   [&](const auto&) {},
               },
               s.node);
  }
}

void seq_counters(const std::vector<Stmt>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    std::visit(Overloaded{
                   [&](const SeqLoop& l) {
                     out.insert(l.counter);
                     seq_counters(l.body, out);
                   },
                   [&](const ParallelLoop& l) { seq_counters(l.body, out); },
                   [&](const If& i) {
                     seq_counters(i.then_body, out);
                     seq_counters(i.else_body, out);
                   },
                   [&](const auto&) {},
               },
               s.node);
  }
}

bool is_aux(const std::string& name) { return name.rfind("ad_", 0) == 0; }

struct Sweep {
  std::vector<Stmt> fwd;
  std::vector<Stmt> bwd;  ///< in backward execution order
};

class AdjointBuilder {
 public:
  AdjointBuilder(const Program& program, const AdjointOptions& options)
      : p_(program), opt_(options), active_(active_variables(program)), cfg_(propagate_scoping(build_cfg(program))) {
    for (const auto& r : cfg_.regions) region_of_[r.stmt] = &r;
    std::set<std::string> counters;
    seq_counters(p_.body, counters);
    std::vector<std::string> enclosing;
    counters_read_outside(p_.body, enclosing, counters, counter_read_outside_);
  }

  AdjointResult run() {
    check_derivative_names(p_, active_, "b");
    check_transformable(p_, active_);
    std::set<std::string> adjoint_names;
    for (const auto& v : active_) adjoint_names.insert(v + "b");

    // Grow the save set until the backward sweep reads nothing new.
    std::set<std::string> needed;
    for (;;) {
      needed_ = needed;
      report_.clear();
      warnings_.clear();
      Sweep s = body(p_.body);
      std::vector<std::string> names;
      collect_vars(s.bwd, names);
      for (const auto& n : names)
        if (p_.find(n) && !adjoint_names.count(n)) needed.insert(n);
      if (needed == needed_) return assemble(std::move(s));
    }
  }

 private:
  struct RegionCtx {
    std::set<std::string> atomic;
    std::set<std::string> unsaved;
  };

  bool active(const std::string& v) const { return active_.count(v) > 0; }

  bool depends(const Expr& e) const {
    if (is_integer_expr(e, p_)) return false;
    std::vector<const Ref*> refs;
    collect_refs(e, refs);
    return std::any_of(refs.begin(), refs.end(), [&](const Ref* r) { return active(r->name); });
  }

  bool saved(const std::string& v) const {
    if (region_ && region_->unsaved.count(v)) return false;
    return opt_.save_all || needed_.count(v) > 0;
  }

  bool saved_counter(const std::string& c) const {
    return opt_.save_all || (needed_.count(c) && counter_read_outside_.count(c));
  }

  Stmt push(const Ref& r) const {
    bool integer = p_.find(r.name)->type == BaseType::Integer;
    return call_stmt(integer ? "push_integer4" : "push_real8", {ref(r)});
  }

  Stmt pop(const Ref& r) const {
    bool integer = p_.find(r.name)->type == BaseType::Integer;
    return call_stmt(integer ? "pop_integer4" : "pop_real8", {ref(r)});
  }

  // Increments `rb += a` for every active reference r in `e`, `a` being the adjoint of `e`.
  void adj(const Expr& e, const Expr& a, std::vector<Stmt>& out) const {
    if (!depends(e)) return;
    std::visit(Overloaded{
                   [&](const Ref& r) {
                     bool atomic = region_ && region_->atomic.count(r.name);
                     out.push_back(increment(renamed(r, "b"), a, atomic));
                   },
                   [&](const Unary& u) { adj(*u.operand, negated(a), out); },
                   [&](const Binary& b) {
                     const Expr& x = *b.lhs;
                     const Expr& y = *b.rhs;
                     switch (b.op) {
                       case BinaryOp::Add:
                         adj(x, a, out);
                         adj(y, a, out);
                         break;
                       case BinaryOp::Sub:
                         adj(x, a, out);
                         adj(y, negated(a), out);
                         break;
                       case BinaryOp::Mul:
                         adj(x, mul(a, y), out);
                         adj(y, mul(a, x), out);
                         break;
                       case BinaryOp::Div:
                         adj(x, div(a, y), out);
                         adj(y, neg(div(mul(a, x), mul(y, y))), out);
                         break;
                       default: throw TransformError("comparison of active values is not differentiable");
                     }
                   },
                   [&](const IntrinsicCall& c) {
                     const Expr& x = c.args.at(0);
                     switch (c.fn) {
                       case Intrinsic::Sin: adj(x, mul(a, call(Intrinsic::Cos, {x})), out); break;
                       case Intrinsic::Cos: adj(x, neg(mul(a, call(Intrinsic::Sin, {x}))), out); break;
                       case Intrinsic::Exp: adj(x, mul(a, call(Intrinsic::Exp, {x})), out); break;
                       case Intrinsic::Sqrt: adj(x, div(a, mul(real(2.0), call(Intrinsic::Sqrt, {x}))), out); break;
                       default:
                         throw TransformError(to_string(c.fn) + " of an active value is not differentiable");
                     }
                   },
                   [&](const auto&) {},
               },
               e.node);
  }

  std::vector<Stmt> adjoint_of(const Ref& lhs, const Expr& rhs, bool is_increment) const {
    std::vector<Stmt> out;
    Ref vb = renamed(lhs, "b");
    bool self = references(rhs, lhs.name);
    if (is_increment && !self) {
      adj(rhs, ref(vb), out);
      return out;
    }
    Expr value = is_increment ? add(ref(lhs), rhs) : rhs;
    if (self) {
      out.push_back(assign(scalar_ref("ad_tmp"), ref(vb)));
      out.push_back(assign(vb, real(0.0)));
      adj(value, var("ad_tmp"), out);
    } else {
      adj(value, ref(vb), out);
      out.push_back(assign(vb, real(0.0)));
    }
    return out;
  }

  Sweep body(const std::vector<Stmt>& in) {
    Sweep out;
    std::vector<std::vector<Stmt>> backward;
    for (const auto& s : in) {
      Sweep one = stmt(s);
      out.fwd.insert(out.fwd.end(), one.fwd.begin(), one.fwd.end());
      backward.push_back(std::move(one.bwd));
    }
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) out.bwd.insert(out.bwd.end(), it->begin(), it->end());
    return out;
  }

  Sweep kill(const Stmt& s, const Ref& lhs, const Expr& rhs, bool is_increment) {
    Sweep out;
    bool save = saved(lhs.name);
    if (save) out.fwd.push_back(push(lhs));
    out.fwd.push_back(s);
    if (save) out.bwd.push_back(pop(lhs));
    if (active(lhs.name)) {
      auto a = adjoint_of(lhs, rhs, is_increment);
      out.bwd.insert(out.bwd.end(), a.begin(), a.end());
    }
    return out;
  }

  Sweep stmt(const Stmt& s) {
    return std::visit(Overloaded{
                          [&](const Assign& a) { return kill(s, a.lhs, a.rhs, false); },
                          [&](const Increment& a) { return kill(s, a.lhs, a.rhs, true); },
                          [&](const SeqLoop& l) {
                            Sweep inner = body(l.body);
                            Sweep out;
                            bool save = saved_counter(l.counter);
                            if (save) out.fwd.push_back(push(scalar_ref(l.counter)));
                            out.fwd.push_back(loop(l.counter, l.start, l.end, l.stride, std::move(inner.fwd)));
                            if (!inner.bwd.empty())
                              out.bwd.push_back(loop(l.counter, last_iterate_expr(l.start, l.end, l.stride), l.start,
                                                     negated(l.stride), std::move(inner.bwd)));
                            if (save) out.bwd.push_back(pop(scalar_ref(l.counter)));
                            return out;
                          },
                          [&](const If& i) {
                            Sweep t = body(i.then_body);
                            Sweep e = body(i.else_body);
                            Sweep out;
                            if (t.bwd.empty() && e.bwd.empty()) {
                              out.fwd.push_back(if_then(i.cond, std::move(t.fwd), std::move(e.fwd)));
                              return out;
                            }
                            t.fwd.push_back(call_stmt("push_integer4", {integer(1)}));
                            e.fwd.push_back(call_stmt("push_integer4", {integer(0)}));
                            out.fwd.push_back(if_then(i.cond, std::move(t.fwd), std::move(e.fwd)));
                            out.bwd.push_back(call_stmt("pop_integer4", {var("ad_branch")}));
                            out.bwd.push_back(if_then(eq(var("ad_branch"), integer(1)), std::move(t.bwd), std::move(e.bwd)));
                            return out;
                          },
                          [&](const ParallelLoop& l) { return parallel(s, l); },
                          [&](const auto&) -> Sweep { throw TransformError("unsupported statement"); },
                      },
                      s.node);
  }

  Sweep parallel(const Stmt& s, const ParallelLoop& l) {
    const RegionInfo& info = *region_of_.at(&s);
    const ClauseSet& cl = l.clauses;
    const std::string& c = l.counter;
    const int line = l.loc.line;

    RegionScoping report{info.id, line, {}};
    RegionCtx ctx;
    std::map<std::string, AdjointScope> adjoint_scope;
    std::vector<std::string> lastprivate, active_lastprivate, privatized_saved, hoisted;

    for (const auto& [v, entry] : cl.scoping) {
      if (entry.scope == Scope::Shared &&
          classify_access(cfg_, info.id, v).pattern == AccessPattern::AtomicIncrementOnly)
        ctx.unsaved.insert(v);
    }
    for (const auto& [v, entry] : cl.scoping) {
      const VarDecl& d = *p_.find(v);
      if (entry.scope == Scope::LastPrivate) {
        lastprivate.push_back(v);
        if (active(v)) active_lastprivate.push_back(v);
      }
      bool global_saved = opt_.save_all || needed_.count(v);
      if ((entry.scope == Scope::ReductionSum || ctx.unsaved.count(v)) && global_saved) {
        if (d.is_array()) throw TransformError("line " + std::to_string(line) + ": cannot save array '" + v + "'");
        hoisted.push_back(v);
      }
      if (entry.scope != Scope::Shared && v != c && global_saved) {
        if (!d.is_array()) {
          privatized_saved.push_back(v);
        } else if (needed_.count(v)) {
          throw TransformError("line " + std::to_string(line) + ": privatized array '" + v +
                               "' would have to be saved per thread");
        }
      }
      if (!active(v)) continue;
      std::optional<OverrideScope> ov;
      if (auto it = cl.ad_override.find(v); it != cl.ad_override.end()) ov = it->second;
      AccessSummary summary{info.id, v, AccessPattern::NotAccessed, ""};
      if (entry.scope == Scope::Shared) summary = classify_access(cfg_, info.id, v);
      AdjointScoping dec = decide_adjoint_scoping(summary, entry.scope, ov, footprint(d, opt_.size_hints),
                                                  opt_.privatization_budget);
      if (!dec.warning.empty()) warnings_.push_back("line " + std::to_string(line) + ": " + dec.warning);
      if (dec.adjoint == AdjointScope::SharedAtomic) ctx.atomic.insert(v);
      adjoint_scope[v] = dec.adjoint;
      report.variables.push_back(std::move(dec));
    }
    report_.push_back(std::move(report));

    region_ = &ctx;
    Sweep inner = body(l.body);
    region_ = nullptr;

    const bool is_static = cl.schedule.kind == ScheduleKind::Static && !cl.schedule.chunk;
    const Expr back_stride = negated(l.stride);

    // Forward region.
    std::vector<Stmt> iter = std::move(inner.fwd);
    if (!lastprivate.empty())
      iter.push_back(if_then(eq(var(c), var("ad_last")), {assign(scalar_ref("ad_own"), integer(1))}));
    std::vector<Stmt> fwd;
    if (!lastprivate.empty()) fwd.push_back(assign(scalar_ref("ad_own"), integer(0)));
    if (is_static) {
      fwd.push_back(call_stmt("get_static_schedule", {l.start, l.end, l.stride, var("ad_from"), var("ad_to")}));
      fwd.push_back(loop(c, var("ad_from"), var("ad_to"), l.stride, std::move(iter)));
    } else {
      iter.insert(iter.begin(), call_stmt("record_dynamic_schedule", {var(c), l.stride}));
      fwd.push_back(call_stmt("init_dynamic_schedule", {}));
      ParallelLoop ws;
      ws.counter = c;
      ws.start = l.start;
      ws.end = l.end;
      ws.stride = l.stride;
      ws.clauses.schedule = cl.schedule;
      ws.body = std::move(iter);
      ws.in_region = true;
      fwd.push_back(Stmt{std::move(ws)});
      fwd.push_back(call_stmt("finalize_dynamic_schedule", {}));
    }
    if (!lastprivate.empty()) {
      std::vector<Stmt> copy;
      for (const auto& v : lastprivate) copy.push_back(assign(scalar_ref("ad_lp_" + v), var(v)));
      fwd.push_back(if_then(eq(var("ad_own"), integer(1)), std::move(copy)));
    }
    if (!active_lastprivate.empty()) fwd.push_back(call_stmt("push_integer4", {var("ad_own")}));
    for (const auto& v : privatized_saved) fwd.push_back(push(scalar_ref(v)));

    // Backward region.
    std::vector<Stmt> bwd;
    for (auto it = privatized_saved.rbegin(); it != privatized_saved.rend(); ++it) bwd.push_back(pop(scalar_ref(*it)));
    if (!active_lastprivate.empty()) {
      bwd.push_back(call_stmt("pop_integer4", {var("ad_own")}));
      std::vector<Stmt> zero;
      for (const auto& v : active_lastprivate) zero.push_back(assign(scalar_ref(v + "b"), real(0.0)));
      bwd.push_back(if_then(eq(var("ad_own"), integer(0)), std::move(zero)));
    }
    for (const auto& [v, scope] : adjoint_scope)
      if (scope == AdjointScope::Private && !p_.find(v)->is_array()) bwd.push_back(assign(scalar_ref(v + "b"), real(0.0)));
    if (is_static) {
      bwd.push_back(call_stmt("get_static_schedule", {l.start, l.end, l.stride, var("ad_from"), var("ad_to")}));
      bwd.push_back(loop(c, var("ad_to"), var("ad_from"), back_stride, std::move(inner.bwd)));
    } else {
      bwd.push_back(call_stmt("pop_integer4", {var("ad_count")}));
      std::vector<Stmt> chunk;
      chunk.push_back(call_stmt("pop_integer4", {var("ad_to")}));
      chunk.push_back(call_stmt("pop_integer4", {var("ad_from")}));
      chunk.push_back(loop(c, var("ad_to"), var("ad_from"), back_stride, std::move(inner.bwd)));
      bwd.push_back(loop("ad_chunk", integer(1), var("ad_count"), integer(1), std::move(chunk)));
    }

    ClauseSet fwd_clauses;
    ClauseSet bwd_clauses;
    for (const auto& [v, entry] : cl.scoping) {
      fwd_clauses.scoping[v] = {entry.scope == Scope::LastPrivate ? Scope::Private : entry.scope, true};
      bwd_clauses.scoping[v] = {entry.scope == Scope::Shared ? Scope::Shared : Scope::Private, true};
      auto it = adjoint_scope.find(v);
      if (it == adjoint_scope.end()) continue;
      Scope vb = Scope::Shared;
      switch (it->second) {
        case AdjointScope::Private: vb = Scope::Private; break;
        case AdjointScope::FirstPrivate: vb = Scope::FirstPrivate; break;
        case AdjointScope::ReductionSum: vb = Scope::ReductionSum; break;
        case AdjointScope::Shared:
        case AdjointScope::SharedAtomic: vb = Scope::Shared; break;
      }
      bwd_clauses.scoping[v + "b"] = {vb, true};
    }
    auto add_aux = [](ClauseSet& set, const std::vector<Stmt>& region_body) {
      std::vector<std::string> names;
      collect_vars(region_body, names);
      for (const auto& n : names) {
        if (!is_aux(n) || set.scoping.count(n)) continue;
        bool shared = n == "ad_last" || n.rfind("ad_lp_", 0) == 0;
        set.scoping[n] = {shared ? Scope::Shared : Scope::Private, true};
      }
    };
    add_aux(fwd_clauses, fwd);
    add_aux(bwd_clauses, bwd);

    Sweep out;
    if (!lastprivate.empty()) {
      out.fwd.push_back(assign(scalar_ref("ad_last"), last_iterate_expr(l.start, l.end, l.stride)));
      for (const auto& v : lastprivate) out.fwd.push_back(assign(scalar_ref("ad_lp_" + v), var(v)));
    }
    for (const auto& v : hoisted) out.fwd.push_back(push(scalar_ref(v)));
    out.fwd.push_back(Stmt{ParallelRegion{std::move(fwd_clauses), std::move(fwd), l.loc}});
    for (const auto& v : lastprivate) {
      if (opt_.save_all || needed_.count(v)) out.fwd.push_back(push(scalar_ref(v)));
      out.fwd.push_back(assign(scalar_ref(v), var("ad_lp_" + v)));
    }

    for (auto it = lastprivate.rbegin(); it != lastprivate.rend(); ++it)
      if (opt_.save_all || needed_.count(*it)) out.bwd.push_back(pop(scalar_ref(*it)));
    out.bwd.push_back(Stmt{ParallelRegion{std::move(bwd_clauses), std::move(bwd), l.loc}});
    if (!active_lastprivate.empty()) {
      std::vector<Stmt> zero;
      for (const auto& v : active_lastprivate) zero.push_back(assign(scalar_ref(v + "b"), real(0.0)));
      out.bwd.push_back(
          if_then(binary(BinaryOp::Gt, trip_count_expr(l.start, l.end, l.stride), integer(0)), std::move(zero)));
    }
    for (auto it = hoisted.rbegin(); it != hoisted.rend(); ++it) out.bwd.push_back(pop(scalar_ref(*it)));
    return out;
  }

  AdjointResult assemble(Sweep s) const {
    AdjointResult result;
    Program& out = result.program;
    out.name = p_.name + "_b";
    for (const auto& p : p_.params) {
      out.params.push_back(p);
      if (active(p)) out.params.push_back(p + "b");
    }
    for (const auto& d : p_.decls) {
      out.decls.push_back(d);
      if (active(d.name)) {
        VarDecl db = d;
        db.name += "b";
        db.active = false;
        if (db.is_param()) db.intent = Intent::InOut;
        out.decls.push_back(std::move(db));
      }
    }
    out.body = std::move(s.fwd);
    out.body.insert(out.body.end(), std::make_move_iterator(s.bwd.begin()), std::make_move_iterator(s.bwd.end()));

    std::vector<std::string> names;
    collect_vars(out.body, names);
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (!is_aux(n) || !seen.insert(n).second) continue;
      VarDecl d;
      d.name = n;
      d.type = (n == "ad_tmp" || n.rfind("ad_lp_", 0) == 0) ? BaseType::Real : BaseType::Integer;
      out.decls.push_back(std::move(d));
    }
    validate(out);
    result.scoping = report_;
    result.warnings = warnings_;
    return result;
  }

  const Program& p_;
  AdjointOptions opt_;
  std::set<std::string> active_;
  Cfg cfg_;
  std::map<const Stmt*, const RegionInfo*> region_of_;
  std::set<std::string> counter_read_outside_;
  std::set<std::string> needed_;
  const RegionCtx* region_ = nullptr;
  std::vector<RegionScoping> report_;
  std::vector<std::string> warnings_;
};

}  // namespace

AdjointResult differentiate_adjoint_report(const Program& program, const AdjointOptions& options) {
  return AdjointBuilder(program, options).run();
}

Program differentiate_adjoint(const Program& program, const AdjointOptions& options) {
  return differentiate_adjoint_report(program, options).program;
}

}  // namespace adomp
