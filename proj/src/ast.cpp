// SPDX-License-Identifier: Apache-2.0
#include "adomp/ast.hpp"

#include <algorithm>

namespace adomp {

std::string to_string(Scope s) {
  switch (s) {
    case Scope::Shared: return "shared";
    case Scope::Private: return "private";
    case Scope::FirstPrivate: return "firstprivate";
    case Scope::LastPrivate: return "lastprivate";
    case Scope::ReductionSum: return "reduction(+)";
  }
  return "?";
}

std::string to_string(OverrideScope s) {
  switch (s) {
    case OverrideScope::Shared: return "shared";
    case OverrideScope::ReductionSum: return "reduction(+)";
    case OverrideScope::AtomicShared: return "atomic";
  }
  return "?";
}

std::string to_string(Intrinsic fn) {
  switch (fn) {
    case Intrinsic::Sin: return "sin";
    case Intrinsic::Cos: return "cos";
    case Intrinsic::Exp: return "exp";
    case Intrinsic::Sqrt: return "sqrt";
    case Intrinsic::Mod: return "mod";
    case Intrinsic::Max: return "max";
    case Intrinsic::Min: return "min";
  }
  return "?";
}

void collect_refs(const Expr& e, std::vector<const Ref*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Ref>) {
          out.push_back(&n);
          if (n.index) collect_refs(*n.index, out);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_refs(*n.operand, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_refs(*n.lhs, out);
          collect_refs(*n.rhs, out);
        } else if constexpr (std::is_same_v<T, IntrinsicCall>) {
          for (const auto& a : n.args) collect_refs(a, out);
        }
      },
      e.node);
}

bool references(const Expr& e, const std::string& var) {
  std::vector<const Ref*> refs;
  collect_refs(e, refs);
  return std::any_of(refs.begin(), refs.end(), [&](const Ref* r) { return r->name == var; });
}

namespace {

void add_unique(std::vector<std::string>& out, const std::string& name) {
  if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
}

void collect_expr_vars(const Expr& e, std::vector<std::string>& out) {
  std::vector<const Ref*> refs;
  collect_refs(e, refs);
  for (const Ref* r : refs) add_unique(out, r->name);
}

void collect_ref_vars(const Ref& r, std::vector<std::string>& out) {
  add_unique(out, r.name);
  if (r.index) collect_expr_vars(*r.index, out);
}

}  // namespace

void collect_vars(const std::vector<Stmt>& body, std::vector<std::string>& out) {
  for (const auto& s : body) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign> || std::is_same_v<T, Increment>) {
            collect_ref_vars(n.lhs, out);
            collect_expr_vars(n.rhs, out);
          } else if constexpr (std::is_same_v<T, SeqLoop> || std::is_same_v<T, ParallelLoop>) {
            add_unique(out, n.counter);
            collect_expr_vars(n.start, out);
            collect_expr_vars(n.end, out);
            collect_expr_vars(n.stride, out);
            collect_vars(n.body, out);
          } else if constexpr (std::is_same_v<T, ParallelRegion>) {
            collect_vars(n.body, out);
          } else if constexpr (std::is_same_v<T, If>) {
            collect_expr_vars(n.cond, out);
            collect_vars(n.then_body, out);
            collect_vars(n.else_body, out);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            for (const auto& a : n.args) collect_expr_vars(a, out);
          }
        },
        s.node);
  }
}

}  // namespace adomp
