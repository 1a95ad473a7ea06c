// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <sstream>
#include <string>

#include "adomp/frontend.hpp"

namespace adomp {

namespace {

constexpr int kPrecOr = 1;
constexpr int kPrecAnd = 2;
constexpr int kPrecNot = 3;
constexpr int kPrecCmp = 4;
constexpr int kPrecAdd = 5;
constexpr int kPrecMul = 6;
constexpr int kPrecAtom = 8;

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kPrecOr;
    case BinaryOp::And: return kPrecAnd;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kPrecAdd;
    case BinaryOp::Mul:
    case BinaryOp::Div: return kPrecMul;
    default: return kPrecCmp;
  }
}

const char* spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return " + ";
    case BinaryOp::Sub: return " - ";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Lt: return " < ";
    case BinaryOp::Le: return " <= ";
    case BinaryOp::Gt: return " > ";
    case BinaryOp::Ge: return " >= ";
    case BinaryOp::Eq: return " == ";
    case BinaryOp::Ne: return " /= ";
    case BinaryOp::And: return " .and. ";
    case BinaryOp::Or: return " .or. ";
  }
  return "?";
}

std::string real_text(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

int expr_prec(const Expr& e) {
  if (auto* b = std::get_if<Binary>(&e.node)) return precedence(b->op);
  if (auto* u = std::get_if<Unary>(&e.node)) return u->op == UnaryOp::Not ? kPrecNot : kPrecAtom;
  return kPrecAtom;
}

void emit_expr(const Expr& e, std::string& out);

void emit_child(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  emit_expr(e, out);
  if (parens) out += ')';
}

void emit_expr(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RealLit>) {
          out += real_text(n.value);
        } else if constexpr (std::is_same_v<T, IntLit>) {
          out += std::to_string(n.value);
        } else if constexpr (std::is_same_v<T, Ref>) {
          out += n.name;
          if (n.index) {
            out += '(';
            emit_expr(*n.index, out);
            out += ')';
          }
        } else if constexpr (std::is_same_v<T, Unary>) {
          const Expr& operand = *n.operand;
          if (n.op == UnaryOp::Not) {
            out += ".not. ";
            emit_child(operand, expr_prec(operand) < kPrecCmp, out);
          } else {
            bool simple = std::holds_alternative<Ref>(operand.node) ||
                          std::holds_alternative<IntrinsicCall>(operand.node);
            out += '-';
            emit_child(operand, !simple, out);
          }
        } else if constexpr (std::is_same_v<T, Binary>) {
          int p = precedence(n.op);
          const Expr& l = *n.lhs;
          const Expr& r = *n.rhs;
          bool cmp = p == kPrecCmp;
          bool lparen = std::holds_alternative<Unary>(l.node) || (cmp ? expr_prec(l) <= p : expr_prec(l) < p);
          bool rparen = std::holds_alternative<Unary>(r.node) || expr_prec(r) <= p;
          emit_child(l, lparen, out);
          out += spelling(n.op);
          emit_child(r, rparen, out);
        } else if constexpr (std::is_same_v<T, IntrinsicCall>) {
          out += to_string(n.fn);
          out += '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            emit_expr(n.args[i], out);
          }
          out += ')';
        }
      },
      e.node);
}

std::string ref_text(const Ref& r) { return emit(Expr{r}); }

std::string join(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += ", ";
    s += names[i];
  }
  return s;
}

std::string clause_text(const ClauseSet& cs) {
  static const std::pair<Scope, const char*> order[] = {{Scope::Private, "private"},
                                                        {Scope::FirstPrivate, "firstprivate"},
                                                        {Scope::LastPrivate, "lastprivate"},
                                                        {Scope::Shared, "shared"},
                                                        {Scope::ReductionSum, "reduction(+:"}};
  std::string out;
  for (auto [scope, word] : order) {
    std::vector<std::string> names;
    for (const auto& [v, e] : cs.scoping)
      if (e.is_explicit && e.scope == scope) names.push_back(v);
    if (names.empty()) continue;
    out += ' ';
    out += word;
    if (scope != Scope::ReductionSum) out += '(';
    out += join(names);
    out += ')';
  }
  if (cs.schedule.kind != ScheduleKind::Unspecified) {
    out += cs.schedule.kind == ScheduleKind::Static ? " schedule(static" : " schedule(dynamic";
    if (cs.schedule.chunk) out += ", " + std::to_string(*cs.schedule.chunk);
    out += ')';
  }
  return out;
}

std::string override_text(const std::map<std::string, OverrideScope>& ov) {
  std::string out;
  static const std::pair<OverrideScope, const char*> order[] = {{OverrideScope::Shared, "shared("},
                                                                {OverrideScope::ReductionSum, "reduction(+:"},
                                                                {OverrideScope::AtomicShared, "atomic("}};
  for (auto [scope, word] : order) {
    std::vector<std::string> names;
    for (const auto& [v, s] : ov)
      if (s == scope) names.push_back(v);
    if (names.empty()) continue;
    out += ' ';
    out += word;
    out += join(names);
    out += ')';
  }
  return out;
}

void emit_body(const std::vector<Stmt>& body, int indent, std::ostringstream& os);

void emit_loop_header(const std::string& counter, const Expr& start, const Expr& end, const Expr& stride,
                      const std::string& pad, std::ostringstream& os) {
  os << pad << "do " << counter << " = " << emit(start) << ", " << emit(end);
  auto* lit = std::get_if<IntLit>(&stride.node);
  if (!lit || lit->value != 1) os << ", " << emit(stride);
  os << '\n';
}

void emit_stmt(const Stmt& s, int indent, std::ostringstream& os) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Assign>) {
          os << pad << ref_text(n.lhs) << " = " << emit(n.rhs) << '\n';
        } else if constexpr (std::is_same_v<T, Increment>) {
          if (n.atomic) os << pad << "!$omp atomic\n";
          os << pad << ref_text(n.lhs) << " += " << emit(n.rhs) << '\n';
        } else if constexpr (std::is_same_v<T, SeqLoop>) {
          emit_loop_header(n.counter, n.start, n.end, n.stride, pad, os);
          emit_body(n.body, indent + 2, os);
          os << pad << "end do\n";
        } else if constexpr (std::is_same_v<T, ParallelLoop>) {
          if (!n.clauses.ad_override.empty())
            os << pad << "!$ad omp_adjoint" << override_text(n.clauses.ad_override) << '\n';
          os << pad << (n.in_region ? "!$omp do" : "!$omp parallel do") << clause_text(n.clauses) << '\n';
          emit_loop_header(n.counter, n.start, n.end, n.stride, pad, os);
          emit_body(n.body, indent + 2, os);
          os << pad << "end do\n";
        } else if constexpr (std::is_same_v<T, ParallelRegion>) {
          os << pad << "!$omp parallel" << clause_text(n.clauses) << '\n';
          emit_body(n.body, indent + 2, os);
          os << pad << "!$omp end parallel\n";
        } else if constexpr (std::is_same_v<T, If>) {
          os << pad << "if (" << emit(n.cond) << ") then\n";
          emit_body(n.then_body, indent + 2, os);
          if (!n.else_body.empty()) {
            os << pad << "else\n";
            emit_body(n.else_body, indent + 2, os);
          }
          os << pad << "end if\n";
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          os << pad << "call " << n.name << '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) os << ", ";
            os << emit(n.args[i]);
          }
          os << ")\n";
        }
      },
      s.node);
}

void emit_body(const std::vector<Stmt>& body, int indent, std::ostringstream& os) {
  for (const auto& s : body) emit_stmt(s, indent, os);
}

const char* intent_text(Intent i) {
  switch (i) {
    case Intent::In: return "in";
    case Intent::Out: return "out";
    case Intent::InOut: return "inout";
    case Intent::Local: break;
  }
  return "";
}

}  // namespace

std::string emit(const Expr& expr) {
  std::string out;
  emit_expr(expr, out);
  return out;
}

std::string emit(const std::vector<Stmt>& body, int indent) {
  std::ostringstream os;
  emit_body(body, indent, os);
  return os.str();
}

std::string emit(const Program& program) {
  std::ostringstream os;
  os << "subroutine " << program.name;
  if (!program.params.empty()) os << '(' << join(program.params) << ')';
  os << '\n';
  for (const auto& d : program.decls) {
    os << "  " << (d.type == BaseType::Real ? "real" : "integer");
    if (d.is_param()) os << ", intent(" << intent_text(d.intent) << ')';
    if (d.active) os << ", active";
    os << " :: " << d.name;
    if (d.extent) os << '(' << emit(*d.extent) << ')';
    os << '\n';
  }
  emit_body(program.body, 2, os);
  os << "end subroutine\n";
  return os.str();
}

}  // namespace adomp
