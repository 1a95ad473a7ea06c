// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace adomp {

/// Owning, deep-copying pointer with value semantics. An empty Box models
/// "absent" (e.g. the index of a scalar reference).
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  explicit operator bool() const { return static_cast<bool>(ptr_); }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

/// Source position. Never takes part in structural equality.
struct SourceLoc {
  int line = 0;
  int column = 0;
  friend bool operator==(const SourceLoc&, const SourceLoc&) { return true; }
};

// ---------------------------------------------------------------------------
// Expressions

enum class BinaryOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnaryOp { Neg, Not };
enum class Intrinsic { Sin, Cos, Exp, Sqrt, Mod, Max, Min };

struct Expr;

struct RealLit {
  double value = 0.0;
  friend bool operator==(const RealLit&, const RealLit&) = default;
};

struct IntLit {
  std::int64_t value = 0;
  friend bool operator==(const IntLit&, const IntLit&) = default;
};

/// Reference to a scalar (index empty) or to one array cell.
struct Ref {
  std::string name;
  Box<Expr> index;
  bool is_array_cell() const { return static_cast<bool>(index); }
  friend bool operator==(const Ref&, const Ref&) = default;
};

struct Unary {
  UnaryOp op = UnaryOp::Neg;
  Box<Expr> operand;
  friend bool operator==(const Unary&, const Unary&) = default;
};

struct Binary {
  BinaryOp op = BinaryOp::Add;
  Box<Expr> lhs;
  Box<Expr> rhs;
  friend bool operator==(const Binary&, const Binary&) = default;
};

struct IntrinsicCall {
  Intrinsic fn = Intrinsic::Sin;
  std::vector<Expr> args;
  friend bool operator==(const IntrinsicCall&, const IntrinsicCall&);
};

struct Expr {
  std::variant<RealLit, IntLit, Ref, Unary, Binary, IntrinsicCall> node;
  friend bool operator==(const Expr&, const Expr&) = default;
};

inline bool operator==(const IntrinsicCall& a, const IntrinsicCall& b) {
  return a.fn == b.fn && a.args == b.args;
}

// ---------------------------------------------------------------------------
// Clauses

enum class Scope { Shared, Private, FirstPrivate, LastPrivate, ReductionSum };
enum class ScheduleKind { Unspecified, Static, Dynamic };
enum class OverrideScope { Shared, ReductionSum, AtomicShared };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Unspecified;
  std::optional<std::int64_t> chunk;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ScopeEntry {
  Scope scope = Scope::Shared;
  /// False when the scope was filled in by the defaulting rules.
  bool is_explicit = true;
  friend bool operator==(const ScopeEntry&, const ScopeEntry&) = default;
};

struct ClauseSet {
  std::map<std::string, ScopeEntry> scoping;
  Schedule schedule;
  /// Adjoint scoping forced by an `!$ad omp_adjoint` line.
  std::map<std::string, OverrideScope> ad_override;

  std::optional<Scope> scope_of(const std::string& var) const {
    auto it = scoping.find(var);
    if (it == scoping.end()) return std::nullopt;
    return it->second.scope;
  }
  friend bool operator==(const ClauseSet&, const ClauseSet&) = default;
};

// ---------------------------------------------------------------------------
// Statements

struct Stmt;

struct Assign {
  Ref lhs;
  Expr rhs;
  SourceLoc loc;
  friend bool operator==(const Assign&, const Assign&) = default;
};

struct Increment {
  Ref lhs;
  Expr rhs;
  bool atomic = false;
  SourceLoc loc;
  friend bool operator==(const Increment&, const Increment&) = default;
};

struct SeqLoop {
  std::string counter;
  Expr start;
  Expr end;
  Expr stride;
  std::vector<Stmt> body;
  SourceLoc loc;
  friend bool operator==(const SeqLoop&, const SeqLoop&);
};

/// Worksharing loop. `in_region` distinguishes `!$omp do` inside an explicit
/// parallel region from the combined `!$omp parallel do`.
struct ParallelLoop {
  std::string counter;
  Expr start;
  Expr end;
  Expr stride;
  ClauseSet clauses;
  std::vector<Stmt> body;
  bool in_region = false;
  SourceLoc loc;
  friend bool operator==(const ParallelLoop&, const ParallelLoop&);
};

struct ParallelRegion {
  ClauseSet clauses;
  std::vector<Stmt> body;
  SourceLoc loc;
  friend bool operator==(const ParallelRegion&, const ParallelRegion&);
};

struct If {
  Expr cond;
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  SourceLoc loc;
  friend bool operator==(const If&, const If&);
};

/// Call to one of the runtime entry points (push_real8, get_static_schedule, ...).
struct CallStmt {
  std::string name;
  std::vector<Expr> args;
  SourceLoc loc;
  friend bool operator==(const CallStmt&, const CallStmt&) = default;
};

struct Stmt {
  std::variant<Assign, Increment, SeqLoop, ParallelLoop, ParallelRegion, If, CallStmt> node;
  friend bool operator==(const Stmt&, const Stmt&) = default;
};

inline bool operator==(const SeqLoop& a, const SeqLoop& b) {
  return a.counter == b.counter && a.start == b.start && a.end == b.end &&
         a.stride == b.stride && a.body == b.body;
}
inline bool operator==(const ParallelLoop& a, const ParallelLoop& b) {
  return a.counter == b.counter && a.start == b.start && a.end == b.end &&
         a.stride == b.stride && a.clauses == b.clauses && a.body == b.body &&
         a.in_region == b.in_region;
}
inline bool operator==(const ParallelRegion& a, const ParallelRegion& b) {
  return a.clauses == b.clauses && a.body == b.body;
}
inline bool operator==(const If& a, const If& b) {
  return a.cond == b.cond && a.then_body == b.then_body && a.else_body == b.else_body;
}

// ---------------------------------------------------------------------------
// Declarations and routine

enum class BaseType { Real, Integer };
enum class Intent { Local, In, Out, InOut };

struct VarDecl {
  std::string name;
  BaseType type = BaseType::Real;
  Intent intent = Intent::Local;
  bool active = false;
  Box<Expr> extent;  ///< empty for scalars
  SourceLoc loc;

  bool is_array() const { return static_cast<bool>(extent); }
  bool is_param() const { return intent != Intent::Local; }
  friend bool operator==(const VarDecl&, const VarDecl&) = default;
};

struct Program {
  std::string name;
  std::vector<std::string> params;  ///< header order
  std::vector<VarDecl> decls;       ///< params and locals, declaration order
  std::vector<Stmt> body;

  const VarDecl* find(const std::string& var) const {
    for (const auto& d : decls)
      if (d.name == var) return &d;
    return nullptr;
  }
  VarDecl* find(const std::string& var) {
    for (auto& d : decls)
      if (d.name == var) return &d;
    return nullptr;
  }
  friend bool operator==(const Program&, const Program&) = default;
};

// ---------------------------------------------------------------------------
// Builders used by the transforms and tests.

namespace build {

inline Expr real(double v) { return Expr{RealLit{v}}; }
inline Expr integer(std::int64_t v) { return Expr{IntLit{v}}; }
inline Expr var(std::string name) { return Expr{Ref{std::move(name), {}}}; }
inline Expr cell(std::string name, Expr index) {
  return Expr{Ref{std::move(name), Box<Expr>(std::move(index))}};
}
inline Expr ref(const Ref& r) { return Expr{r}; }
inline Expr binary(BinaryOp op, Expr a, Expr b) {
  return Expr{Binary{op, Box<Expr>(std::move(a)), Box<Expr>(std::move(b))}};
}
inline Expr add(Expr a, Expr b) { return binary(BinaryOp::Add, std::move(a), std::move(b)); }
inline Expr sub(Expr a, Expr b) { return binary(BinaryOp::Sub, std::move(a), std::move(b)); }
inline Expr mul(Expr a, Expr b) { return binary(BinaryOp::Mul, std::move(a), std::move(b)); }
inline Expr div(Expr a, Expr b) { return binary(BinaryOp::Div, std::move(a), std::move(b)); }
inline Expr eq(Expr a, Expr b) { return binary(BinaryOp::Eq, std::move(a), std::move(b)); }
inline Expr neg(Expr a) { return Expr{Unary{UnaryOp::Neg, Box<Expr>(std::move(a))}}; }
inline Expr call(Intrinsic fn, std::vector<Expr> args) {
  return Expr{IntrinsicCall{fn, std::move(args)}};
}
inline Ref scalar_ref(std::string name) { return Ref{std::move(name), {}}; }
inline Ref cell_ref(std::string name, Expr index) {
  return Ref{std::move(name), Box<Expr>(std::move(index))};
}

inline Stmt assign(Ref lhs, Expr rhs) { return Stmt{Assign{std::move(lhs), std::move(rhs), {}}}; }
inline Stmt increment(Ref lhs, Expr rhs, bool atomic = false) {
  return Stmt{Increment{std::move(lhs), std::move(rhs), atomic, {}}};
}
inline Stmt call_stmt(std::string name, std::vector<Expr> args) {
  return Stmt{CallStmt{std::move(name), std::move(args), {}}};
}

}  // namespace build

// ---------------------------------------------------------------------------
// Small queries shared by several modules.

std::string to_string(Scope s);
std::string to_string(OverrideScope s);
std::string to_string(Intrinsic fn);

/// True if `e` (or any subexpression, including indices) references `var`.
bool references(const Expr& e, const std::string& var);

/// Appends every Ref in `e` (including refs nested in indices) in evaluation order.
void collect_refs(const Expr& e, std::vector<const Ref*>& out);

/// Names of all variables referenced by a statement list (reads and writes).
void collect_vars(const std::vector<Stmt>& body, std::vector<std::string>& out);

}  // namespace adomp
