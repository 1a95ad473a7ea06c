// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "adomp/ast.hpp"
#include "adomp/error.hpp"

namespace adomp {

/// Names of the runtime entry points that may appear in `call` statements.
bool is_runtime_call(std::string_view name);

/// Parses and validates one routine.
///
/// With `omp_enabled == false` every `!$omp` / `!$ad` line is an ordinary
/// comment: parallel loops come out as sequential loops and explicit regions
/// are flattened into the enclosing statement list.
///
/// Throws SyntaxError or SemanticError.
Program parse(std::string_view source, bool omp_enabled = true);

/// Canonical pretty-printer; `parse(emit(p))` is structurally equal to `p`.
std::string emit(const Program& program);

/// Canonical text of a single expression / statement list, used by tests and
/// diagnostics.
std::string emit(const Expr& expr);
std::string emit(const std::vector<Stmt>& body, int indent = 0);

/// Re-runs the semantic checks on an in-memory program (e.g. one produced by
/// a transform) and fills in defaulted clause entries. Throws SemanticError.
void validate(Program& program);

enum class ValueType { Real, Integer, Logical };

/// Static type of an expression. Integers promote to real in mixed
/// arithmetic; comparisons and .and./.or./.not. are logical.
/// Throws SemanticError on ill-typed expressions or undeclared names.
ValueType type_of(const Expr& expr, const Program& program);

}  // namespace adomp
