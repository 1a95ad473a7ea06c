// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "adomp/ast.hpp"

namespace adomp {

/// Tangent-mode routine `<name>_d`. Every active variable `v` gains a
/// derivative `vd` with the same intent and shape; its derivative statement
/// precedes the primal statement, and parallel loops keep their clauses with
/// `vd` scoped like `v`.
///
/// Throws TransformError for constructs outside the differentiable subset and
/// SemanticError for name collisions.
Program differentiate_tangent(const Program& program);

/// Derivative of `e` with every active reference `v` replaced by `vd`;
/// empty if `e` does not depend on an active variable.
std::optional<Expr> tangent_expr(const Expr& e, const Program& program);

}  // namespace adomp
