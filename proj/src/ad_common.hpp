// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the tangent and adjoint transforms.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adomp/ast.hpp"

namespace adomp::detail {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Real variables whose value depends on an active input: declared-active
/// variables plus locals reached by assignment from them.
std::set<std::string> active_variables(const Program& program);

/// Rejects programs whose names clash with derivative (`<v><suffix>`) or
/// auxiliary (`ad_`) names.
void check_derivative_names(const Program& program, const std::set<std::string>& active, const std::string& suffix);

/// Rejects constructs neither transform handles.
void check_transformable(const Program& program, const std::set<std::string>& active);

Ref renamed(const Ref& r, const std::string& suffix);

bool is_integer_expr(const Expr& e, const Program& program);

/// `do` loop trip count `max(0, (end - start + stride)/stride)`.
Expr trip_count_expr(const Expr& start, const Expr& end, const Expr& stride);

/// Counter value of the last iteration of a `do` loop, `start - stride` when empty.
Expr last_iterate_expr(const Expr& start, const Expr& end, const Expr& stride);

Expr negated(const Expr& e);

/// Value of an integer expression built from literals and the named `values`.
std::optional<std::int64_t> eval_int_const(const Expr& e, const std::map<std::string, std::int64_t>& values);

}  // namespace adomp::detail
