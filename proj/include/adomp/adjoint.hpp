// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adomp/analysis.hpp"
#include "adomp/ast.hpp"

namespace adomp {

enum class AdjointScope { Private, FirstPrivate, ReductionSum, Shared, SharedAtomic };
enum class ScopingSource { Rule, DecisionTree, UserOverride };

std::string to_string(AdjointScope s);
std::string to_string(ScopingSource s);

/// Scope of `v` and its adjoint `vb` in the backward-sweep region.
struct AdjointScoping {
  std::string variable;
  Scope primal_scope = Scope::Shared;
  AdjointScope adjoint = AdjointScope::Shared;
  ScopingSource source = ScopingSource::Rule;
  /// Non-empty when a user override looks unsafe for the detected pattern.
  std::string warning;
};

inline constexpr std::uint64_t kDefaultPrivatizationBudget = 8u << 20;
inline constexpr std::uint64_t kUnlimitedBudget = std::numeric_limits<std::uint64_t>::max();

/// Scoping of one variable's adjoint. `footprint_bytes` is the size of one
/// private copy, empty when unknown; an unknown footprint fits only an
/// unlimited budget.
AdjointScoping decide_adjoint_scoping(const AccessSummary& summary, Scope primal_scope,
                                      std::optional<OverrideScope> override_scope,
                                      std::optional<std::uint64_t> footprint_bytes,
                                      std::uint64_t budget = kDefaultPrivatizationBudget);

struct AdjointOptions {
  /// Largest private adjoint copy (bytes) a read-only shared variable may get.
  std::uint64_t privatization_budget = kDefaultPrivatizationBudget;
  /// Values of integer parameters used to size array extents.
  std::map<std::string, std::int64_t> size_hints;
  /// Push every overwritten variable, not only those the backward sweep reads.
  bool save_all = false;
};

struct RegionScoping {
  int region = 0;
  int line = 0;
  std::vector<AdjointScoping> variables;
};

struct AdjointResult {
  Program program;
  std::vector<RegionScoping> scoping;
  std::vector<std::string> warnings;
};

/// Adjoint routine `<name>_b`: the forward sweep (primal plus tape pushes and
/// schedule recording) followed by the backward sweep. Every active variable
/// `v` gains an adjoint `vb`; adjoints of active parameters are `inout`.
///
/// Throws TransformError for unsupported input and SemanticError for name
/// collisions.
AdjointResult differentiate_adjoint_report(const Program& program, const AdjointOptions& options = {});

Program differentiate_adjoint(const Program& program, const AdjointOptions& options = {});

}  // namespace adomp
