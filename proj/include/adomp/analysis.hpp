// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adomp/ast.hpp"

namespace adomp {

enum class BlockKind { Plain, LoopHeader, ParallelHeader, Branch, Join };

/// A basic block. Blocks point into the Program the Cfg was built from, which
/// must outlive it.
struct CfgBlock {
  int id = 0;
  BlockKind kind = BlockKind::Plain;
  /// Straight-line statements (Plain) or the controlling statement (headers, Branch).
  std::vector<const Stmt*> stmts;
  std::vector<int> successors;
  /// Loop counter for headers.
  std::string label;
  /// Clauses of a ParallelHeader.
  const ClauseSet* clauses = nullptr;
  /// Innermost enclosing parallel region, -1 outside.
  int region = -1;
};

struct RegionInfo {
  int id = 0;
  int header = 0;
  const ClauseSet* clauses = nullptr;
  /// Counter of a combined parallel loop; empty for an explicit region.
  std::string counter;
  const Stmt* stmt = nullptr;
  std::vector<int> blocks;
};

struct Cfg {
  const Program* program = nullptr;
  std::vector<CfgBlock> blocks;
  std::vector<RegionInfo> regions;
  /// Effective scope of every Ref inside a parallel region; filled by propagate_scoping.
  std::map<const Ref*, Scope> ref_scope;
};

Cfg build_cfg(const Program& program);
Cfg propagate_scoping(Cfg cfg);

enum class AccessPattern { NotAccessed, ExclusiveSingleThread, ReadOnly, AtomicIncrementOnly, MixedUnprovable };
std::string to_string(AccessPattern p);

struct AccessSummary {
  int region = 0;
  std::string variable;
  AccessPattern pattern = AccessPattern::NotAccessed;
  std::string justification;
};

AccessSummary classify_access(const Cfg& cfg, int region, const std::string& var);

/// One summary per (region, shared variable), regions in source order.
std::vector<AccessSummary> summarize(const Cfg& cfg);

/// Dependency kinds between two accesses of the same location.
enum class AccessKind { Read, Write, Increment };

/// True if executing `first` then `second` on one location orders them.
bool has_dependency(AccessKind first, AccessKind second);

/// `index == coefficient*counter + constant + sum(terms)`, where every term is
/// invariant in the loop.
struct AffineIndex {
  std::int64_t coefficient = 0;
  std::int64_t constant = 0;
  std::map<std::string, std::int64_t> terms;
  friend bool operator==(const AffineIndex&, const AffineIndex&) = default;
};

/// Decomposes `index` relative to `counter`. Names in `variant` are treated as
/// changing across iterations and make the result empty.
std::optional<AffineIndex> affine_in(const Expr& index, const std::string& counter,
                                     const std::vector<std::string>& variant);

}  // namespace adomp
