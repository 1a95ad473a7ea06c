// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <set>

#include "adomp/analysis.hpp"
#include "adomp/executor.hpp"
#include "adomp/fixtures.hpp"
#include "adomp/frontend.hpp"

using namespace adomp;

namespace {

const char* kStencil = R"(subroutine stencil(a, b, c, arr_in, arr_out, s, n)
  integer, intent(in) :: n
  real, intent(in) :: a, b, c
  real, intent(in) :: arr_in(n)
  real, intent(out) :: arr_out(n)
  real, intent(inout) :: s
  integer :: i
!$omp parallel do shared(arr_in, arr_out)
  do i = 2, n - 1
    arr_out(i) = a*arr_in(i - 1) + b*arr_in(i) + c*arr_in(i + 1)
!$omp atomic
    s += arr_in(i)
  end do
end subroutine
)";

AccessPattern pattern(const Program& p, const std::string& var, int region = 0) {
  return classify_access(propagate_scoping(build_cfg(p)), region, var).pattern;
}

std::set<int> reachable(const Cfg& cfg) {
  std::set<int> seen;
  if (cfg.blocks.empty()) return seen;
  std::queue<int> q;
  q.push(0);
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    if (!seen.insert(b).second) continue;
    for (int s : cfg.blocks[b].successors) q.push(s);
  }
  return seen;
}

}  // namespace

TEST(BuildCfg, SingleAssignmentIsOneBlock) {
  Program p = parse("subroutine e(x, y, z)\n  real, intent(in) :: x, y\n  real, intent(out) :: z\n  z = x*y\nend subroutine\n");
  Cfg cfg = build_cfg(p);
  ASSERT_EQ(cfg.blocks.size(), 1u);
  EXPECT_EQ(cfg.blocks[0].kind, BlockKind::Plain);
  EXPECT_EQ(cfg.blocks[0].stmts.size(), 1u);
  EXPECT_TRUE(cfg.regions.empty());
}

TEST(BuildCfg, ParallelLoopWithIfElseIsHeaderPlusDiamond) {
  Program p = parse(R"(subroutine d(x, n)
  integer, intent(in) :: n
  real, intent(inout) :: x(n)
  integer :: i
!$omp parallel do
  do i = 1, n
    if (x(i) > 0.0) then
      x(i) = 1.0
    else
      x(i) = 2.0
    end if
  end do
end subroutine
)");
  Cfg cfg = build_cfg(p);
  ASSERT_EQ(cfg.blocks.size(), 5u);
  EXPECT_EQ(cfg.blocks[0].kind, BlockKind::ParallelHeader);
  EXPECT_EQ(cfg.blocks[1].kind, BlockKind::Branch);
  EXPECT_EQ(cfg.blocks[2].kind, BlockKind::Plain);
  EXPECT_EQ(cfg.blocks[3].kind, BlockKind::Plain);
  EXPECT_EQ(cfg.blocks[4].kind, BlockKind::Join);
  EXPECT_EQ(cfg.blocks[1].successors, (std::vector<int>{2, 3}));
  EXPECT_EQ(cfg.blocks[2].successors, std::vector<int>{4});
  EXPECT_EQ(cfg.blocks[3].successors, std::vector<int>{4});
  EXPECT_EQ(cfg.blocks[4].successors, std::vector<int>{0});
  ASSERT_EQ(cfg.regions.size(), 1u);
  EXPECT_EQ(cfg.regions[0].header, 0);
  EXPECT_EQ(cfg.regions[0].blocks, (std::vector<int>{1, 2, 3, 4}));
  for (int b = 1; b < 5; ++b) EXPECT_EQ(cfg.blocks[b].region, 0);
  EXPECT_EQ(reachable(cfg).size(), 5u);
}

TEST(BuildCfg, FirstprivateHeaderCarriesClauses) {
  Program p = parse(embedded_fixture_sources().at("firstprivate_overwrite"));
  Cfg cfg = build_cfg(p);
  ASSERT_EQ(cfg.regions.size(), 1u);
  const CfgBlock& h = cfg.blocks[cfg.regions[0].header];
  EXPECT_EQ(h.kind, BlockKind::ParallelHeader);
  EXPECT_EQ(h.label, "i");
  ASSERT_NE(h.clauses, nullptr);
  EXPECT_EQ(h.clauses->scoping.at("a"), (ScopeEntry{Scope::FirstPrivate, true}));
  EXPECT_EQ(h.clauses->scoping.at("arr"), (ScopeEntry{Scope::Shared, true}));
  std::vector<std::string> explicit_entries;
  for (const auto& [v, e] : h.clauses->scoping)
    if (e.is_explicit) explicit_entries.push_back(v);
  EXPECT_EQ(explicit_entries, (std::vector<std::string>{"a", "arr"}));
}

TEST(BuildCfg, NestedStructureAllReachable) {
  Program p = parse(R"(subroutine n(x, m)
  integer, intent(in) :: m
  real, intent(inout) :: x(m)
  integer :: i, k
  do k = 1, 3
    x(1) = x(1) + 1.0
!$omp parallel do
    do i = 1, m
      if (i > 2) then
        x(i) = 0.0
      end if
    end do
    x(2) = 1.0
  end do
  x(3) = 2.0
end subroutine
)");
  Cfg cfg = build_cfg(p);
  EXPECT_EQ(reachable(cfg).size(), cfg.blocks.size());
  std::size_t stmts = 0;
  for (const auto& b : cfg.blocks) stmts += b.stmts.size();
  EXPECT_EQ(stmts, 7u);
}

TEST(PropagateScoping, SharedDefaultedAndCounter) {
  Program p = parse(R"(subroutine q(arr, w, n)
  integer, intent(in) :: n
  real, intent(inout) :: arr(n)
  real, intent(in) :: w
  integer :: i
!$omp parallel do shared(arr)
  do i = 1, n
    arr(i) = w
  end do
end subroutine
)");
  Cfg cfg = propagate_scoping(build_cfg(p));
  const auto& loop = std::get<ParallelLoop>(p.body[0].node);
  const auto& a = std::get<Assign>(loop.body[0].node);
  const Ref* index_ref = &std::get<Ref>(a.lhs.index->node);
  const Ref* w_ref = &std::get<Ref>(a.rhs.node);
  EXPECT_EQ(cfg.ref_scope.at(&a.lhs), Scope::Shared);
  EXPECT_EQ(cfg.ref_scope.at(w_ref), Scope::Shared);
  EXPECT_EQ(cfg.ref_scope.at(index_ref), Scope::Private);
  EXPECT_EQ(cfg.ref_scope.size(), 3u);
}

TEST(ClassifyAccess, StencilPatterns) {
  Program p = parse(kStencil);
  EXPECT_EQ(pattern(p, "arr_in"), AccessPattern::ReadOnly);
  EXPECT_EQ(pattern(p, "arr_out"), AccessPattern::ExclusiveSingleThread);
  EXPECT_EQ(pattern(p, "s"), AccessPattern::AtomicIncrementOnly);
  EXPECT_EQ(pattern(p, "a"), AccessPattern::ReadOnly);
  EXPECT_EQ(pattern(p, "n"), AccessPattern::NotAccessed);
}

TEST(ClassifyAccess, AtomicSumOnly) {
  Program p = parse(R"(subroutine t(arr, s, n)
  integer, intent(in) :: n
  real, intent(in) :: arr(n)
  real, intent(inout) :: s
  integer :: i
!$omp parallel do
  do i = 1, n
!$omp atomic
    s += arr(i)
  end do
end subroutine
)");
  AccessSummary s = classify_access(propagate_scoping(build_cfg(p)), 0, "s");
  EXPECT_EQ(s.pattern, AccessPattern::AtomicIncrementOnly);
  EXPECT_EQ(s.variable, "s");
  EXPECT_FALSE(s.justification.empty());
}

TEST(ClassifyAccess, ScrambledIndexIsMixed) {
  Program p = parse(R"(subroutine s(x, y, n)
  integer, intent(in) :: n
  real, intent(in) :: x(n)
  real, intent(inout) :: y(n)
  integer :: i
!$omp parallel do
  do i = 1, n
    y(mod(7*i, n) + 1) = x(i)
  end do
end subroutine
)");
  AccessSummary s = classify_access(propagate_scoping(build_cfg(p)), 0, "y");
  EXPECT_EQ(s.pattern, AccessPattern::MixedUnprovable);
  EXPECT_NE(s.justification.find("not affine"), std::string::npos) << s.justification;
  EXPECT_EQ(pattern(p, "x"), AccessPattern::ExclusiveSingleThread);
}

TEST(ClassifyAccess, MixedForms) {
  Program p = parse(R"(subroutine m(x, c, n)
  integer, intent(in) :: n
  real, intent(inout) :: x(n)
  real, intent(inout) :: c
  integer :: i, j
!$omp parallel do private(j)
  do i = 2, n
    x(i) = x(i - 1)
    j = i
    x(j) = 1.0
    c = 2.0
  end do
end subroutine
)");
  EXPECT_EQ(pattern(p, "x"), AccessPattern::MixedUnprovable);
  EXPECT_EQ(pattern(p, "c"), AccessPattern::MixedUnprovable);
}

TEST(ClassifyAccess, ExclusiveNeedsSameIndexForm) {
  Program p = parse(R"(subroutine e(x, y, n, k)
  integer, intent(in) :: n, k
  real, intent(inout) :: x(n), y(n)
  integer :: i
!$omp parallel do
  do i = 1, n/3
    x(3*i - 2 + k) = x(k + 3*i - 2)*2.0
    y(i) = y(i + 1)
  end do
end subroutine
)");
  EXPECT_EQ(pattern(p, "x"), AccessPattern::ExclusiveSingleThread);
  EXPECT_EQ(pattern(p, "y"), AccessPattern::MixedUnprovable);
}

TEST(ClassifyAccess, RegionStatementsOutsideWorksharingAreNotExclusive) {
  Program p = parse(R"(subroutine r(x, n)
  integer, intent(in) :: n
  real, intent(inout) :: x(n)
  integer :: i
!$omp parallel private(i)
  x(1) = 0.0
!$omp do
  do i = 1, n
    x(i) = 1.0
  end do
!$omp end parallel
end subroutine
)");
  EXPECT_EQ(pattern(p, "x"), AccessPattern::MixedUnprovable);
}

TEST(Summarize, ListsSharedVariablesOnly) {
  Program p = parse(embedded_fixture_sources().at("firstprivate_overwrite"));
  auto rows = summarize(propagate_scoping(build_cfg(p)));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].variable, "arr");
  EXPECT_EQ(rows[0].pattern, AccessPattern::ExclusiveSingleThread);
}

TEST(AffineIn, Forms) {
  auto idx = [](const char* text) {
    Program p = parse(std::string("subroutine f(x, n, m)\n  integer, intent(in) :: n, m\n  real, intent(inout) :: x(n)\n"
                                  "  integer :: i, j\n  x(") +
                      text + ") = 0.0\nend subroutine\n");
    return std::get<Assign>(p.body[0].node).lhs.index;
  };
  auto a = affine_in(*idx("3*i - 2"), "i", {});
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, (AffineIndex{3, -2, {}}));
  a = affine_in(*idx("2*(i + n) - i + 1"), "i", {});
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, (AffineIndex{1, 1, {{"n", 2}}}));
  a = affine_in(*idx("i + n*m"), "i", {});
  ASSERT_TRUE(a);
  EXPECT_EQ(a->coefficient, 1);
  EXPECT_EQ(a->terms.size(), 1u);
  EXPECT_FALSE(affine_in(*idx("i*i"), "i", {}));
  EXPECT_FALSE(affine_in(*idx("mod(i, n)"), "i", {}));
  EXPECT_FALSE(affine_in(*idx("i + j"), "i", {"j"}));
  a = affine_in(*idx("n - n + i - i + 4"), "i", {});
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, (AffineIndex{0, 4, {}}));
}

// Brute force: two statements touching one location depend on each other iff
// swapping them can change the final state.
TEST(DependencyRule, MatchesSwapOracle) {
  auto text = [](AccessKind k, int slot) {
    std::string c = slot == 1 ? "2.5" : "1.5";
    switch (k) {
      case AccessKind::Read: return "  r" + std::to_string(slot) + " = v*" + c + "\n";
      case AccessKind::Write: return "  v = " + c + "\n";
      case AccessKind::Increment: return "  v += " + c + "\n";
    }
    return std::string();
  };
  auto program = [](const std::string& s1, const std::string& s2) {
    return parse("subroutine b(v, r1, r2)\n  real, intent(inout) :: v, r1, r2\n" + s1 + s2 + "end subroutine\n");
  };
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(-100, 100);
  const AccessKind kinds[] = {AccessKind::Read, AccessKind::Write, AccessKind::Increment};
  for (AccessKind k1 : kinds) {
    for (AccessKind k2 : kinds) {
      Program forward = program(text(k1, 1), text(k2, 2));
      Program swapped = program(text(k2, 2), text(k1, 1));
      bool differs = false;
      for (int trial = 0; trial < 20; ++trial) {
        Bindings in;
        in.reals["v"] = {static_cast<double>(pick(rng))};
        in.reals["r1"] = {static_cast<double>(pick(rng))};
        in.reals["r2"] = {static_cast<double>(pick(rng))};
        differs |= execute(forward, in).values.reals != execute(swapped, in).values.reals;
      }
      EXPECT_EQ(differs, has_dependency(k1, k2))
          << static_cast<int>(k1) << " then " << static_cast<int>(k2);
    }
  }
}
