// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "adomp/frontend.hpp"
#include "adomp/verify.hpp"

using namespace adomp;

namespace {

bool all_pass(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

const CheckReport& find(const std::vector<CheckReport>& reports, const std::string& check) {
  for (const auto& r : reports)
    if (r.check == check) return r;
  throw std::runtime_error("missing check " + check);
}

}  // namespace

TEST(Verify, FixtureCatalogue) {
  std::vector<std::string> names;
  for (const auto& s : fixture_specs()) names.push_back(s.name);
  for (const char* want : {"elementary", "linear", "scope_private", "scope_firstprivate", "scope_reduction",
                           "scope_lastprivate", "scope_shared_exclusive", "scope_shared_readonly",
                           "scope_shared_atomic", "stencil_small", "stencil_large", "stencil_compact", "lbm", "gfmc"})
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  EXPECT_THROW(fixture_spec("nope"), Error);
  // Every fixture also runs with the pragmas stripped.
  for (const auto& s : fixture_specs()) EXPECT_NO_THROW(execute(parse(s.source, false), make_inputs(s, 1))) << s.name;
}

TEST(Verify, InputsAreSeededAndSized) {
  const auto& lbm = fixture_spec("lbm");
  Bindings a = make_inputs(lbm, 3);
  Bindings b = make_inputs(lbm, 3);
  Bindings c = make_inputs(lbm, 4);
  EXPECT_EQ(a.reals.at("f").size(), 9u * 32 * 32);
  EXPECT_EQ(a.reals.at("f"), b.reals.at("f"));
  EXPECT_NE(a.reals.at("f"), c.reals.at("f"));
  EXPECT_EQ(a.ints.at("nsteps"), 4);
  EXPECT_DOUBLE_EQ(a.scalar("omega"), 1.2);
  for (double v : a.reals.at("f")) {
    EXPECT_GE(v, 0.05);
    EXPECT_LT(v, 0.15);
  }
}

TEST(Verify, VariantNames) {
  for (Variant v : {Variant::Atomic, Variant::Reduction, Variant::OverrideShared})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_FALSE(parse_variant("shared").has_value());
  EXPECT_EQ(adjoint_options(fixture_spec("linear"), Variant::Atomic).privatization_budget, 0u);
  EXPECT_EQ(adjoint_options(fixture_spec("linear"), Variant::Reduction).privatization_budget, kUnlimitedBudget);
}

// y = 2x is exact in the tangent; only rounding in the primal differences remains.
TEST(Verify, LinearTangentIsExact) {
  auto r = check_tangent(fixture_spec("linear"), 1);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.error, 1e-12);
}

TEST(Verify, StencilTangentFourThreads) {
  auto r = check_tangent(fixture_spec("stencil_small"), 4);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_LE(r.error, 1e-6);
}

TEST(Verify, DynamicScheduleTangent) {
  auto r = check_tangent(fixture_spec("gfmc"), 3, 7);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Verify, StencilAtomicEightThreads) {
  auto reports = check_adjoint(fixture_spec("stencil_small"), 8, Variant::Atomic);
  EXPECT_TRUE(all_pass(reports));
  EXPECT_LE(find(reports, "dot_product").error, kDotTolerance);
  EXPECT_LE(find(reports, "serial_parallel").error, kSerialTolerance);
}

TEST(Verify, StencilReductionVariant) {
  const auto& spec = fixture_spec("stencil_small");
  EXPECT_TRUE(all_pass(check_adjoint(spec, 4, Variant::Reduction)));
  std::string text = emit(differentiate_adjoint(parse(spec.source), adjoint_options(spec, Variant::Reduction)));
  EXPECT_NE(text.find("reduction(+:ub)"), std::string::npos);
}

TEST(Verify, CompactOverrideIsBitExact) {
  auto reports = check_adjoint(fixture_spec("stencil_compact"), 8, Variant::OverrideShared);
  EXPECT_TRUE(all_pass(reports));
  EXPECT_EQ(find(reports, "serial_bitwise").tolerance, 0.0);
  EXPECT_TRUE(find(reports, "no_atomics_or_reductions").pass);
}

TEST(Verify, InapplicableVariantIsRejected) {
  EXPECT_THROW(check_adjoint(fixture_spec("stencil_small"), 2, Variant::OverrideShared), Error);
  EXPECT_THROW(check_adjoint(fixture_spec("stencil_compact"), 2, Variant::Atomic), Error);
}

TEST(Verify, LbmAndGfmc) {
  for (const char* name : {"lbm", "gfmc"})
    for (Variant v : {Variant::Atomic, Variant::Reduction}) EXPECT_TRUE(all_pass(check_adjoint(fixture_spec(name), 4, v)));
}

TEST(Verify, BenchRows) {
  auto rows = bench(fixture_spec("scope_private"), {1, 2});
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& r : rows) {
    EXPECT_GE(r.seconds, 0.0);
    EXPECT_GT(r.speedup, 0.0);
  }
  EXPECT_EQ(rows[0].threads, 0);
  EXPECT_EQ(rows[0].mode, "primal");
  EXPECT_EQ(rows[8].mode, "adjoint");
}

TEST(Verify, BenchEmptyLoopIsNearZero) {
  FixtureSpec s;
  s.name = "empty";
  s.source = R"(subroutine empty(x, n)
  integer, intent(in) :: n
  real, intent(inout), active :: x
  integer :: i
!$omp parallel do
  do i = 1, n
  end do
end subroutine
)";
  s.sizes = {{"n", 10}};
  s.inputs = {"x"};
  s.outputs = {"x"};
  s.variants = {Variant::Atomic};
  for (const auto& r : bench(s, {1, 2})) EXPECT_LT(r.seconds, 0.5) << r.mode << " " << r.threads;
}
