// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "adomp/executor.hpp"
#include "adomp/frontend.hpp"
#include "adomp/tangent.hpp"

using namespace adomp;

namespace {

std::string body_text(const Program& p) { return emit(p.body, 0); }

const char* kElementary = R"(subroutine elem(x, y, z)
  real, intent(in), active :: x, y
  real, intent(out), active :: z
  z = x*y
end subroutine
)";

const char* kStencil = R"(subroutine stencil(a, b, c, arr_in, arr_out, n)
  integer, intent(in) :: n
  real, intent(in) :: a, b, c
  real, intent(in), active :: arr_in(n)
  real, intent(out), active :: arr_out(n)
  integer :: i
!$omp parallel do shared(arr_in, arr_out)
  do i = 2, n - 1
    arr_out(i) = a*arr_in(i - 1) + b*arr_in(i) + c*arr_in(i + 1)
  end do
end subroutine
)";

const char* kNonlinear = R"(subroutine f(x, y, s, n)
  integer, intent(in) :: n
  real, intent(in), active :: x(n)
  real, intent(out), active :: y(n)
  real, intent(inout), active :: s
  real :: t, w
  integer :: i
  s = 0.0
!$omp parallel do private(t) lastprivate(w) reduction(+:s)
  do i = 1, n
    t = sin(x(i))*exp(x(i)/3.0) - cos(x(i))
    w = sqrt(x(i)*x(i) + 1.0)/(2.0 + t*t)
    y(i) = t*w - x(i)/w
    s += y(i)*t
  end do
  y(1) = y(1) + s*w
end subroutine
)";

}  // namespace

TEST(Tangent, ElementaryProduct) {
  Program t = differentiate_tangent(parse(kElementary));
  EXPECT_EQ(t.name, "elem_d");
  EXPECT_EQ(t.params, (std::vector<std::string>{"x", "xd", "y", "yd", "z", "zd"}));
  EXPECT_EQ(body_text(t), "zd = xd*y + x*yd\nz = x*y\n");
  EXPECT_EQ(t.find("zd")->intent, Intent::Out);
  EXPECT_EQ(t.find("xd")->intent, Intent::In);
}

TEST(Tangent, ElementarySumIsLinear) {
  Program p = parse("subroutine s(x, y, z)\n  real, intent(in), active :: x, y\n  real, intent(out), active :: z\n"
                    "  z = x + y\nend subroutine\n");
  EXPECT_EQ(body_text(differentiate_tangent(p)), "zd = xd + yd\nz = x + y\n");
}

TEST(Tangent, PassiveRightHandSideZeroes) {
  Program p = parse("subroutine s(x, c, z)\n  real, intent(in), active :: x\n  real, intent(in) :: c\n"
                    "  real, intent(out), active :: z\n  z = x\n  z = 2.0*c\nend subroutine\n");
  EXPECT_EQ(body_text(differentiate_tangent(p)), "zd = xd\nz = x\nzd = 0.0\nz = 2.0*c\n");
}

TEST(Tangent, IntrinsicRules) {
  Program p = parse("subroutine s(x, z)\n  real, intent(in), active :: x\n  real, intent(out), active :: z\n"
                    "  z = sin(x) + cos(x) + exp(x) + sqrt(x)\nend subroutine\n");
  EXPECT_EQ(body_text(differentiate_tangent(p)),
            "zd = xd*cos(x) - xd*sin(x) + xd*exp(x) + xd/(2.0*sqrt(x))\nz = sin(x) + cos(x) + exp(x) + sqrt(x)\n");
}

TEST(Tangent, IntrinsicValuesMatchAnalyticDerivative) {
  Program p = differentiate_tangent(parse(
      "subroutine s(x, z)\n  real, intent(in), active :: x\n  real, intent(out), active :: z\n"
      "  z = sin(x)*exp(x)/sqrt(x) - cos(x)\nend subroutine\n"));
  for (double x : {0.3, 1.0, 2.7}) {
    Bindings in;
    in.reals["x"] = {x};
    in.reals["xd"] = {1.0};
    double got = execute(p, in).values.scalar("zd");
    double f = std::sin(x) * std::exp(x);
    double df = std::cos(x) * std::exp(x) + f;
    double g = std::sqrt(x);
    double dg = 0.5 / g;
    double want = (df * g - f * dg) / (g * g) + std::sin(x);
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(Tangent, StencilClausesInheritScoping) {
  Program t = differentiate_tangent(parse(kStencil));
  std::string text = emit(t);
  EXPECT_NE(text.find("!$omp parallel do shared(arr_in, arr_ind, arr_out, arr_outd)"), std::string::npos) << text;
  EXPECT_NE(text.find("arr_outd(i) = a*arr_ind(i - 1) + b*arr_ind(i) + c*arr_ind(i + 1)\n"), std::string::npos)
      << text;
  EXPECT_EQ(parse(text), t);
}

TEST(Tangent, EveryActiveClauseEntryIsDuplicated) {
  Program p = parse(kNonlinear);
  Program t = differentiate_tangent(p);
  const auto& primal = std::get<ParallelLoop>(p.body[1].node).clauses;
  const auto& tangent = std::get<ParallelLoop>(t.body[2].node).clauses;
  for (const auto& [v, entry] : primal.scoping) {
    EXPECT_EQ(tangent.scoping.at(v), entry) << v;
    if (p.find(v)->type == BaseType::Real) {
      EXPECT_EQ(tangent.scoping.at(v + "d"), entry) << v;
    }
  }
  EXPECT_EQ(tangent.scoping.at("td").scope, Scope::Private);
  EXPECT_EQ(tangent.scoping.at("wd").scope, Scope::LastPrivate);
  EXPECT_EQ(tangent.scoping.at("sd").scope, Scope::ReductionSum);
}

TEST(Tangent, AtomicIncrementStaysAtomic) {
  Program p = parse(R"(subroutine a(x, s, n)
  integer, intent(in) :: n
  real, intent(in), active :: x(n)
  real, intent(inout), active :: s
  integer :: i
!$omp parallel do
  do i = 1, n
!$omp atomic
    s += x(i)*x(i)
  end do
end subroutine
)");
  Program t = differentiate_tangent(p);
  const auto& loop = std::get<ParallelLoop>(t.body[0].node);
  ASSERT_EQ(loop.body.size(), 2u);
  const auto& d = std::get<Increment>(loop.body[0].node);
  EXPECT_EQ(d.lhs.name, "sd");
  EXPECT_TRUE(d.atomic);
  EXPECT_TRUE(std::get<Increment>(loop.body[1].node).atomic);
}

TEST(Tangent, OverrideIsDropped) {
  Program p = parse(R"(subroutine o(x, n)
  integer, intent(in) :: n
  real, intent(inout), active :: x(n)
  integer :: i
!$ad omp_adjoint shared(x)
!$omp parallel do shared(x)
  do i = 1, n
    x(i) = x(i)*x(i)
  end do
end subroutine
)");
  Program t = differentiate_tangent(p);
  EXPECT_TRUE(std::get<ParallelLoop>(t.body[0].node).clauses.ad_override.empty());
  EXPECT_EQ(emit(t).find("omp_adjoint"), std::string::npos);
}

TEST(Tangent, Rejections) {
  EXPECT_THROW(differentiate_tangent(parse("subroutine c(x, xd)\n  real, intent(in), active :: x\n"
                                           "  real, intent(in) :: xd\nend subroutine\n")),
               SemanticError);
  EXPECT_THROW(differentiate_tangent(parse(R"(subroutine r(x, n)
  integer, intent(in) :: n
  real, intent(inout), active :: x(n)
  integer :: i
!$omp parallel private(i)
!$omp do
  do i = 1, n
    x(i) = 2.0*x(i)
  end do
!$omp end parallel
end subroutine
)")),
               TransformError);
  EXPECT_THROW(differentiate_tangent(parse(R"(subroutine a(x, n)
  integer, intent(in) :: n
  real, intent(inout), active :: x(n)
  integer :: i
!$omp parallel do
  do i = 1, n
!$omp atomic
    x(1) += x(i)
  end do
end subroutine
)")),
               TransformError);
}

TEST(Tangent, ActivityFlowsThroughLocals) {
  Program p = parse("subroutine l(x, z)\n  real, intent(in), active :: x\n  real, intent(out), active :: z\n"
                    "  real :: t, u\n  u = 3.0\n  t = x*u\n  z = t*t\nend subroutine\n");
  Program t = differentiate_tangent(p);
  EXPECT_NE(t.find("td"), nullptr);
  EXPECT_EQ(t.find("ud"), nullptr);
  EXPECT_EQ(body_text(t), "u = 3.0\ntd = xd*u\nt = x*u\nzd = td*t + t*td\nz = t*t\n");
}

TEST(Tangent, SelfReferenceUsesOldValue) {
  Program p = differentiate_tangent(parse(
      "subroutine q(x)\n  real, intent(inout), active :: x\n  x = x*x\n  x = x*x\nend subroutine\n"));
  Bindings in;
  in.reals["x"] = {1.5};
  in.reals["xd"] = {1.0};
  auto r = execute(p, in);
  EXPECT_DOUBLE_EQ(r.values.scalar("x"), std::pow(1.5, 4));
  EXPECT_DOUBLE_EQ(r.values.scalar("xd"), 4 * std::pow(1.5, 3));
}

// Central differences on the primal are the oracle.
TEST(Tangent, FiniteDifferenceAgreement) {
  Program p = parse(kNonlinear);
  Program t = differentiate_tangent(p);
  const int n = 37;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  Bindings in;
  in.ints["n"] = n;
  std::vector<double> x(n), xd(n);
  for (int i = 0; i < n; ++i) {
    x[i] = u(rng);
    xd[i] = u(rng) - 0.85;
  }
  in.reals["x"] = x;
  in.reals["s"] = {0.0};
  Bindings tin = in;
  tin.reals["xd"] = xd;
  tin.reals["sd"] = {0.0};
  const double h = 1e-7;
  Bindings plus = in, minus = in;
  for (int i = 0; i < n; ++i) {
    plus.reals["x"][i] += h * xd[i];
    minus.reals["x"][i] -= h * xd[i];
  }
  for (int threads : {1, 3, 4}) {
    ExecOptions o;
    o.nthreads = threads;
    auto yd = execute(t, tin, o).values.reals.at("yd");
    auto yp = execute(p, plus, o).values.reals.at("y");
    auto ym = execute(p, minus, o).values.reals.at("y");
    for (int i = 0; i < n; ++i) {
      double fd = (yp[i] - ym[i]) / (2 * h);
      EXPECT_LE(std::abs(fd - yd[i]) / std::max(1.0, std::abs(yd[i])), 1e-6) << i;
    }
  }
}

TEST(Tangent, DeterministicAcrossRunsAndThreads) {
  Program t = differentiate_tangent(parse(kStencil));
  Bindings in;
  in.ints["n"] = 500;
  in.reals["a"] = {0.2};
  in.reals["b"] = {0.5};
  in.reals["c"] = {0.3};
  std::vector<double> v(500);
  for (int i = 0; i < 500; ++i) v[i] = std::cos(0.1 * i);
  in.reals["arr_in"] = v;
  in.reals["arr_ind"] = v;
  auto ref = execute(t, in).values.reals.at("arr_outd");
  for (int threads : {1, 2, 4, 8}) {
    ExecOptions o;
    o.nthreads = threads;
    auto got = execute(t, in, o).values.reals.at("arr_outd");
    EXPECT_EQ(std::memcmp(got.data(), ref.data(), got.size() * sizeof(double)), 0) << threads;
  }
}
