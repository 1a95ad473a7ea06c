// SPDX-License-Identifier: Apache-2.0
#include "adomp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <random>

#include "ad_common.hpp"
#include "adomp/fixtures.hpp"
#include "adomp/frontend.hpp"
#include "adomp/tangent.hpp"

namespace adomp {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Atomic: return "atomic";
    case Variant::Reduction: return "reduction";
    case Variant::OverrideShared: return "override_shared";
  }
  return "?";
}

std::optional<Variant> parse_variant(const std::string& text) {
  for (Variant v : {Variant::Atomic, Variant::Reduction, Variant::OverrideShared})
    if (to_string(v) == text) return v;
  return std::nullopt;
}

namespace {

FixtureSpec spec(std::string name, std::map<std::string, std::int64_t> sizes, std::vector<std::string> inputs,
                 std::vector<std::string> outputs, double lo, double hi,
                 std::vector<Variant> variants = {Variant::Atomic, Variant::Reduction}) {
  FixtureSpec s;
  s.source = embedded_fixture_sources().at(name);
  s.name = std::move(name);
  s.sizes = std::move(sizes);
  s.inputs = std::move(inputs);
  s.outputs = std::move(outputs);
  s.lo = lo;
  s.hi = hi;
  s.variants = std::move(variants);
  return s;
}

std::vector<FixtureSpec> make_specs() {
  std::vector<FixtureSpec> v;
  v.push_back(spec("elementary", {}, {"x", "y"}, {"z"}, 0.5, 1.5));
  v.push_back(spec("linear", {{"n", 1000}}, {"x"}, {"y"}, -1.0, 1.0));
  v.push_back(spec("scope_private", {{"n", 257}}, {"x"}, {"y"}, 0.2, 1.2));
  v.push_back(spec("scope_firstprivate", {{"n", 257}}, {"a", "x"}, {"y"}, 0.2, 1.2));
  v.push_back(spec("scope_reduction", {{"n", 257}}, {"x"}, {"r"}, 0.2, 1.2));
  v.push_back(spec("scope_lastprivate", {{"n", 257}}, {"x"}, {"y", "z"}, 0.2, 1.2));
  v.push_back(spec("scope_shared_exclusive", {{"n", 257}}, {"x"}, {"y"}, 0.2, 1.2));
  v.push_back(spec("scope_shared_readonly", {{"n", 257}}, {"x"}, {"y"}, 0.2, 1.2));
  v.push_back(spec("scope_shared_atomic", {{"n", 257}}, {"x", "s"}, {"s"}, 0.2, 1.2));
  FixtureSpec small = spec("stencil_small", {{"n", 10000}, {"nsteps", 8}}, {"u"}, {"u"}, -1.0, 1.0);
  small.constants = {{"a", 0.25}, {"b", 0.5}, {"c", 0.25}};
  v.push_back(std::move(small));
  v.push_back(spec("stencil_large", {{"n", 10000}, {"nsteps", 8}}, {"u"}, {"u"}, -1.0, 1.0));
  v.push_back(spec("stencil_compact", {{"n", 10000}, {"nsteps", 8}}, {"u"}, {"u"}, -1.0, 1.0,
                   {Variant::OverrideShared}));
  FixtureSpec lbm = spec("lbm", {{"nx", 32}, {"ny", 32}, {"nsteps", 4}}, {"f"}, {"f"}, 0.05, 0.15);
  lbm.constants = {{"omega", 1.2}};
  v.push_back(std::move(lbm));
  v.push_back(spec("gfmc", {{"n", 2000}, {"m", 40}}, {"w"}, {"e"}, 0.2, 1.5));
  return v;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ExecOptions exec_options(int nthreads, std::uint64_t seed) {
  ExecOptions o;
  o.nthreads = nthreads;
  if (nthreads > 1) o.perturb_seed = seed;
  return o;
}

std::string cell(const std::string& var, std::size_t i) { return var + "(" + std::to_string(i + 1) + ")"; }

}  // namespace

const std::vector<FixtureSpec>& fixture_specs() {
  static const std::vector<FixtureSpec> specs = make_specs();
  return specs;
}

const FixtureSpec& fixture_spec(const std::string& name) {
  for (const auto& s : fixture_specs())
    if (s.name == name) return s;
  throw Error("unknown fixture '" + name + "'");
}

Bindings make_inputs(const FixtureSpec& spec, std::uint64_t seed) {
  Program p = parse(spec.source);
  Bindings in;
  for (const auto& [k, v] : spec.sizes) in.ints[k] = v;
  for (const auto& [k, v] : spec.constants) in.reals[k] = {v};
  std::mt19937_64 rng(seed);
  for (const auto& name : spec.inputs) {
    const VarDecl* d = p.find(name);
    std::size_t n = 1;
    if (d->is_array()) {
      auto extent = detail::eval_int_const(*d->extent, spec.sizes);
      if (!extent) throw Error("fixture '" + spec.name + "': extent of '" + name + "' is not fixed by its sizes");
      n = static_cast<std::size_t>(*extent);
    }
    in.reals[name] = random_vector(n, rng, spec.lo, spec.hi);
  }
  return in;
}

AdjointOptions adjoint_options(const FixtureSpec& spec, Variant variant) {
  AdjointOptions o;
  o.size_hints = spec.sizes;
  if (variant == Variant::Atomic) o.privatization_budget = 0;
  if (variant == Variant::Reduction) o.privatization_budget = kUnlimitedBudget;
  return o;
}

CheckReport check_tangent(const FixtureSpec& spec, int nthreads, std::uint64_t seed) {
  Program primal = parse(spec.source);
  Program tangent = differentiate_tangent(primal);
  Bindings in = make_inputs(spec, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

  Bindings plus = in, minus = in, tin = in;
  for (const auto& v : spec.inputs) {
    const auto& x = in.reals.at(v);
    std::vector<double> dir = random_vector(x.size(), rng);
    auto& xp = plus.reals[v];
    auto& xm = minus.reals[v];
    std::vector<double> effective(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + kFdStep * dir[i];
      xm[i] = x[i] - kFdStep * dir[i];
      // The step actually representable in floating point.
      effective[i] = (xp[i] - xm[i]) / (2 * kFdStep);
    }
    tin.reals[v + "d"] = effective;
  }

  ExecOptions o = exec_options(nthreads, seed);
  auto td = execute(tangent, tin, o).values;
  auto fp = execute(primal, plus, o).values;
  auto fm = execute(primal, minus, o).values;

  CheckReport r{spec.name, "tangent_fd", "", nthreads, seed, 0.0, kFdTolerance, false, ""};
  for (const auto& y : spec.outputs) {
    const auto& d = td.reals.at(y + "d");
    const auto& a = fp.reals.at(y);
    const auto& b = fm.reals.at(y);
    for (std::size_t i = 0; i < d.size(); ++i) {
      double fd = (a[i] - b[i]) / (2 * kFdStep);
      double err = std::abs(fd - d[i]) / std::max(std::abs(d[i]), 1.0);
      if (err > r.error || r.detail.empty()) {
        r.error = err;
        r.detail = "worst " + cell(y, i);
      }
    }
  }
  r.pass = r.error <= r.tolerance;
  return r;
}

std::vector<CheckReport> check_adjoint(const FixtureSpec& spec, int nthreads, Variant variant, std::uint64_t seed) {
  if (std::find(spec.variants.begin(), spec.variants.end(), variant) == spec.variants.end())
    throw Error("variant " + to_string(variant) + " does not apply to fixture '" + spec.name + "'");
  const std::string vname = to_string(variant);
  AdjointOptions opt = adjoint_options(spec, variant);
  Program primal = parse(spec.source);
  Program tangent = differentiate_tangent(primal);
  Program adjoint = differentiate_adjoint(primal, opt);
  Program serial = differentiate_adjoint(parse(spec.source, false), opt);

  Bindings in = make_inputs(spec, seed);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  Bindings tin = in;
  for (const auto& v : spec.inputs) tin.reals[v + "d"] = random_vector(in.reals.at(v).size(), rng);

  ExecOptions o = exec_options(nthreads, seed);
  auto td = execute(tangent, tin, o).values;
  std::map<std::string, std::vector<double>> seeds;
  double lhs = 0.0;
  for (const auto& y : spec.outputs) {
    const auto& d = td.reals.at(y + "d");
    seeds[y] = random_vector(d.size(), rng);
    lhs += dot(d, seeds[y]);
  }
  ExecOptions ao = o;
  ao.pairing_check = true;
  ExecResult par = run_adjoint(adjoint, in, seeds, ao);
  double rhs = 0.0;
  for (const auto& v : spec.inputs) rhs += dot(par.values.reals.at(v + "b"), tin.reals.at(v + "d"));

  std::vector<CheckReport> out;
  CheckReport dp{spec.name, "dot_product", vname, nthreads, seed, 0.0, kDotTolerance, false, ""};
  dp.error = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1.0);
  dp.pass = dp.error <= dp.tolerance;
  dp.detail = "tangent " + std::to_string(lhs) + " adjoint " + std::to_string(rhs);
  out.push_back(dp);

  CheckReport tape{spec.name, "tape_balance", vname, nthreads, seed, 0.0, 0.0, true, ""};
  for (std::size_t t = 0; t < par.tape_depths.size(); ++t) {
    if (par.tape_depths[t] == 0) continue;
    tape.pass = false;
    tape.error = std::max(tape.error, static_cast<double>(par.tape_depths[t]));
    tape.detail = "thread " + std::to_string(t) + " holds " + std::to_string(par.tape_depths[t]) + " bytes";
  }
  out.push_back(tape);

  const bool exact = variant == Variant::OverrideShared;
  ExecResult ser = run_adjoint(serial, in, seeds);
  CheckReport sp{spec.name, exact ? "serial_bitwise" : "serial_parallel", vname, nthreads, seed, 0.0,
                 exact ? 0.0 : kSerialTolerance, true, ""};
  for (const auto& v : spec.inputs) {
    const auto& a = par.values.reals.at(v + "b");
    const auto& b = ser.values.reals.at(v + "b");
    for (std::size_t i = 0; i < a.size(); ++i) {
      double err = std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1.0);
      bool same = std::memcmp(&a[i], &b[i], sizeof(double)) == 0;
      if (exact && !same && sp.pass) {
        sp.pass = false;
        sp.detail = "first difference at " + cell(v + "b", i);
      }
      if (err > sp.error) {
        sp.error = err;
        if (!exact) sp.detail = "worst " + cell(v + "b", i);
      }
    }
  }
  if (!exact) sp.pass = sp.error <= sp.tolerance;
  out.push_back(sp);

  if (exact) {
    std::string text = emit(adjoint);
    std::size_t atomics = 0, reductions = 0;
    for (auto p = text.find("!$omp atomic"); p != std::string::npos; p = text.find("!$omp atomic", p + 1)) ++atomics;
    for (auto p = text.find("reduction("); p != std::string::npos; p = text.find("reduction(", p + 1)) ++reductions;
    CheckReport st{spec.name, "no_atomics_or_reductions", vname, nthreads, seed,
                   static_cast<double>(atomics + reductions), 0.0, atomics + reductions == 0, ""};
    st.detail = std::to_string(atomics) + " atomic, " + std::to_string(reductions) + " reduction";
    out.push_back(st);
  }
  return out;
}

std::vector<BenchRow> bench(const FixtureSpec& spec, const std::vector<int>& threads, int repeats) {
  Program primal = parse(spec.source);
  Program primal_serial = parse(spec.source, false);
  Variant variant = spec.variants.front();
  AdjointOptions opt = adjoint_options(spec, variant);
  struct Mode {
    std::string name;
    Program serial;
    Program parallel;
    bool adjoint;
  };
  std::vector<Mode> modes{
      {"primal", primal_serial, primal, false},
      {"tangent", differentiate_tangent(primal_serial), differentiate_tangent(primal), false},
      {"adjoint", differentiate_adjoint(primal_serial, opt), differentiate_adjoint(primal, opt), true},
  };
  Bindings in = make_inputs(spec, 1);
  Bindings tin = in;
  for (const auto& v : spec.inputs) tin.reals[v + "d"] = std::vector<double>(in.reals.at(v).size(), 1.0);

  auto time = [&](const Mode& m, const Program& prog, int nthreads) {
    double best = 1e300;
    for (int k = 0; k < std::max(repeats, 1); ++k) {
      ExecOptions o;
      o.nthreads = nthreads;
      auto t0 = std::chrono::steady_clock::now();
      if (m.adjoint) {
        std::map<std::string, std::vector<double>> s;
        for (const auto& y : spec.outputs) {
          const VarDecl* d = primal.find(y);
          std::size_t n = 1;
          if (d->is_array()) n = static_cast<std::size_t>(*detail::eval_int_const(*d->extent, spec.sizes));
          s[y] = std::vector<double>(n, 1.0);
        }
        run_adjoint(prog, in, s, o);
      } else {
        execute(prog, m.name == "tangent" ? tin : in, o);
      }
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };

  std::vector<BenchRow> rows;
  for (const auto& m : modes) {
    double base = time(m, m.serial, 1);
    rows.push_back({spec.name, m.name, 0, base, 1.0});
    for (int t : threads) {
      double s = time(m, m.parallel, t);
      rows.push_back({spec.name, m.name, t, s, s > 0 ? base / s : 0.0});
    }
  }
  return rows;
}

}  // namespace adomp
