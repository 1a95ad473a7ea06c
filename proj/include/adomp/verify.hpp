// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adomp/adjoint.hpp"
#include "adomp/executor.hpp"

namespace adomp {

enum class Variant { Atomic, Reduction, OverrideShared };

std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& text);

struct FixtureSpec {
  std::string name;
  std::string source;
  /// Integer parameters (mesh sizes, step counts).
  std::map<std::string, std::int64_t> sizes;
  /// Inactive real parameters.
  std::map<std::string, double> constants;
  /// Active `in`/`inout` parameters, drawn uniformly from [lo, hi).
  std::vector<std::string> inputs;
  /// Active `out`/`inout` parameters.
  std::vector<std::string> outputs;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<Variant> variants;
};

/// Every differentiable fixture, in a fixed order.
const std::vector<FixtureSpec>& fixture_specs();
const FixtureSpec& fixture_spec(const std::string& name);

/// Inputs for `spec`; array lengths follow the declared extents.
Bindings make_inputs(const FixtureSpec& spec, std::uint64_t seed);

/// Adjoint options selecting `variant`: a zero privatization budget forces
/// atomics, an unlimited one forces reductions.
AdjointOptions adjoint_options(const FixtureSpec& spec, Variant variant);

struct CheckReport {
  std::string fixture;
  std::string check;
  std::string variant;
  int threads = 1;
  std::uint64_t seed = 0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Location of the worst mismatch or other context.
  std::string detail;
};

inline constexpr double kFdStep = 1e-7;
inline constexpr double kFdTolerance = 1e-6;
inline constexpr double kDotTolerance = 1e-9;
inline constexpr double kSerialTolerance = 1e-9;

/// Central differences of the primal against the tangent along a random
/// direction; error is max |fd - td| / max(|td|, 1) over all outputs.
CheckReport check_tangent(const FixtureSpec& spec, int nthreads, std::uint64_t seed = 1);

/// Dot-product identity, agreement with the serial adjoint, tape balance,
/// and for OverrideShared the absence of atomics and reductions.
/// Throws Error if `variant` is not listed for the fixture.
std::vector<CheckReport> check_adjoint(const FixtureSpec& spec, int nthreads, Variant variant,
                                       std::uint64_t seed = 1);

struct BenchRow {
  std::string fixture;
  std::string mode;
  int threads = 1;
  double seconds = 0.0;
  /// Serial-executable time of the same mode divided by this time.
  double speedup = 1.0;
};

/// Wall-clock timings of primal, tangent and adjoint runs. Threads 0 denotes
/// the serial executable built from the pragma-free program.
std::vector<BenchRow> bench(const FixtureSpec& spec, const std::vector<int>& threads, int repeats = 1);

}  // namespace adomp
