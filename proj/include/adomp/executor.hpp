// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adomp/ast.hpp"
#include "adomp/error.hpp"

namespace adomp {

/// Named values passed into and out of a routine. Real scalars are
/// one-element vectors.
struct Bindings {
  std::map<std::string, std::vector<double>> reals;
  std::map<std::string, std::int64_t> ints;

  double scalar(const std::string& name) const { return reals.at(name).at(0); }
};

struct ExecOptions {
  int nthreads = 1;
  /// Replaces the schedule clause of every worksharing loop.
  std::optional<Schedule> schedule_override;
  /// Chunk size for `schedule(dynamic)` without an explicit chunk.
  std::int64_t dynamic_chunk = 1;
  /// When set, dynamic chunks go to pseudo-random threads drawn from this seed
  /// instead of first-come dispatch.
  std::optional<std::uint64_t> perturb_seed;
  /// Fault if a tape value is popped by a thread other than its pusher.
  bool pairing_check = false;
};

struct ExecResult {
  /// Final values of every routine parameter.
  Bindings values;
  /// Un-popped tape bytes per thread at exit: index 0 is the serial
  /// (coordinator) tape, 1..nthreads the worker tapes.
  std::vector<std::size_t> tape_depths;
};

/// Thread count from ADOMP_NUM_THREADS, or `fallback`.
int default_thread_count(int fallback = 1);

/// Runs `program`. Every `in`/`inout` parameter must be bound; `out`
/// parameters and locals start at zero. Throws RuntimeFault.
ExecResult execute(const Program& program, const Bindings& inputs, const ExecOptions& options = {});

/// Runs an adjoint routine: `<y>b` of every seeded output is set from
/// `seeds`, every other adjoint parameter starts at zero unless bound in
/// `inputs`.
ExecResult run_adjoint(const Program& adjoint, const Bindings& inputs,
                       const std::map<std::string, std::vector<double>>& seeds, const ExecOptions& options = {});

}  // namespace adomp
