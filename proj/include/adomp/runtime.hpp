// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "adomp/error.hpp"

namespace adomp {

/// Byte-packed LIFO of mixed-type values stored in a doubly linked list of
/// fixed-size blocks. A value may straddle two adjacent blocks. Blocks are
/// kept for reuse once allocated.
///
/// A stack belongs to one thread. Debug builds reject use from any other
/// thread; `enable_pairing_check` additionally records the pushing thread of
/// every value and faults if it is popped elsewhere.
class TapeStack {
 public:
  static constexpr std::size_t kBlockSize = 64 * 1024;

  struct Snapshot {
    const void* block = nullptr;
    std::size_t offset = 0;
    std::size_t depth = 0;
    std::uint64_t push_epoch = 0;
  };

  explicit TapeStack(int thread_id = 0);
  ~TapeStack();
  TapeStack(const TapeStack&) = delete;
  TapeStack& operator=(const TapeStack&) = delete;
  TapeStack(TapeStack&&) noexcept;
  TapeStack& operator=(TapeStack&&) noexcept;

  void push_bytes(const void* data, std::size_t n);
  void pop_bytes(void* out, std::size_t n);

  template <class T>
  void push(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    push_bytes(&value, sizeof(T));
  }
  template <class T>
  T pop() {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    pop_bytes(&value, sizeof(T));
    return value;
  }

  void push_real8(double v) { push(v); }
  double pop_real8() { return pop<double>(); }
  /// Faults if `v` does not fit in 32 bits.
  void push_integer4(std::int64_t v);
  std::int64_t pop_integer4() { return pop<std::int32_t>(); }
  void push_integer8(std::int64_t v) { push(v); }
  std::int64_t pop_integer8() { return pop<std::int64_t>(); }

  /// Un-popped bytes.
  std::size_t depth() const { return depth_; }
  bool empty() const { return depth_ == 0; }
  std::size_t allocated_blocks() const { return block_count_; }

  Snapshot save_top() const;
  /// Rewinds the read position to `s`. Faults if anything was pushed since.
  void restore_top(const Snapshot& s);

  int thread_id() const { return thread_id_; }
  void set_thread_id(int tid) { thread_id_ = tid; }
  void enable_pairing_check(bool on);

 private:
  struct Block;
  void check_owner();
  void free_blocks();
  [[noreturn]] void underflow(std::size_t want) const;

  Block* head_ = nullptr;     // first block of the chain
  Block* current_ = nullptr;  // block holding the top byte
  std::size_t offset_ = 0;    // fill of current_
  std::size_t depth_ = 0;
  std::size_t block_count_ = 0;
  std::uint64_t push_epoch_ = 0;
  int thread_id_ = 0;
#ifndef NDEBUG
  std::optional<std::thread::id> owner_;
#endif
  bool pairing_check_ = false;
  std::vector<std::pair<std::thread::id, std::size_t>> shadow_;
};

/// Per-thread state of the dynamic-schedule recorder.
struct ChunkLog {
  bool recording = false;
  bool have_chunk = false;
  std::int64_t chunk_start = 0;
  std::int64_t previous = 0;
  std::int64_t count = 0;
};

/// Arms first-chunk capture for one worksharing-loop instance.
void dynamic_init(ChunkLog& log);
/// Called at the top of every iteration. A jump `counter - previous != stride`
/// closes the running chunk; its (start, end) pair goes onto `tape`.
void dynamic_record(ChunkLog& log, TapeStack& tape, std::int64_t counter, std::int64_t stride);
/// Closes the last chunk and pushes the chunk count.
void dynamic_finalize(ChunkLog& log, TapeStack& tape);

/// Pops the chunks written by one record phase, newest first.
class DynamicReplay {
 public:
  explicit DynamicReplay(TapeStack& tape);
  std::int64_t remaining() const { return remaining_; }
  /// Next (chunk_start, chunk_end), or nullopt once all chunks are consumed.
  std::optional<std::pair<std::int64_t, std::int64_t>> next();

 private:
  TapeStack& tape_;
  std::int64_t remaining_;
};

/// Number of logical iterations of `do i = start, end, stride`.
std::int64_t trip_count(std::int64_t start, std::int64_t end, std::int64_t stride);

/// Contiguous block of the iteration space owned by `tid`. An empty block is
/// returned as (s, s - stride).
std::pair<std::int64_t, std::int64_t> static_schedule(std::int64_t start, std::int64_t end, std::int64_t stride,
                                                      int nthreads, int tid);

/// Linearizable `location += delta`.
void atomic_add(double& location, double delta);

/// Everything one executing thread needs for the runtime entry points.
struct ThreadRuntime {
  explicit ThreadRuntime(int tid = 0, int nthreads = 1) : tape(tid), tid(tid), nthreads(nthreads) {}
  TapeStack tape;
  ChunkLog chunks;
  int tid;
  int nthreads;
};

}  // namespace adomp
