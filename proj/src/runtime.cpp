// SPDX-License-Identifier: Apache-2.0
#include "adomp/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <sstream>
#include <string>

namespace adomp {

struct TapeStack::Block {
  std::unique_ptr<std::byte[]> data{new std::byte[kBlockSize]};
  Block* prev = nullptr;
  Block* next = nullptr;
};

TapeStack::TapeStack(int thread_id) : thread_id_(thread_id) {}

TapeStack::~TapeStack() { free_blocks(); }

void TapeStack::free_blocks() {
  Block* b = head_;
  while (b) {
    Block* n = b->next;
    delete b;
    b = n;
  }
  head_ = current_ = nullptr;
}

TapeStack::TapeStack(TapeStack&& o) noexcept { *this = std::move(o); }

TapeStack& TapeStack::operator=(TapeStack&& o) noexcept {
  if (this == &o) return *this;
  free_blocks();
  head_ = std::exchange(o.head_, nullptr);
  current_ = std::exchange(o.current_, nullptr);
  offset_ = std::exchange(o.offset_, 0);
  depth_ = std::exchange(o.depth_, 0);
  block_count_ = std::exchange(o.block_count_, 0);
  push_epoch_ = o.push_epoch_;
  thread_id_ = o.thread_id_;
#ifndef NDEBUG
  owner_ = std::exchange(o.owner_, std::nullopt);
#endif
  pairing_check_ = o.pairing_check_;
  shadow_ = std::move(o.shadow_);
  return *this;
}

void TapeStack::check_owner() {
#ifndef NDEBUG
  auto me = std::this_thread::get_id();
  if (!owner_) owner_ = me;
  if (*owner_ != me)
    throw RuntimeFault("tape of thread " + std::to_string(thread_id_) + " used from a foreign thread");
#endif
}

void TapeStack::underflow(std::size_t want) const {
  std::ostringstream os;
  os << "tape underflow on thread " << thread_id_ << ": pop of " << want << " bytes at depth " << depth_;
  throw RuntimeFault(os.str());
}

void TapeStack::enable_pairing_check(bool on) {
  pairing_check_ = on;
  shadow_.clear();
}

void TapeStack::push_bytes(const void* data, std::size_t n) {
  check_owner();
  if (pairing_check_) {
    while (!shadow_.empty() && shadow_.back().second >= depth_) shadow_.pop_back();
    shadow_.emplace_back(std::this_thread::get_id(), depth_);
  }
  const auto* src = static_cast<const std::byte*>(data);
  if (!current_) {
    head_ = current_ = new Block;
    block_count_ = 1;
    offset_ = 0;
  }
  while (n > 0) {
    if (offset_ == kBlockSize) {
      if (!current_->next) {
        current_->next = new Block;
        current_->next->prev = current_;
        ++block_count_;
      }
      current_ = current_->next;
      offset_ = 0;
    }
    std::size_t take = std::min(n, kBlockSize - offset_);
    std::memcpy(current_->data.get() + offset_, src, take);
    offset_ += take;
    src += take;
    n -= take;
    depth_ += take;
  }
  ++push_epoch_;
}

void TapeStack::pop_bytes(void* out, std::size_t n) {
  check_owner();
  if (n > depth_) underflow(n);
  if (pairing_check_ && n > 0) {
    auto it = std::upper_bound(shadow_.begin(), shadow_.end(), depth_ - 1,
                               [](std::size_t d, const auto& e) { return d < e.second; });
    if (it == shadow_.begin() || std::prev(it)->first != std::this_thread::get_id())
      throw RuntimeFault("value popped on thread " + std::to_string(thread_id_) +
                         " was pushed by a different thread");
  }
  auto* dst = static_cast<std::byte*>(out) + n;
  while (n > 0) {
    if (offset_ == 0) {
      current_ = current_->prev;
      offset_ = kBlockSize;
    }
    std::size_t take = std::min(n, offset_);
    offset_ -= take;
    dst -= take;
    std::memcpy(dst, current_->data.get() + offset_, take);
    n -= take;
    depth_ -= take;
  }
}

void TapeStack::push_integer4(std::int64_t v) {
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
    throw RuntimeFault("push_integer4: value " + std::to_string(v) + " does not fit in 32 bits");
  push(static_cast<std::int32_t>(v));
}

TapeStack::Snapshot TapeStack::save_top() const { return Snapshot{current_, offset_, depth_, push_epoch_}; }

void TapeStack::restore_top(const Snapshot& s) {
  check_owner();
  if (s.push_epoch != push_epoch_)
    throw RuntimeFault("restore_top on thread " + std::to_string(thread_id_) + " after an intervening push");
  current_ = static_cast<Block*>(const_cast<void*>(s.block));
  offset_ = s.offset;
  depth_ = s.depth;
}

void dynamic_init(ChunkLog& log) {
  log = ChunkLog{};
  log.recording = true;
}

void dynamic_record(ChunkLog& log, TapeStack& tape, std::int64_t counter, std::int64_t stride) {
  if (!log.recording) throw RuntimeFault("record_dynamic_schedule called before init_dynamic_schedule");
  if (!log.have_chunk) {
    log.have_chunk = true;
    log.chunk_start = counter;
  } else if (counter - log.previous != stride) {
    tape.push_integer4(log.chunk_start);
    tape.push_integer4(log.previous);
    ++log.count;
    log.chunk_start = counter;
  }
  log.previous = counter;
}

void dynamic_finalize(ChunkLog& log, TapeStack& tape) {
  if (!log.recording) throw RuntimeFault("finalize_dynamic_schedule called before init_dynamic_schedule");
  if (log.have_chunk) {
    tape.push_integer4(log.chunk_start);
    tape.push_integer4(log.previous);
    ++log.count;
  }
  tape.push_integer4(log.count);
  log.recording = false;
}

DynamicReplay::DynamicReplay(TapeStack& tape) : tape_(tape), remaining_(tape.pop_integer4()) {}

std::optional<std::pair<std::int64_t, std::int64_t>> DynamicReplay::next() {
  if (remaining_ <= 0) return std::nullopt;
  --remaining_;
  std::int64_t end = tape_.pop_integer4();
  std::int64_t start = tape_.pop_integer4();
  return std::make_pair(start, end);
}

std::int64_t trip_count(std::int64_t start, std::int64_t end, std::int64_t stride) {
  if (stride == 0) throw RuntimeFault("loop stride is zero");
  return std::max<std::int64_t>(0, (end - start + stride) / stride);
}

std::pair<std::int64_t, std::int64_t> static_schedule(std::int64_t start, std::int64_t end, std::int64_t stride,
                                                      int nthreads, int tid) {
  if (nthreads <= 0) throw RuntimeFault("static_schedule: thread count must be positive");
  if (tid < 0 || tid >= nthreads) throw RuntimeFault("static_schedule: thread id out of range");
  std::int64_t n = trip_count(start, end, stride);
  std::int64_t q = n / nthreads;
  std::int64_t r = n % nthreads;
  std::int64_t count = q + (tid < r ? 1 : 0);
  std::int64_t first = tid * q + std::min<std::int64_t>(tid, r);
  std::int64_t cs = start + first * stride;
  return {cs, cs + (count - 1) * stride};
}

void atomic_add(double& location, double delta) { std::atomic_ref<double>(location).fetch_add(delta); }

}  // namespace adomp
