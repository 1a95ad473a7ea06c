// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <variant>

#include "adomp/runtime.hpp"

using namespace adomp;

using Chunk = std::pair<std::int64_t, std::int64_t>;

TEST(Tape, MixedLifo) {
  TapeStack t;
  t.push_real8(3.5);
  t.push_integer4(7);
  EXPECT_EQ(t.pop_integer4(), 7);
  EXPECT_EQ(t.pop_real8(), 3.5);
  EXPECT_TRUE(t.empty());
}

TEST(Tape, SpillAcrossBlockMatchesFlatBuffer) {
  TapeStack t;
  std::vector<unsigned char> flat(TapeStack::kBlockSize + 1);
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<unsigned char>((i * 131 + 7) % 251);
  t.push_bytes(flat.data(), flat.size());
  EXPECT_EQ(t.allocated_blocks(), 2u);
  std::vector<unsigned char> back(flat.size());
  t.pop_bytes(back.data(), back.size());
  EXPECT_EQ(back, flat);
  EXPECT_EQ(t.depth(), 0u);
}

TEST(Tape, ValueStraddlesBlockBoundary) {
  TapeStack t;
  std::vector<unsigned char> filler(TapeStack::kBlockSize - 3, 0xAB);
  t.push_bytes(filler.data(), filler.size());
  const double v = -1.0 / 3.0;
  t.push_real8(v);
  EXPECT_EQ(t.allocated_blocks(), 2u);
  EXPECT_EQ(t.pop_real8(), v);
  std::vector<unsigned char> back(filler.size());
  t.pop_bytes(back.data(), back.size());
  EXPECT_EQ(back, filler);
}

TEST(Tape, BlocksAreReused) {
  TapeStack t;
  for (int round = 0; round < 3; ++round) {
    for (int i = 0; i < 20000; ++i) t.push_real8(i);
    for (int i = 19999; i >= 0; --i) ASSERT_EQ(t.pop_real8(), i);
  }
  EXPECT_EQ(t.allocated_blocks(), (20000 * 8 + TapeStack::kBlockSize - 1) / TapeStack::kBlockSize);
}

TEST(Tape, PopEmptyFaultsWithThreadAndDepth) {
  TapeStack t(5);
  t.push_integer4(1);
  try {
    t.pop_real8();
    FAIL();
  } catch (const RuntimeFault& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("thread 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("depth 4"), std::string::npos) << msg;
  }
}

TEST(Tape, Integer4RangeChecked) {
  TapeStack t;
  EXPECT_THROW(t.push_integer4(std::int64_t{1} << 40), RuntimeFault);
  t.push_integer4(-2147483648LL);
  EXPECT_EQ(t.pop_integer4(), -2147483648LL);
  t.push_integer8(std::int64_t{1} << 40);
  EXPECT_EQ(t.pop_integer8(), std::int64_t{1} << 40);
}

TEST(Tape, SaveRestoreReplays) {
  TapeStack t;
  for (int i = 0; i < 10; ++i) t.push_real8(i * 1.5);
  auto snap = t.save_top();
  std::vector<double> first, second;
  for (int k = 0; k < 6; ++k) first.push_back(t.pop_real8());
  t.restore_top(snap);
  for (int k = 0; k < 6; ++k) second.push_back(t.pop_real8());
  EXPECT_EQ(first, second);
  EXPECT_EQ(first.front(), 13.5);
}

TEST(Tape, SaveRestoreOnEmptyIsNoop) {
  TapeStack t;
  auto snap = t.save_top();
  t.restore_top(snap);
  EXPECT_TRUE(t.empty());
  t.push_integer4(3);
  EXPECT_EQ(t.pop_integer4(), 3);
}

TEST(Tape, NestedSaveRestoreAcrossBlocks) {
  TapeStack t;
  std::vector<double> values(30000);
  std::iota(values.begin(), values.end(), 0.25);
  for (double v : values) t.push_real8(v);
  auto outer = t.save_top();
  for (int k = 0; k < 10000; ++k) t.pop_real8();
  auto inner = t.save_top();
  std::vector<double> a;
  for (int k = 0; k < 10000; ++k) a.push_back(t.pop_real8());
  t.restore_top(inner);
  std::vector<double> b;
  for (int k = 0; k < 10000; ++k) b.push_back(t.pop_real8());
  EXPECT_EQ(a, b);
  t.restore_top(outer);
  EXPECT_EQ(t.pop_real8(), values.back());
  // oracle: flat reversed vector
  EXPECT_EQ(a.front(), values[values.size() - 10001]);
}

TEST(Tape, RestoreAfterPushFaults) {
  TapeStack t;
  t.push_real8(1);
  auto snap = t.save_top();
  t.pop_real8();
  t.push_real8(2);
  EXPECT_THROW(t.restore_top(snap), RuntimeFault);
}

TEST(Tape, MillionMixedRoundTrip) {
  using Value = std::variant<double, std::int32_t, std::int64_t, unsigned char>;
  std::mt19937_64 rng(7);
  std::vector<Value> pushed;
  pushed.reserve(1'000'000);
  TapeStack t;
  for (int i = 0; i < 1'000'000; ++i) {
    switch (rng() % 4) {
      case 0: {
        double d = std::bit_cast<double>(rng() & 0x7fefffffffffffffULL);
        pushed.emplace_back(d);
        t.push(d);
        break;
      }
      case 1: {
        auto v = static_cast<std::int32_t>(rng());
        pushed.emplace_back(v);
        t.push(v);
        break;
      }
      case 2: {
        auto v = static_cast<std::int64_t>(rng());
        pushed.emplace_back(v);
        t.push(v);
        break;
      }
      default: {
        auto v = static_cast<unsigned char>(rng());
        pushed.emplace_back(v);
        t.push(v);
      }
    }
  }
  for (auto it = pushed.rbegin(); it != pushed.rend(); ++it) {
    bool same = std::visit(
        [&](auto expected) {
          auto got = t.pop<decltype(expected)>();
          return std::memcmp(&got, &expected, sizeof got) == 0;
        },
        *it);
    ASSERT_TRUE(same);
  }
  EXPECT_TRUE(t.empty());
}

TEST(Tape, PairingCheckCatchesForeignPop) {
  TapeStack t;
  t.enable_pairing_check(true);
  t.push_real8(1.0);
  bool faulted = false;
  std::thread other([&] {
    try {
      t.pop_real8();
    } catch (const RuntimeFault&) {
      faulted = true;
    }
  });
  other.join();
  EXPECT_TRUE(faulted);
}

TEST(Tape, PairingCheckAcceptsOwnPops) {
  TapeStack t;
  t.enable_pairing_check(true);
  for (int i = 0; i < 100; ++i) t.push_integer4(i);
  auto snap = t.save_top();
  for (int i = 99; i >= 0; --i) EXPECT_EQ(t.pop_integer4(), i);
  t.restore_top(snap);
  for (int i = 99; i >= 0; --i) EXPECT_EQ(t.pop_integer4(), i);
}

namespace {

// Reference partition: enumerate logical iterations and hand out blocks.
std::vector<std::vector<std::int64_t>> oracle_blocks(std::int64_t s, std::int64_t e, std::int64_t st, int T) {
  std::vector<std::int64_t> iters;
  for (std::int64_t i = s; st > 0 ? i <= e : i >= e; i += st) iters.push_back(i);
  std::vector<std::vector<std::int64_t>> out(T);
  std::size_t n = iters.size();
  std::size_t pos = 0;
  for (int t = 0; t < T; ++t) {
    std::size_t count = n / T + (static_cast<std::size_t>(t) < n % T ? 1 : 0);
    for (std::size_t k = 0; k < count; ++k) out[t].push_back(iters[pos++]);
  }
  return out;
}

std::vector<std::int64_t> expand(std::pair<std::int64_t, std::int64_t> block, std::int64_t st) {
  std::vector<std::int64_t> out;
  for (std::int64_t i = block.first; st > 0 ? i <= block.second : i >= block.second; i += st) out.push_back(i);
  return out;
}

}  // namespace

TEST(StaticSchedule, Examples) {
  EXPECT_EQ(static_schedule(1, 100, 1, 4, 0), Chunk(1, 25));
  EXPECT_EQ(static_schedule(1, 100, 1, 1, 0), Chunk(1, 100));
  EXPECT_EQ(static_schedule(1, 10, 1, 4, 3), Chunk(9, 10));
  EXPECT_EQ(static_schedule(1, 10, 1, 4, 0), Chunk(1, 3));
  EXPECT_THROW(static_schedule(1, 10, 1, 0, 0), RuntimeFault);
}

TEST(StaticSchedule, MatchesOracleAndCovers) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::int64_t s = static_cast<std::int64_t>(rng() % 200) - 100;
    std::int64_t st = static_cast<std::int64_t>(rng() % 7) - 3;
    if (st == 0) st = 1;
    std::int64_t e = s + st * (static_cast<std::int64_t>(rng() % 300) - 20);
    int T = 1 + static_cast<int>(rng() % 64);
    auto want = oracle_blocks(s, e, st, T);
    for (int t = 0; t < T; ++t) {
      auto got = expand(static_schedule(s, e, st, T, t), st);
      ASSERT_EQ(got, want[t]) << s << " " << e << " " << st << " T=" << T << " t=" << t;
    }
  }
}

TEST(DynamicSchedule, JumpDetection) {
  TapeStack t;
  ChunkLog log;
  dynamic_init(log);
  for (std::int64_t i : {5, 6, 7, 20, 21}) dynamic_record(log, t, i, 1);
  dynamic_finalize(log, t);
  DynamicReplay replay(t);
  EXPECT_EQ(replay.remaining(), 2);
  EXPECT_EQ(replay.next(), Chunk(20, 21));
  EXPECT_EQ(replay.next(), Chunk(5, 7));
  EXPECT_FALSE(replay.next());
  EXPECT_TRUE(t.empty());
}

TEST(DynamicSchedule, EmptyAndContiguous) {
  TapeStack t;
  ChunkLog log;
  dynamic_init(log);
  dynamic_finalize(log, t);
  DynamicReplay none(t);
  EXPECT_EQ(none.remaining(), 0);
  EXPECT_FALSE(none.next());

  dynamic_init(log);
  for (std::int64_t i = 1; i <= 10; ++i) dynamic_record(log, t, i, 1);
  dynamic_finalize(log, t);
  DynamicReplay one(t);
  auto chunk = one.next();
  ASSERT_TRUE(chunk);
  EXPECT_EQ(*chunk, Chunk(1, 10));
  std::vector<std::int64_t> order;
  for (std::int64_t i = chunk->second; i >= chunk->first; --i) order.push_back(i);
  EXPECT_EQ(order.front(), 10);
  EXPECT_EQ(order.back(), 1);
}

TEST(DynamicSchedule, RecordBeforeInitFaults) {
  TapeStack t;
  ChunkLog log;
  EXPECT_THROW(dynamic_record(log, t, 1, 1), RuntimeFault);
  EXPECT_THROW(dynamic_finalize(log, t), RuntimeFault);
}

TEST(DynamicSchedule, InterleavesWithBodyValues) {
  // body pushes between record calls must come back in step with the chunks
  TapeStack t;
  ChunkLog log;
  dynamic_init(log);
  for (std::int64_t i : {3, 5, 7, 15, 17}) {
    dynamic_record(log, t, i, 2);
    t.push_real8(static_cast<double>(i) * 10);
  }
  dynamic_finalize(log, t);
  DynamicReplay replay(t);
  std::vector<std::int64_t> visited;
  while (auto c = replay.next()) {
    for (std::int64_t i = c->second; i >= c->first; i -= 2) {
      EXPECT_EQ(t.pop_real8(), static_cast<double>(i) * 10);
      visited.push_back(i);
    }
  }
  EXPECT_EQ(visited, (std::vector<std::int64_t>{17, 15, 7, 5, 3}));
  EXPECT_TRUE(t.empty());
}

TEST(AtomicAdd, EightThreadsExact) {
  double x = 0.0;
  std::vector<std::thread> ts;
  for (int k = 0; k < 8; ++k)
    ts.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) atomic_add(x, 1.0);
    });
  for (auto& th : ts) th.join();
  EXPECT_EQ(x, 8000.0);
}

TEST(AtomicAdd, SingleThreadBitwisePlain) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  double a = 0.1, b = 0.1;
  for (int i = 0; i < 1000; ++i) {
    double delta = d(rng);
    atomic_add(a, delta);
    b += delta;
  }
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(AtomicAdd, RandomDeltasMatchSerialSum) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0, 1);
  std::vector<double> deltas(40000);
  for (auto& v : deltas) v = d(rng);
  double serial = 0.0;
  for (double v : deltas) serial += v;
  double x = 0.0;
  std::vector<std::thread> ts;
  for (int k = 0; k < 4; ++k)
    ts.emplace_back([&, k] {
      for (std::size_t i = k; i < deltas.size(); i += 4) atomic_add(x, deltas[i]);
    });
  for (auto& th : ts) th.join();
  EXPECT_LE(std::abs(x - serial) / serial, 1e-12);
}
