/**
 * Copyright 2026 The pipesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <map>
#include <stdexcept>

#include "gtest/gtest.h"
#include "pipesim/optimizer.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {
namespace {

std::size_t index_of(const Timeline &tl, int stage, EventKind kind, std::int64_t mb, int micro = 0) {
  for (std::size_t i = 0; i < tl.events.size(); ++i) {
    const auto &e = tl.events[i];
    if (e.stage == stage && e.kind == kind && e.mb == mb && e.micro == micro) return i;
  }
  ADD_FAILURE() << "event not found";
  return 0;
}

// Live version on `stage` when event `i` starts: 1 + updates listed before it.
std::int64_t version_at(const Timeline &tl, std::size_t i) {
  std::int64_t v = 1;
  for (std::size_t j = 0; j < i; ++j) {
    if (tl.events[j].stage == tl.events[i].stage && tl.events[j].kind == EventKind::kUpdate) ++v;
  }
  return v;
}

std::int64_t count_kind(const Timeline &tl, EventKind kind, int stage) {
  return std::count_if(tl.events.begin(), tl.events.end(),
                       [&](const ScheduleEvent &e) { return e.kind == kind && e.stage == stage; });
}

TEST(Serial, Examples) {
  EXPECT_EQ(build_serial(1).events.size(), 3u);
  const Timeline three = build_serial(3);
  EXPECT_EQ(version_at(three, three.events.size() - 1) + 1, 4);
  const Timeline hundred = build_serial(100);
  EXPECT_EQ(bubble_ratio(hundred, full_window(hundred)).idle, 0);
  EXPECT_EQ(hundred.horizon, 200);
}

TEST(Naive, SingleBatchOccupancy) {
  const Timeline tl = build_naive(4, 1);
  EXPECT_EQ(tl.horizon, 8);
  std::map<std::int64_t, int> busy;
  for (const auto &e : tl.events) {
    if (e.kind != EventKind::kUpdate) ++busy[e.slot];
  }
  EXPECT_EQ(busy.size(), 8u);
  for (const auto &[slot, n] : busy) EXPECT_EQ(n, 1) << "slot " << slot;
}

TEST(Naive, DepthOneIsSerial) {
  for (std::int64_t n : {1, 5, 12}) EXPECT_EQ(build_naive(1, n).events, build_serial(n).events);
}

TEST(GPipe, SingleMicroBatchIsNaive) {
  for (int d : {1, 2, 4, 7}) {
    EXPECT_EQ(build_gpipe(d, 6, 1).events, build_naive(d, 6).events) << "D=" << d;
  }
}

TEST(OneFOneB, DepthOneIsSerial) { EXPECT_EQ(build_1f1b(1, 9).events, build_serial(9).events); }

TEST(OneFOneB, WarmUpForwardCounts) {
  const Timeline tl = build_1f1b(4, 10);
  for (int k = 0; k < 4; ++k) {
    const std::size_t first_b = index_of(tl, k, EventKind::kBackward, 1);
    int warm = 0;
    for (std::size_t i = 0; i < first_b; ++i) {
      warm += tl.events[i].stage == k && tl.events[i].kind == EventKind::kForward;
    }
    EXPECT_EQ(warm, 4 - k);
  }
}

TEST(OneFOneB, WorkedVersionExample) {
  const Timeline tl = build_1f1b(4, 10);
  EXPECT_EQ(version_at(tl, index_of(tl, 0, EventKind::kForward, 5)), 2);
  EXPECT_EQ(version_at(tl, index_of(tl, 0, EventKind::kBackward, 5)), 5);
  EXPECT_EQ(count_updates_between(tl, 0, {EventKind::kForward, 5}, {EventKind::kBackward, 5}), 3);
}

TEST(CountUpdates, Examples) {
  const Timeline tl = build_1f1b(4, 8);
  EXPECT_EQ(count_updates_between(tl, 3, {EventKind::kForward, 2}, {EventKind::kBackward, 2}), 0);
  EXPECT_THROW(count_updates_between(tl, 3, {EventKind::kForward, 99}, {EventKind::kBackward, 2}),
               std::out_of_range);
  EXPECT_THROW(count_updates_between(tl, 0, {EventKind::kBackward, 3}, {EventKind::kForward, 3}),
               std::invalid_argument);
}

TEST(CountUpdates, VersionDifferenceTheorem) {
  for (int d : {2, 3, 4, 8}) {
    const std::int64_t n = 4 * d + 3;
    const Timeline tl = build_1f1b(d, n);
    for (int k = 0; k < d; ++k) {
      for (std::int64_t mb = d - k; mb <= n; ++mb) {
        // Independent count straight off the event list.
        const std::size_t f = index_of(tl, k, EventKind::kForward, mb);
        const std::size_t b = index_of(tl, k, EventKind::kBackward, mb);
        std::int64_t manual = 0;
        for (std::size_t i = f + 1; i < b; ++i) {
          manual += tl.events[i].stage == k && tl.events[i].kind == EventKind::kUpdate;
        }
        ASSERT_EQ(manual, version_difference(d, k)) << "D=" << d << " k=" << k << " mb=" << mb;
        ASSERT_EQ(count_updates_between(tl, k, {EventKind::kForward, mb}, {EventKind::kBackward, mb}),
                  version_difference(d, k));
      }
    }
  }
}

TEST(Validator, EveryBuiltTimelineIsValid) {
  for (int d = 1; d <= 8; ++d) {
    for (std::int64_t n = 1; n <= 32; ++n) {
      for (auto kind : {ScheduleKind::kNaive, ScheduleKind::k1F1B}) {
        const Timeline tl = build_timeline(kind, d, n);
        const auto bad = validate_timeline(tl);
        ASSERT_TRUE(bad.empty()) << to_string(kind) << " D=" << d << " n=" << n << ": " << bad.front();
        for (int k = 0; k < d; ++k) {
          ASSERT_EQ(count_kind(tl, EventKind::kForward, k), n);
          ASSERT_EQ(count_kind(tl, EventKind::kBackward, k), n);
          ASSERT_EQ(count_kind(tl, EventKind::kUpdate, k), n);
        }
      }
      for (int t : {1, 2, 4, 8}) {
        const Timeline tl = build_gpipe(d, n, t);
        const auto bad = validate_timeline(tl);
        ASSERT_TRUE(bad.empty()) << "gpipe D=" << d << " n=" << n << " T=" << t << ": " << bad.front();
        for (int k = 0; k < d; ++k) {
          ASSERT_EQ(count_kind(tl, EventKind::kForward, k), n * t);
          ASSERT_EQ(count_kind(tl, EventKind::kBackward, k), n * t);
          ASSERT_EQ(count_kind(tl, EventKind::kUpdate, k), n);
        }
      }
    }
  }
  const Timeline serial = build_serial(20);
  EXPECT_TRUE(validate_timeline(serial).empty());
}

TEST(Validator, CatchesBrokenTimelines) {
  // Stage 1 runs mini-batch 1 before stage 0 has produced it.
  Timeline early = build_1f1b(3, 4);
  early.events[0].stage = 1;
  EXPECT_FALSE(validate_timeline(early).empty());

  Timeline dropped = build_naive(2, 3);
  dropped.events.pop_back();
  EXPECT_FALSE(validate_timeline(dropped).empty());

  Timeline clash = build_naive(2, 2);
  for (auto &e : clash.events) {
    if (e.stage == 0 && e.kind == EventKind::kForward && e.mb == 2) e.slot = 0;
  }
  std::stable_sort(clash.events.begin(), clash.events.end(), [](const auto &a, const auto &b) {
    return std::tie(a.slot, a.stage) < std::tie(b.slot, b.stage);
  });
  EXPECT_FALSE(validate_timeline(clash).empty());
}

TEST(Bubble, NaivePerBatch) {
  const Timeline tl = build_naive(4, 5);
  const BubbleRatio r = bubble_ratio(tl, batch_window(tl, 3));
  EXPECT_EQ(r.idle, 24);
  EXPECT_EQ(r.total, 32);
  EXPECT_EQ(r.idle * 4, r.total * 3);
}

TEST(Bubble, GPipeForwardPhase) {
  const Timeline tl = build_gpipe(4, 3, 4);
  const SlotWindow w = forward_phase_window(tl, 1);
  EXPECT_EQ(w.length(), 7);
  const BubbleRatio r = bubble_ratio(tl, w);
  EXPECT_EQ(r.idle * 7, r.total * 3);
}

TEST(Bubble, OneFOneBSteadyStateIsFull) {
  for (int d : {2, 4, 8}) {
    const Timeline tl = build_1f1b(d, 6 * d);
    const SlotWindow w = steady_state_window(tl);
    ASSERT_GT(w.length(), 0);
    EXPECT_EQ(bubble_ratio(tl, w).idle, 0) << "D=" << d;
  }
  EXPECT_EQ(bubble_ratio(build_serial(4), full_window(build_serial(4))).idle, 0);
}

TEST(Bubble, GPipeNonIncreasingInT) {
  double prev = 1.0;
  for (int t : {1, 2, 4, 8}) {
    const Timeline tl = build_gpipe(4, 2, t);
    const double r = bubble_ratio(tl, batch_window(tl, 1)).value();
    EXPECT_LT(r, prev) << "T=" << t;
    prev = r;
  }
}

TEST(Bubble, WindowErrors) {
  const Timeline tl = build_naive(2, 2);
  EXPECT_THROW(bubble_ratio(tl, {3, 3}), std::invalid_argument);
  EXPECT_THROW(bubble_ratio(tl, {0, tl.horizon + 1}), std::out_of_range);
}

TEST(Makespan, Examples) {
  for (std::int64_t n : {1, 7, 30}) EXPECT_DOUBLE_EQ(makespan(build_serial(n), CostModel::uniform(1)), 2.0 * n);
  const CostModel unit = CostModel::uniform(4);
  const double f1b = makespan(build_1f1b(4, 16), unit);
  const double gp = makespan(build_gpipe(4, 16, 4), unit);
  const double nv = makespan(build_naive(4, 16), unit);
  EXPECT_LE(f1b, gp);
  EXPECT_LE(gp, nv);
  EXPECT_DOUBLE_EQ(nv, 16 * 8.0);
  const CostModel twice = CostModel::uniform(4, 2.0, 2.0);
  for (const auto &tl : {build_1f1b(4, 16), build_gpipe(4, 16, 4), build_naive(4, 16)}) {
    EXPECT_DOUBLE_EQ(makespan(tl, twice), 2.0 * makespan(tl, unit));
  }
  EXPECT_THROW(CostModel::uniform(4, 0.0).validate(4), std::invalid_argument);
}

TEST(Names, RoundTrip) {
  for (auto k : {ScheduleKind::kSerial, ScheduleKind::kNaive, ScheduleKind::kGPipe, ScheduleKind::k1F1B}) {
    EXPECT_EQ(parse_schedule(to_string(k)), k);
  }
}

}  // namespace
}  // namespace pipesim
