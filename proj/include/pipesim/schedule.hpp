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

#ifndef PIPESIM_SCHEDULE_HPP_
#define PIPESIM_SCHEDULE_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pipesim {

enum class EventKind { kForward, kBackward, kUpdate };
enum class ScheduleKind { kSerial, kNaive, kGPipe, k1F1B };

std::string to_string(EventKind k);
std::string to_string(ScheduleKind k);
ScheduleKind parse_schedule(std::string_view s);

// One unit of pipeline work on one stage. Mini-batches are numbered from 1.
// An Update shares the slot of the Backward it follows and costs nothing.
struct ScheduleEvent {
  std::int64_t slot = 0;
  int stage = 0;
  EventKind kind = EventKind::kForward;
  std::int64_t mb = 1;
  int micro = 0;
  bool operator==(const ScheduleEvent &) const = default;
};

struct Timeline {
  ScheduleKind kind = ScheduleKind::kSerial;
  int depth = 1;
  std::int64_t n_batches = 0;
  int micro_per_mini = 1;
  std::int64_t horizon = 0;  // slots
  std::vector<ScheduleEvent> events;  // by slot, stage, then F < B < U
};

Timeline build_serial(std::int64_t n_batches);
Timeline build_naive(int depth, std::int64_t n_batches);
Timeline build_gpipe(int depth, std::int64_t n_batches, int micro_per_mini);
Timeline build_1f1b(int depth, std::int64_t n_batches);
Timeline build_timeline(ScheduleKind kind, int depth, std::int64_t n_batches,
                        int micro_per_mini = 1);

// Empty when every ordering, exclusivity and conservation rule holds;
// otherwise one message per violation.
std::vector<std::string> validate_timeline(const Timeline &tl);

struct EventRef {
  EventKind kind = EventKind::kForward;
  std::int64_t mb = 1;
  int micro = 0;
};

// Update events on `stage` strictly between `from` and `to`.
std::int64_t count_updates_between(const Timeline &tl, int stage, EventRef from, EventRef to);

// Half-open slot range [begin, end).
struct SlotWindow {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t length() const { return end - begin; }
};

// Exact idle/total stage-slot counts; value() is the fraction.
struct BubbleRatio {
  std::int64_t idle = 0;
  std::int64_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(idle) / static_cast<double>(total); }
};

BubbleRatio bubble_ratio(const Timeline &tl, SlotWindow window);
SlotWindow full_window(const Timeline &tl);
// Slots spanned by every event of mini-batch `mb`.
SlotWindow batch_window(const Timeline &tl, std::int64_t mb);
// From stage 0's first backward through its last forward: the span in
// which a 1F1B pipeline is full. Empty if the pipeline never fills.
SlotWindow steady_state_window(const Timeline &tl);
// Forward-phase (fill) window of mini-batch `mb` in a GPipe timeline.
SlotWindow forward_phase_window(const Timeline &tl, std::int64_t mb);

struct CostModel {
  std::vector<double> forward;
  std::vector<double> backward;

  static CostModel uniform(int depth, double forward_cost = 1.0, double backward_cost = 1.0);
  void validate(int depth) const;
};

// Completion time of the last event, respecting data dependencies and the
// per-stage event order of `tl`. Micro-batch events cost 1/T of a full one.
double makespan(const Timeline &tl, const CostModel &costs);

}  // namespace pipesim

#endif  // PIPESIM_SCHEDULE_HPP_
