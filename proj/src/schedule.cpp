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

#include "pipesim/schedule.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "pipesim/error.hpp"

namespace pipesim {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::kForward: return "F";
    case EventKind::kBackward: return "B";
    case EventKind::kUpdate: return "U";
  }
  return "?";
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kSerial: return "serial";
    case ScheduleKind::kNaive: return "naive";
    case ScheduleKind::kGPipe: return "gpipe";
    case ScheduleKind::k1F1B: return "1f1b";
  }
  return "?";
}

ScheduleKind parse_schedule(std::string_view s) {
  if (s == "serial") return ScheduleKind::kSerial;
  if (s == "naive") return ScheduleKind::kNaive;
  if (s == "gpipe") return ScheduleKind::kGPipe;
  if (s == "1f1b") return ScheduleKind::k1F1B;
  throw ConfigError("unknown schedule '" + std::string(s) + "'", "schedule");
}

namespace {

auto order_key(const ScheduleEvent &e) { return std::make_tuple(e.slot, e.stage, static_cast<int>(e.kind)); }

void finalize(Timeline &tl) {
  std::stable_sort(tl.events.begin(), tl.events.end(),
                   [](const auto &a, const auto &b) { return order_key(a) < order_key(b); });
  tl.horizon = tl.events.empty() ? 0 : tl.events.back().slot + 1;
}

void check_args(int depth, std::int64_t n_batches) {
  if (depth < 1) throw std::invalid_argument("pipeline depth must be >= 1");
  if (n_batches < 0) throw std::invalid_argument("batch count must be >= 0");
}

// Work key: (mb, micro, stage).
using WorkKey = std::tuple<std::int64_t, int, int>;

}  // namespace

Timeline build_naive(int depth, std::int64_t n_batches) {
  check_args(depth, n_batches);
  Timeline tl{ScheduleKind::kNaive, depth, n_batches, 1, 0, {}};
  const std::int64_t period = 2 * static_cast<std::int64_t>(depth);
  for (std::int64_t mb = 1; mb <= n_batches; ++mb) {
    const std::int64_t base = period * (mb - 1);
    for (int k = 0; k < depth; ++k) {
      tl.events.push_back({base + k, k, EventKind::kForward, mb, 0});
      const std::int64_t b = base + depth + (depth - 1 - k);
      tl.events.push_back({b, k, EventKind::kBackward, mb, 0});
      tl.events.push_back({b, k, EventKind::kUpdate, mb, 0});
    }
  }
  finalize(tl);
  return tl;
}

Timeline build_serial(std::int64_t n_batches) {
  Timeline tl = build_naive(1, n_batches);
  tl.kind = ScheduleKind::kSerial;
  return tl;
}

Timeline build_gpipe(int depth, std::int64_t n_batches, int micro_per_mini) {
  check_args(depth, n_batches);
  if (micro_per_mini < 1) throw std::invalid_argument("GPipe needs at least one micro-batch");
  Timeline tl{ScheduleKind::kGPipe, depth, n_batches, micro_per_mini, 0, {}};
  const std::int64_t phase = micro_per_mini + depth - 1;
  for (std::int64_t mb = 1; mb <= n_batches; ++mb) {
    const std::int64_t base = 2 * phase * (mb - 1);
    for (int j = 0; j < micro_per_mini; ++j) {
      for (int k = 0; k < depth; ++k) {
        tl.events.push_back({base + j + k, k, EventKind::kForward, mb, j});
        tl.events.push_back({base + phase + j + (depth - 1 - k), k, EventKind::kBackward, mb, j});
      }
    }
    for (int k = 0; k < depth; ++k) {
      tl.events.push_back(
          {base + phase + (micro_per_mini - 1) + (depth - 1 - k), k, EventKind::kUpdate, mb, 0});
    }
  }
  finalize(tl);
  return tl;
}

Timeline build_1f1b(int depth, std::int64_t n_batches) {
  check_args(depth, n_batches);
  Timeline tl{ScheduleKind::k1F1B, depth, n_batches, 1, 0, {}};
  // Per-stage op order: D-k warm-up forwards, then alternate B/F, then drain.
  std::vector<std::vector<std::pair<EventKind, std::int64_t>>> order(depth);
  for (int k = 0; k < depth; ++k) {
    const std::int64_t warm = std::min<std::int64_t>(depth - k, n_batches);
    for (std::int64_t m = 1; m <= warm; ++m) order[k].emplace_back(EventKind::kForward, m);
    for (std::int64_t m = 1; m <= n_batches; ++m) {
      order[k].emplace_back(EventKind::kBackward, m);
      if (m + warm <= n_batches) order[k].emplace_back(EventKind::kForward, m + warm);
    }
  }
  // List-schedule each stage's next op at the first slot its inputs exist.
  std::map<WorkKey, std::int64_t> fwd_slot, bwd_slot;
  std::vector<std::size_t> next(depth, 0);
  std::size_t remaining = 0;
  for (const auto &o : order) remaining += o.size();
  for (std::int64_t slot = 0; remaining > 0; ++slot) {
    std::vector<std::pair<int, std::pair<EventKind, std::int64_t>>> placed;
    for (int k = 0; k < depth; ++k) {
      if (next[k] >= order[k].size()) continue;
      const auto [kind, m] = order[k][next[k]];
      auto done_before = [&](const std::map<WorkKey, std::int64_t> &at, int stage) {
        auto it = at.find({m, 0, stage});
        return it != at.end() && it->second < slot;
      };
      bool ready = false;
      if (kind == EventKind::kForward) {
        ready = k == 0 || done_before(fwd_slot, k - 1);
      } else {
        ready = done_before(fwd_slot, k) && (k == depth - 1 || done_before(bwd_slot, k + 1));
      }
      if (ready) placed.push_back({k, order[k][next[k]]});
    }
    if (placed.empty() && slot > 4 * (n_batches + depth) + 8) {
      throw std::logic_error("1F1B construction deadlocked");
    }
    for (const auto &[k, op] : placed) {
      const auto [kind, m] = op;
      tl.events.push_back({slot, k, kind, m, 0});
      if (kind == EventKind::kForward) {
        fwd_slot[{m, 0, k}] = slot;
      } else {
        bwd_slot[{m, 0, k}] = slot;
        tl.events.push_back({slot, k, EventKind::kUpdate, m, 0});
      }
      ++next[k];
      --remaining;
    }
  }
  finalize(tl);
  return tl;
}

Timeline build_timeline(ScheduleKind kind, int depth, std::int64_t n_batches, int micro_per_mini) {
  switch (kind) {
    case ScheduleKind::kSerial:
      if (depth != 1) throw std::invalid_argument("serial schedule has depth 1");
      return build_serial(n_batches);
    case ScheduleKind::kNaive: return build_naive(depth, n_batches);
    case ScheduleKind::kGPipe: return build_gpipe(depth, n_batches, micro_per_mini);
    case ScheduleKind::k1F1B: return build_1f1b(depth, n_batches);
  }
  throw std::invalid_argument("unknown schedule kind");
}

std::vector<std::string> validate_timeline(const Timeline &tl) {
  std::vector<std::string> errs;
  auto where = [](const ScheduleEvent &e) {
    return to_string(e.kind) + "(mb=" + std::to_string(e.mb) + ",micro=" + std::to_string(e.micro) +
           ",stage=" + std::to_string(e.stage) + ")@" + std::to_string(e.slot);
  };
  const int d = tl.depth;
  const int t = tl.micro_per_mini;
  std::map<WorkKey, std::int64_t> fwd, bwd;
  std::map<std::pair<std::int64_t, int>, std::int64_t> last_bwd, upd;
  std::map<std::pair<std::int64_t, int>, int> busy;
  std::vector<std::int64_t> fcount(d, 0), bcount(d, 0);
  std::vector<std::optional<ScheduleEvent>> prev_on_stage(d);

  for (std::size_t i = 0; i < tl.events.size(); ++i) {
    const auto &e = tl.events[i];
    if (i > 0 && order_key(tl.events[i - 1]) > order_key(e)) errs.push_back("out of order: " + where(e));
    if (e.stage < 0 || e.stage >= d || e.mb < 1 || e.mb > tl.n_batches || e.micro < 0 ||
        e.micro >= t) {
      errs.push_back("out of range: " + where(e));
      continue;
    }
    if (e.slot >= tl.horizon) errs.push_back("beyond horizon: " + where(e));
    const WorkKey key{e.mb, e.micro, e.stage};
    switch (e.kind) {
      case EventKind::kForward:
        if (++busy[{e.slot, e.stage}] > 1) errs.push_back("stage double-booked: " + where(e));
        if (!fwd.emplace(key, e.slot).second) errs.push_back("duplicate: " + where(e));
        if (e.stage > 0) {
          auto it = fwd.find({e.mb, e.micro, e.stage - 1});
          if (it == fwd.end() || it->second >= e.slot) errs.push_back("forward before upstream: " + where(e));
        }
        ++fcount[e.stage];
        break;
      case EventKind::kBackward: {
        if (++busy[{e.slot, e.stage}] > 1) errs.push_back("stage double-booked: " + where(e));
        if (!bwd.emplace(key, e.slot).second) errs.push_back("duplicate: " + where(e));
        auto f = fwd.find(key);
        if (f == fwd.end() || f->second >= e.slot) errs.push_back("backward before forward: " + where(e));
        if (e.stage < d - 1) {
          auto it = bwd.find({e.mb, e.micro, e.stage + 1});
          if (it == bwd.end() || it->second >= e.slot) errs.push_back("backward before downstream: " + where(e));
        }
        auto &lb = last_bwd[{e.mb, e.stage}];
        lb = std::max(lb, e.slot);
        ++bcount[e.stage];
        break;
      }
      case EventKind::kUpdate: {
        if (!upd.emplace(std::make_pair(e.mb, e.stage), e.slot).second) errs.push_back("duplicate: " + where(e));
        const auto &p = prev_on_stage[e.stage];
        if (!p || p->kind != EventKind::kBackward || p->mb != e.mb || p->slot != e.slot) {
          errs.push_back("update not directly after its backward: " + where(e));
        }
        break;
      }
    }
    prev_on_stage[e.stage] = e;
  }
  for (int k = 0; k < d; ++k) {
    if (fcount[k] != tl.n_batches * t) {
      errs.push_back("stage " + std::to_string(k) + " has " + std::to_string(fcount[k]) + " forwards");
    }
    if (bcount[k] != fcount[k]) errs.push_back("stage " + std::to_string(k) + " backward count != forward count");
  }
  for (const auto &[key, slot] : last_bwd) {
    auto it = upd.find(key);
    if (it == upd.end()) {
      errs.push_back("missing update for mb " + std::to_string(key.first) + " stage " + std::to_string(key.second));
    } else if (it->second != slot) {
      errs.push_back("update of mb " + std::to_string(key.first) + " stage " + std::to_string(key.second) +
                     " precedes its last backward");
    }
  }
  return errs;
}

std::int64_t count_updates_between(const Timeline &tl, int stage, EventRef from, EventRef to) {
  std::optional<std::size_t> a, b;
  std::vector<const ScheduleEvent *> seq;
  for (const auto &e : tl.events) {
    if (e.stage != stage) continue;
    auto matches = [&](const EventRef &r) { return e.kind == r.kind && e.mb == r.mb && e.micro == r.micro; };
    if (matches(from)) a = seq.size();
    if (matches(to)) b = seq.size();
    seq.push_back(&e);
  }
  if (!a || !b) {
    throw std::out_of_range("count_updates_between: event not found on stage " + std::to_string(stage));
  }
  if (*a >= *b) throw std::invalid_argument("count_updates_between: 'from' does not precede 'to'");
  std::int64_t n = 0;
  for (std::size_t i = *a + 1; i < *b; ++i) n += seq[i]->kind == EventKind::kUpdate;
  return n;
}

BubbleRatio bubble_ratio(const Timeline &tl, SlotWindow w) {
  if (w.length() <= 0) throw std::invalid_argument("bubble_ratio: empty window");
  if (w.begin < 0 || w.end > tl.horizon) throw std::out_of_range("bubble_ratio: window outside horizon");
  std::int64_t busy = 0;
  for (const auto &e : tl.events) {
    if (e.kind != EventKind::kUpdate && e.slot >= w.begin && e.slot < w.end) ++busy;
  }
  const std::int64_t total = static_cast<std::int64_t>(tl.depth) * w.length();
  return {total - busy, total};
}

SlotWindow full_window(const Timeline &tl) { return {0, tl.horizon}; }

SlotWindow batch_window(const Timeline &tl, std::int64_t mb) {
  SlotWindow w{tl.horizon, 0};
  for (const auto &e : tl.events) {
    if (e.mb != mb) continue;
    w.begin = std::min(w.begin, e.slot);
    w.end = std::max(w.end, e.slot + 1);
  }
  if (w.end == 0) throw std::out_of_range("batch_window: no events for mini-batch " + std::to_string(mb));
  return w;
}

SlotWindow steady_state_window(const Timeline &tl) {
  std::optional<std::int64_t> first_b, last_f;
  for (const auto &e : tl.events) {
    if (e.stage != 0) continue;
    if (e.kind == EventKind::kBackward && !first_b) first_b = e.slot;
    if (e.kind == EventKind::kForward) last_f = e.slot;
  }
  if (!first_b || !last_f || *last_f < *first_b) return {0, 0};
  return {*first_b, *last_f + 1};
}

SlotWindow forward_phase_window(const Timeline &tl, std::int64_t mb) {
  SlotWindow w{tl.horizon, 0};
  for (const auto &e : tl.events) {
    if (e.mb != mb || e.kind != EventKind::kForward) continue;
    w.begin = std::min(w.begin, e.slot);
    w.end = std::max(w.end, e.slot + 1);
  }
  if (w.end == 0) throw std::out_of_range("forward_phase_window: no forwards for mini-batch " + std::to_string(mb));
  return w;
}

CostModel CostModel::uniform(int depth, double forward_cost, double backward_cost) {
  return {std::vector<double>(depth, forward_cost), std::vector<double>(depth, backward_cost)};
}

void CostModel::validate(int depth) const {
  if (static_cast<int>(forward.size()) != depth || static_cast<int>(backward.size()) != depth) {
    throw std::invalid_argument("cost model must give one forward and backward cost per stage");
  }
  for (int k = 0; k < depth; ++k) {
    if (!(forward[k] > 0.0) || !(backward[k] > 0.0)) throw std::invalid_argument("costs must be > 0");
  }
}

double makespan(const Timeline &tl, const CostModel &costs) {
  costs.validate(tl.depth);
  const double scale = 1.0 / static_cast<double>(tl.micro_per_mini);
  std::map<WorkKey, double> fdone, bdone;
  std::vector<double> free_at(tl.depth, 0.0);
  double end = 0.0;
  for (const auto &e : tl.events) {
    if (e.kind == EventKind::kUpdate) continue;
    const WorkKey key{e.mb, e.micro, e.stage};
    double ready = free_at[e.stage];
    if (e.kind == EventKind::kForward) {
      if (e.stage > 0) ready = std::max(ready, fdone.at({e.mb, e.micro, e.stage - 1}));
      const double done = ready + costs.forward[e.stage] * scale;
      fdone[key] = done;
      free_at[e.stage] = done;
    } else {
      ready = std::max(ready, fdone.at(key));
      if (e.stage < tl.depth - 1) ready = std::max(ready, bdone.at({e.mb, e.micro, e.stage + 1}));
      const double done = ready + costs.backward[e.stage] * scale;
      bdone[key] = done;
      free_at[e.stage] = done;
    }
    end = std::max(end, free_at[e.stage]);
  }
  return end;
}

}  // namespace pipesim
