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

#ifndef PIPESIM_RUNTIME_HPP_
#define PIPESIM_RUNTIME_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipesim/layers.hpp"
#include "pipesim/model.hpp"
#include "pipesim/optimizer.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {

enum class StrategyKind {
  kSerial,
  kNaive,
  kGPipe,
  kAsyncRaw,        // 1F1B with live weights everywhere; the control
  kWeightStashing,  // PipeDream
  kTwoBuffered,     // PipeDream-2BW
  kSpecTrain,       // momentum-buffer prediction, SGDM only
  kPipeOptim,       // optimizer-dependent prediction
};

std::string to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view s);
// The schedule a strategy runs on.
ScheduleKind schedule_for(StrategyKind k);

// Rejects strategy/schedule/optimizer combinations that cannot run.
void validate_strategy(StrategyKind strat, ScheduleKind schedule, OptimizerTag opt, int depth);

// Weights handed to a forward or backward pass, and the version they carry.
struct WeightChoice {
  ParamSet weights;
  std::int64_t version = 0;  // live version t the weights derive from
  bool predicted = false;
  std::int64_t target = 0;  // t + s when predicted
  std::int64_t effective_version() const { return predicted ? target : version; }
};

// Everything a strategy may read or change on its stage.
struct StageContext {
  StageModel &stage;
  OptimizerState &opt_state;
  const OptimizerKind &opt;
  int depth = 1;
  double lr = 0.0;  // scheduler value for the mini-batch at hand
};

// Per-stage weight-management policy. The runtime calls forward_weights /
// after_forward around every forward, backward_weights before every
// backward, and should_step at every Update event.
class StageStrategy {
 public:
  virtual ~StageStrategy() = default;

  virtual WeightChoice forward_weights(StageContext &ctx, BatchId id) = 0;
  virtual void after_forward(StageContext &ctx, BatchId id);
  virtual WeightChoice backward_weights(StageContext &ctx, BatchId id) = 0;
  // Whether the accumulated gradient is applied at this Update event.
  virtual bool should_step(StageContext &ctx, std::int64_t mb, std::int64_t n_batches);
  virtual void before_step(StageContext &ctx);

  // Weight versions currently held, live copy included.
  virtual std::size_t snapshots_in_use(const StageContext &ctx) const = 0;
  std::size_t peak_snapshots() const { return peak_; }
  // Folds the current holding into the peak; the runtime calls this after
  // every event.
  void observe(const StageContext &ctx) { note_snapshots(snapshots_in_use(ctx)); }

 protected:
  void note_snapshots(std::size_t n) { peak_ = std::max(peak_, n); }
  WeightChoice live(const StageContext &ctx) const { return {ctx.stage.params, ctx.stage.version}; }

 private:
  std::size_t peak_ = 0;
};

std::unique_ptr<StageStrategy> make_stage_strategy(StrategyKind kind);

// Convenience wrappers over a StageStrategy.
WeightChoice strategy_forward_weights(StageStrategy &strat, StageContext &ctx, BatchId id);
WeightChoice strategy_backward_weights(StageStrategy &strat, StageContext &ctx, BatchId id);

// PipeOptim's prediction: W_t - lr * s * dW_t, s = D - rank - 1 clamped to
// the number of mini-batches already in flight on the stage.
std::int64_t prediction_distance(const StageContext &ctx);

struct Batch {
  Matrix x;
  Matrix y;
};

struct VersionRecord {
  std::int64_t mb = 0;
  int stage = 0;
  int micro = 0;
  std::int64_t forward_version = 0;   // live version at forward time
  std::int64_t backward_version = 0;  // version of the weights used by backward
  std::int64_t live_at_backward = 0;  // live version when backward runs
  bool predicted = false;
  std::int64_t prediction_target = 0;
  std::int64_t forward_effective() const { return predicted ? prediction_target : forward_version; }
};

struct LossPoint {
  std::int64_t iteration = 0;
  std::int64_t mb = 0;
  double loss = 0.0;
};

struct RunReport {
  std::vector<LossPoint> losses;
  std::vector<VersionRecord> versions;
  std::vector<std::size_t> peak_snapshots;  // per stage
  std::vector<std::size_t> peak_stash;      // per stage, activation entries
  std::vector<std::int64_t> final_versions;  // per stage
  BubbleRatio bubble_total;
  std::optional<BubbleRatio> bubble_window;  // steady (1F1B) or first batch
  double makespan = 0.0;
  std::uint64_t params_checksum = 0;
  std::uint64_t seed = 0;
  std::string config_echo;  // canonical config JSON, filled by the harness
};

struct ExecuteOptions {
  LossKind loss = LossKind::kMse;
  // Learning rate for a 1-based mini-batch index; constant opt.lr if empty.
  std::function<double(std::int64_t)> lr_for;
  std::uint64_t seed = 0;
};

// Runs every event of `tl` in order against `stages` (updated in place).
// data[mb - 1] is mini-batch mb.
RunReport execute(const Timeline &tl, std::vector<StageModel> &stages, const OptimizerKind &opt,
                  StrategyKind strat, const std::vector<Batch> &data, const ExecuteOptions &options);

std::vector<std::size_t> memory_peaks(const RunReport &report);

struct EventMetrics {
  std::int64_t mb = 0;
  int stage = 0;
  int micro = 0;
  bool inconsistent = false;
  std::int64_t staleness = 0;
};

// inconsistent: effective forward version != version used in backward.
// staleness: live version at backward minus effective forward version.
std::vector<EventMetrics> staleness_and_inconsistency(const RunReport &report);

std::uint64_t checksum(const ParamSet &params, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace pipesim

#endif  // PIPESIM_RUNTIME_HPP_
