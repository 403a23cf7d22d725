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

#include "pipesim/runtime.hpp"

#include <bit>
#include <set>

#include "pipesim/error.hpp"

namespace pipesim {

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kSerial: return "serial";
    case StrategyKind::kNaive: return "naive";
    case StrategyKind::kGPipe: return "gpipe";
    case StrategyKind::kAsyncRaw: return "async-raw";
    case StrategyKind::kWeightStashing: return "weight-stashing";
    case StrategyKind::kTwoBuffered: return "two-buffered";
    case StrategyKind::kSpecTrain: return "spectrain";
    case StrategyKind::kPipeOptim: return "pipeoptim";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view s) {
  for (auto k : {StrategyKind::kSerial, StrategyKind::kNaive, StrategyKind::kGPipe,
                 StrategyKind::kAsyncRaw, StrategyKind::kWeightStashing, StrategyKind::kTwoBuffered,
                 StrategyKind::kSpecTrain, StrategyKind::kPipeOptim}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'", "strategy");
}

ScheduleKind schedule_for(StrategyKind k) {
  switch (k) {
    case StrategyKind::kSerial: return ScheduleKind::kSerial;
    case StrategyKind::kNaive: return ScheduleKind::kNaive;
    case StrategyKind::kGPipe: return ScheduleKind::kGPipe;
    default: return ScheduleKind::k1F1B;
  }
}

void validate_strategy(StrategyKind strat, ScheduleKind schedule, OptimizerTag opt, int depth) {
  if (strat == StrategyKind::kSpecTrain && opt != OptimizerTag::kSgdm) {
    throw ConfigError("spectrain predicts with the SGDM momentum buffer and only works with sgdm, not " +
                          to_string(opt),
                      "strategy");
  }
  if (schedule_for(strat) != schedule) {
    throw ConfigError("strategy " + to_string(strat) + " runs on the " +
                          to_string(schedule_for(strat)) + " schedule, not " + to_string(schedule),
                      "schedule");
  }
  if (schedule == ScheduleKind::kSerial && depth != 1) {
    throw ConfigError("serial execution has depth 1", "depth");
  }
  if (depth < 1) throw ConfigError("must be >= 1", "depth");
}

void StageStrategy::after_forward(StageContext &, BatchId) {}
bool StageStrategy::should_step(StageContext &, std::int64_t, std::int64_t) { return true; }
void StageStrategy::before_step(StageContext &) {}

namespace {

// Serial, naive, GPipe and the raw asynchronous control.
class LiveStrategy final : public StageStrategy {
 public:
  WeightChoice forward_weights(StageContext &ctx, BatchId) override { return live(ctx); }
  WeightChoice backward_weights(StageContext &ctx, BatchId) override { return live(ctx); }
  std::size_t snapshots_in_use(const StageContext &) const override { return 1; }
};

class StashingStrategy final : public StageStrategy {
 public:
  WeightChoice forward_weights(StageContext &ctx, BatchId id) override {
    WeightChoice w = live(ctx);
    stash_.emplace(id, w);
    note_snapshots(snapshots_in_use(ctx));
    return w;
  }
  WeightChoice backward_weights(StageContext &ctx, BatchId id) override {
    auto it = stash_.find(id);
    if (it == stash_.end()) {
      throw std::logic_error("stage " + std::to_string(ctx.stage.rank) +
                             ": no stashed weights for mini-batch " + std::to_string(id.mb));
    }
    WeightChoice w = std::move(it->second);
    stash_.erase(it);
    return w;
  }
  // A stash taken at the live version shares its storage.
  std::size_t snapshots_in_use(const StageContext &ctx) const override {
    std::set<std::int64_t> versions{ctx.stage.version};
    for (const auto &[id, w] : stash_) versions.insert(w.version);
    return versions.size();
  }

 private:
  std::map<BatchId, WeightChoice> stash_;
};

// Two weight buffers; gradients accumulate over `depth` mini-batches and the
// buffers flip at each step, so a mini-batch never spans more than one flip.
class TwoBufferedStrategy final : public StageStrategy {
 public:
  WeightChoice forward_weights(StageContext &ctx, BatchId id) override {
    forward_version_[id] = ctx.stage.version;
    note_snapshots(2);
    return live(ctx);
  }
  WeightChoice backward_weights(StageContext &ctx, BatchId id) override {
    auto it = forward_version_.find(id);
    if (it == forward_version_.end()) throw std::logic_error("two-buffered: backward without forward");
    const std::int64_t v = it->second;
    forward_version_.erase(it);
    if (v == ctx.stage.version) return live(ctx);
    if (v == previous_version_) return {previous_, previous_version_};
    throw std::logic_error("two-buffered: mini-batch " + std::to_string(id.mb) +
                           " needs a third weight version (" + std::to_string(v) + ")");
  }
  bool should_step(StageContext &ctx, std::int64_t mb, std::int64_t n_batches) override {
    return mb % ctx.depth == 0 || mb == n_batches;
  }
  void before_step(StageContext &ctx) override {
    previous_ = ctx.stage.params;
    previous_version_ = ctx.stage.version;
  }
  std::size_t snapshots_in_use(const StageContext &) const override { return 2; }

 private:
  std::map<BatchId, std::int64_t> forward_version_;
  ParamSet previous_;
  std::int64_t previous_version_ = 0;
};

// PipeOptim, and SpecTrain as its SGDM-only special case. The live weights
// are cached before predicting and restored after the forward pass.
class PredictingStrategy final : public StageStrategy {
 public:
  explicit PredictingStrategy(bool momentum_only) : momentum_only_(momentum_only) {}

  WeightChoice forward_weights(StageContext &ctx, BatchId) override {
    const std::int64_t s = prediction_distance(ctx);
    if (ctx.stage.rank == ctx.depth - 1 || s == 0) {
      note_snapshots(1);
      return live(ctx);
    }
    cache_ = ctx.stage.params;
    const ParamSet dw = momentum_only_ && !ctx.opt_state.first.empty()
                            ? ctx.opt_state.first
                            : delta_w(ctx.opt, ctx.opt_state, ctx.stage.params);
    WeightChoice w{predict_weights(ctx.stage.params, ctx.lr, s, dw), ctx.stage.version, true,
                   ctx.stage.version + s};
    note_snapshots(2);
    return w;
  }
  void after_forward(StageContext &ctx, BatchId) override {
    if (cache_) {
      ctx.stage.params = std::move(*cache_);
      cache_.reset();
    }
  }
  // SpecTrain's backward-time prediction spans zero updates here, so both
  // strategies run backward on the live weights.
  WeightChoice backward_weights(StageContext &ctx, BatchId) override { return live(ctx); }
  std::size_t snapshots_in_use(const StageContext &) const override { return cache_ ? 2 : 1; }

  const std::optional<ParamSet> &cache() const { return cache_; }

 private:
  bool momentum_only_;
  std::optional<ParamSet> cache_;
};

}  // namespace

std::unique_ptr<StageStrategy> make_stage_strategy(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kWeightStashing: return std::make_unique<StashingStrategy>();
    case StrategyKind::kTwoBuffered: return std::make_unique<TwoBufferedStrategy>();
    case StrategyKind::kSpecTrain: return std::make_unique<PredictingStrategy>(true);
    case StrategyKind::kPipeOptim: return std::make_unique<PredictingStrategy>(false);
    default: return std::make_unique<LiveStrategy>();
  }
}

WeightChoice strategy_forward_weights(StageStrategy &strat, StageContext &ctx, BatchId id) {
  return strat.forward_weights(ctx, id);
}

WeightChoice strategy_backward_weights(StageStrategy &strat, StageContext &ctx, BatchId id) {
  return strat.backward_weights(ctx, id);
}

std::int64_t prediction_distance(const StageContext &ctx) {
  const std::int64_t s = version_difference(ctx.depth, ctx.stage.rank);
  return std::min<std::int64_t>(s, static_cast<std::int64_t>(ctx.stage.stash.size()));
}

std::uint64_t checksum(const ParamSet &params, std::uint64_t h) {
  for (const auto &m : params) {
    for (double v : m.values()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

namespace {

struct Executor {
  StageModel *stage;
  OptimizerState opt_state;
  std::unique_ptr<StageStrategy> strategy;
  ParamSet grad_sum;
  int grad_count = 0;
  std::vector<std::string> names;
};

using StageKey = std::pair<BatchId, int>;

Matrix micro_slice(const Matrix &m, int micro, int per_mini) {
  if (per_mini == 1) return m;
  const std::size_t rows = m.rows() / static_cast<std::size_t>(per_mini);
  return slice_rows(m, rows * micro, rows * (micro + 1));
}

std::string where(const ScheduleEvent &e) {
  return " (mini-batch " + std::to_string(e.mb) + ", stage " + std::to_string(e.stage) + ")";
}

}  // namespace

RunReport execute(const Timeline &tl, std::vector<StageModel> &stages, const OptimizerKind &opt,
                  StrategyKind strat, const std::vector<Batch> &data, const ExecuteOptions &options) {
  if (static_cast<int>(stages.size()) != tl.depth) {
    throw DimensionError("timeline depth " + std::to_string(tl.depth) + " != stage count " +
                         std::to_string(stages.size()));
  }
  if (static_cast<std::int64_t>(data.size()) != tl.n_batches) {
    throw DimensionError("timeline has " + std::to_string(tl.n_batches) + " mini-batches, data has " +
                         std::to_string(data.size()));
  }
  opt.validate();
  validate_strategy(strat, tl.kind, opt.tag, tl.depth);
  const int per_mini = tl.micro_per_mini;
  for (const auto &b : data) {
    if (b.x.rows() % static_cast<std::size_t>(per_mini) != 0) {
      throw DimensionError("batch of " + std::to_string(b.x.rows()) + " rows does not split into " +
                           std::to_string(per_mini) + " equal micro-batches");
    }
  }
  std::function<double(std::int64_t)> lr_for = options.lr_for;
  if (!lr_for) lr_for = [&opt](std::int64_t) { return opt.lr; };

  std::vector<Executor> ex;
  for (auto &s : stages) {
    Executor e{&s, OptimizerState::zeros_like(opt.tag, s.params), make_stage_strategy(strat), {}, 0, {}};
    for (std::size_t i = 0; i < s.params.size(); ++i) e.names.push_back(s.param_name(i));
    ex.push_back(std::move(e));
  }

  RunReport report;
  report.seed = options.seed;
  std::map<StageKey, Matrix> acts, grads;
  std::map<StageKey, std::size_t> record_at;
  std::map<std::int64_t, std::pair<double, int>> micro_loss;
  const int last = tl.depth - 1;

  for (const auto &e : tl.events) {
    Executor &x = ex[e.stage];
    StageModel &stage = *x.stage;
    StageContext ctx{stage, x.opt_state, opt, tl.depth, lr_for(e.mb)};
    const BatchId id{e.mb, e.micro};
    try {
      switch (e.kind) {
        case EventKind::kForward: {
          Matrix input;
          if (e.stage == 0) {
            input = micro_slice(data[e.mb - 1].x, e.micro, per_mini);
          } else {
            auto node = acts.extract({id, e.stage});
            if (node.empty()) throw std::logic_error("missing upstream activation" + where(e));
            input = std::move(node.mapped());
          }
          const WeightChoice w = x.strategy->forward_weights(ctx, id);
          Matrix out = stage_forward(stage, w.weights, w.effective_version(), id, input);
          x.strategy->after_forward(ctx, id);
          record_at[{id, e.stage}] = report.versions.size();
          report.versions.push_back(
              {e.mb, e.stage, e.micro, w.version, 0, 0, w.predicted, w.predicted ? w.target : 0});
          if (e.stage == last) {
            LossGrad lg = loss_and_grad(options.loss, out, micro_slice(data[e.mb - 1].y, e.micro, per_mini));
            grads[{id, e.stage}] = std::move(lg.grad);
            auto &[sum, count] = micro_loss[e.mb];
            sum += lg.loss;
            if (++count == per_mini) {
              report.losses.push_back({static_cast<std::int64_t>(report.losses.size()) + 1, e.mb,
                                       sum / static_cast<double>(per_mini)});
              micro_loss.erase(e.mb);
            }
          } else {
            acts[{id, e.stage + 1}] = std::move(out);
          }
          break;
        }
        case EventKind::kBackward: {
          auto node = grads.extract({id, e.stage});
          if (node.empty()) throw std::logic_error("missing downstream gradient" + where(e));
          const WeightChoice w = x.strategy->backward_weights(ctx, id);
          StageGrads g = stage_backward(stage, w.weights, id, node.mapped());
          auto &rec = report.versions[record_at.at({id, e.stage})];
          rec.backward_version = w.version;
          rec.live_at_backward = stage.version;
          if (e.stage > 0) grads[{id, e.stage - 1}] = std::move(g.grad_in);
          if (x.grad_count == 0) {
            x.grad_sum = std::move(g.param_grads);
          } else {
            for (std::size_t i = 0; i < x.grad_sum.size(); ++i) x.grad_sum[i] += g.param_grads[i];
          }
          ++x.grad_count;
          break;
        }
        case EventKind::kUpdate: {
          if (!x.strategy->should_step(ctx, e.mb, tl.n_batches)) break;
          if (x.grad_count == 0) throw std::logic_error("update without gradients" + where(e));
          x.strategy->before_step(ctx);
          if (x.grad_count > 1) {
            for (auto &g : x.grad_sum) g *= 1.0 / static_cast<double>(x.grad_count);
          }
          step(opt, x.opt_state, stage.params, x.grad_sum, ctx.lr, x.names);
          ++stage.version;
          x.grad_sum.clear();
          x.grad_count = 0;
          break;
        }
      }
    } catch (const NumericError &err) {
      throw NumericError(std::string(err.what()) + where(e));
    }
    x.strategy->observe(ctx);
  }

  if (!acts.empty() || !grads.empty()) throw std::logic_error("pipeline finished with data in flight");
  for (auto &x : ex) {
    if (x.stage->stash.size() != 0) {
      throw std::logic_error("stage " + std::to_string(x.stage->rank) + " finished with a non-empty stash");
    }
    report.peak_snapshots.push_back(x.strategy->peak_snapshots());
    report.peak_stash.push_back(x.stage->stash.peak());
    report.final_versions.push_back(x.stage->version);
  }
  if (tl.horizon > 0) {
    report.bubble_total = bubble_ratio(tl, full_window(tl));
    const SlotWindow w = tl.kind == ScheduleKind::k1F1B ? steady_state_window(tl) : batch_window(tl, 1);
    if (w.length() > 0) report.bubble_window = bubble_ratio(tl, w);
  }
  report.makespan = makespan(tl, CostModel::uniform(tl.depth));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto &s : stages) h = checksum(s.params, h);
  report.params_checksum = h;
  return report;
}

std::vector<std::size_t> memory_peaks(const RunReport &report) { return report.peak_snapshots; }

std::vector<EventMetrics> staleness_and_inconsistency(const RunReport &report) {
  std::vector<EventMetrics> out;
  out.reserve(report.versions.size());
  for (const auto &r : report.versions) {
    const std::int64_t fwd = r.forward_effective();
    out.push_back({r.mb, r.stage, r.micro, fwd != r.backward_version, r.live_at_backward - fwd});
  }
  return out;
}

}  // namespace pipesim
