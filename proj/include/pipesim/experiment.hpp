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

#ifndef PIPESIM_EXPERIMENT_HPP_
#define PIPESIM_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pipesim/config.hpp"
#include "pipesim/runtime.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {

inline constexpr const char *kLossCsvHeader = "iteration,mb,loss";
inline constexpr const char *kVersionsCsvHeader =
    "mb,stage,micro,forward_version,backward_version,live_at_backward,predicted,prediction_target,staleness,"
    "inconsistent";
inline constexpr const char *kTimelineCsvHeader = "slot,stage,kind,mb,micro";
inline constexpr const char *kCompareCsvHeader =
    "label,strategy,optimizer,depth,final_loss,eval_loss,eval_accuracy,inconsistent_events,mean_staleness,"
    "stage_staleness,memory_peaks,bubble_ratio,makespan";
inline constexpr const char *kSweepCsvHeader =
    "axis,value,seed,final_loss,eval_loss,eval_accuracy,inconsistent_events,mean_staleness,bubble_ratio,makespan";
inline constexpr const char *kSweepSummaryCsvHeader =
    "axis,value,runs,final_loss_mean,final_loss_std,eval_accuracy_mean,eval_accuracy_std,mean_staleness_mean,"
    "mean_staleness_std,bubble_ratio_mean,bubble_ratio_std,makespan_mean,makespan_std";

struct RunMetrics {
  double final_train_loss = 0.0;  // full training split, final weights
  double eval_loss = 0.0;
  std::optional<double> eval_accuracy;  // classification only
  std::int64_t inconsistent_events = 0;
  double mean_staleness = 0.0;
  std::vector<std::int64_t> max_staleness_by_stage;
};

struct RunOutcome {
  ExperimentConfig config;
  RunReport report;
  Mlp final_model;
  RunMetrics metrics;
};

std::int64_t batch_count(const ExperimentConfig &cfg);
Timeline timeline_for(const ExperimentConfig &cfg, std::optional<std::int64_t> n_batches = std::nullopt);

RunOutcome run_experiment(const ExperimentConfig &cfg);

nlohmann::json report_json(const RunOutcome &outcome);
// FNV-1a over the report JSON with its checksum field left out.
std::string report_checksum(const RunOutcome &outcome);
std::string losses_csv(const RunReport &report);
std::string versions_csv(const RunReport &report);
// Writes report.json, losses.csv and versions.csv into
// <out_root>/run-<config hash>/ and returns that directory.
std::filesystem::path write_run(const RunOutcome &outcome, const std::filesystem::path &out_root);

struct CompareRow {
  std::string label;
  std::string strategy;
  std::string optimizer;
  int depth = 1;
  RunMetrics metrics;
  std::vector<std::size_t> memory_peaks;
  double bubble_ratio = 0.0;
  double makespan = 0.0;
};

// Configs must share dataset, model and seed.
std::vector<CompareRow> compare(const std::vector<std::pair<std::string, ExperimentConfig>> &configs);
std::string compare_csv(const std::vector<CompareRow> &rows);
nlohmann::json compare_json(const std::vector<CompareRow> &rows);

std::string timeline_csv(const Timeline &tl);
nlohmann::json timeline_json(const Timeline &tl);
nlohmann::json bubble_stats(const Timeline &tl);

struct SweepRow {
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  RunMetrics metrics;
  double bubble_ratio = 0.0;
  double makespan = 0.0;
};

struct SweepStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct SweepSummary {
  std::string axis;
  std::string value;
  std::size_t runs = 0;
  SweepStat final_loss, eval_accuracy, mean_staleness, bubble_ratio, makespan;
  bool has_accuracy = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
};

// Applies `value` to the dotted config field `axis` (e.g. "depth",
// "optimizer.lr"); throws ConfigError for an unknown axis.
ExperimentConfig with_axis(const ExperimentConfig &base, const std::string &axis, const std::string &value);

SweepResult sweep(const ExperimentConfig &base, const std::string &axis, const std::vector<std::string> &values,
                  const std::vector<std::uint64_t> &seeds);
std::string sweep_csv(const SweepResult &r);
std::string sweep_summary_csv(const SweepResult &r);

}  // namespace pipesim

#endif  // PIPESIM_EXPERIMENT_HPP_
