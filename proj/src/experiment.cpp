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

#include "pipesim/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pipesim/dataset.hpp"
#include "pipesim/error.hpp"

namespace pipesim {

using nlohmann::json;

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T> &xs, char sep = ';') {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? std::string(1, sep) : "") << xs[i];
  return os.str();
}

json ratio_json(const BubbleRatio &r) { return {{"idle", r.idle}, {"total", r.total}, {"ratio", r.value()}}; }

RunMetrics summarize(const RunOutcome &o, const Dataset &ds) {
  RunMetrics m;
  m.final_train_loss = loss_and_grad(ds.loss, mlp_predict(o.final_model, ds.x_train), ds.y_train).loss;
  const Matrix eval_pred = mlp_predict(o.final_model, ds.x_eval);
  m.eval_loss = loss_and_grad(ds.loss, eval_pred, ds.y_eval).loss;
  if (ds.loss == LossKind::kSoftmaxXent) {
    const auto cls = argmax_rows(eval_pred);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < cls.size(); ++i) hit += static_cast<double>(cls[i]) == ds.y_eval(i, 0);
    m.eval_accuracy = static_cast<double>(hit) / static_cast<double>(cls.size());
  }
  const auto metrics = staleness_and_inconsistency(o.report);
  m.max_staleness_by_stage.assign(static_cast<std::size_t>(o.config.depth), 0);
  double total = 0.0;
  for (const auto &e : metrics) {
    m.inconsistent_events += e.inconsistent;
    total += static_cast<double>(e.staleness);
    auto &mx = m.max_staleness_by_stage[static_cast<std::size_t>(e.stage)];
    mx = std::max(mx, e.staleness);
  }
  m.mean_staleness = metrics.empty() ? 0.0 : total / static_cast<double>(metrics.size());
  return m;
}

json metrics_json(const RunMetrics &m) {
  return {{"final_train_loss", m.final_train_loss},
          {"eval_loss", m.eval_loss},
          {"eval_accuracy", m.eval_accuracy ? json(*m.eval_accuracy) : json(nullptr)},
          {"inconsistent_events", m.inconsistent_events},
          {"mean_staleness", m.mean_staleness},
          {"max_staleness_by_stage", m.max_staleness_by_stage}};
}

void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::int64_t batch_count(const ExperimentConfig &cfg) {
  const std::size_t n_train = (cfg.dataset.n_samples * 4) / 5;
  return static_cast<std::int64_t>(n_train / cfg.batch_size) * cfg.epochs;
}

Timeline timeline_for(const ExperimentConfig &cfg, std::optional<std::int64_t> n_batches) {
  return build_timeline(cfg.schedule, cfg.depth, n_batches.value_or(batch_count(cfg)), cfg.micro_batches);
}

RunOutcome run_experiment(const ExperimentConfig &cfg) {
  cfg.validate();
  const Dataset ds = generate_dataset(cfg.dataset, cfg.dataset_seed());
  const std::vector<Batch> batches = make_batches(ds, cfg.batch_size, cfg.epochs, cfg.dataset_seed());
  const Timeline tl = timeline_for(cfg, static_cast<std::int64_t>(batches.size()));
  auto stages = partition_layers(init_mlp(cfg.layers(), cfg.seed), static_cast<std::size_t>(cfg.depth));

  const auto per_epoch = static_cast<std::int64_t>(batches_per_epoch(ds, cfg.batch_size));
  ExecuteOptions opts;
  opts.loss = ds.loss;
  opts.seed = cfg.seed;
  opts.lr_for = [&cfg, per_epoch](std::int64_t mb) { return cfg.lr_schedule.at(cfg.optimizer.lr, (mb - 1) / per_epoch); };

  RunOutcome o;
  o.config = cfg;
  o.report = execute(tl, stages, cfg.optimizer, cfg.strategy, batches, opts);
  o.report.config_echo = to_json(cfg).dump();
  o.final_model = join_stages(stages);
  o.metrics = summarize(o, ds);
  return o;
}

namespace {

json report_body(const RunOutcome &o) {
  const RunReport &r = o.report;
  json losses = json::array();
  for (const auto &p : r.losses) losses.push_back({{"iteration", p.iteration}, {"mb", p.mb}, {"loss", p.loss}});
  return {{"schema", "pipesim.run_report/1"},
          {"config", json::parse(r.config_echo.empty() ? to_json(o.config).dump() : r.config_echo)},
          {"config_hash", config_hash(o.config)},
          {"seed", r.seed},
          {"losses", losses},
          {"version_records", r.versions.size()},
          {"metrics", metrics_json(o.metrics)},
          {"memory_peaks", r.peak_snapshots},
          {"peak_stash", r.peak_stash},
          {"final_versions", r.final_versions},
          {"bubble", {{"total", ratio_json(r.bubble_total)},
                      {"window", r.bubble_window ? ratio_json(*r.bubble_window) : json(nullptr)}}},
          {"makespan", r.makespan},
          {"params_checksum", hex64(r.params_checksum)}};
}

}  // namespace

std::string report_checksum(const RunOutcome &o) { return hex64(fnv1a(report_body(o).dump())); }

json report_json(const RunOutcome &o) {
  json j = report_body(o);
  j["report_checksum"] = hex64(fnv1a(j.dump()));
  return j;
}

std::string losses_csv(const RunReport &report) {
  std::string out = std::string(kLossCsvHeader) + "\n";
  for (const auto &p : report.losses) out += std::to_string(p.iteration) + "," + std::to_string(p.mb) + "," + num(p.loss) + "\n";
  return out;
}

std::string versions_csv(const RunReport &report) {
  std::string out = std::string(kVersionsCsvHeader) + "\n";
  const auto metrics = staleness_and_inconsistency(report);
  for (std::size_t i = 0; i < report.versions.size(); ++i) {
    const auto &r = report.versions[i];
    std::ostringstream os;
    os << r.mb << ',' << r.stage << ',' << r.micro << ',' << r.forward_version << ',' << r.backward_version << ','
       << r.live_at_backward << ',' << (r.predicted ? 1 : 0) << ',' << r.prediction_target << ','
       << metrics[i].staleness << ',' << (metrics[i].inconsistent ? 1 : 0) << '\n';
    out += os.str();
  }
  return out;
}

std::filesystem::path write_run(const RunOutcome &o, const std::filesystem::path &out_root) {
  const auto dir = out_root / ("run-" + config_hash(o.config));
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report_json(o).dump(2) + "\n");
  write_file(dir / "losses.csv", losses_csv(o.report));
  write_file(dir / "versions.csv", versions_csv(o.report));
  return dir;
}

std::vector<CompareRow> compare(const std::vector<std::pair<std::string, ExperimentConfig>> &configs) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  const ExperimentConfig &ref = configs.front().second;
  std::vector<CompareRow> rows;
  for (const auto &[label, cfg] : configs) {
    if (cfg.dataset != ref.dataset || cfg.dims != ref.dims || cfg.activations != ref.activations ||
        cfg.seed != ref.seed || cfg.batch_size != ref.batch_size || cfg.epochs != ref.epochs) {
      throw ConfigError("config '" + label + "' does not share dataset, model and seed with '" +
                        configs.front().first + "'");
    }
    const RunOutcome o = run_experiment(cfg);
    rows.push_back({label, to_string(cfg.strategy), to_string(cfg.optimizer.tag), cfg.depth, o.metrics,
                    o.report.peak_snapshots, o.report.bubble_total.value(), o.report.makespan});
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow> &rows) {
  std::string out = std::string(kCompareCsvHeader) + "\n";
  for (const auto &r : rows) {
    std::ostringstream os;
    os << r.label << ',' << r.strategy << ',' << r.optimizer << ',' << r.depth << ',' << num(r.metrics.final_train_loss)
       << ',' << num(r.metrics.eval_loss) << ',' << (r.metrics.eval_accuracy ? num(*r.metrics.eval_accuracy) : "")
       << ',' << r.metrics.inconsistent_events << ',' << num(r.metrics.mean_staleness) << ','
       << join(r.metrics.max_staleness_by_stage) << ',' << join(r.memory_peaks) << ',' << num(r.bubble_ratio) << ','
       << num(r.makespan) << '\n';
    out += os.str();
  }
  return out;
}

json compare_json(const std::vector<CompareRow> &rows) {
  json out = json::array();
  for (const auto &r : rows) {
    out.push_back({{"label", r.label},
                   {"strategy", r.strategy},
                   {"optimizer", r.optimizer},
                   {"depth", r.depth},
                   {"metrics", metrics_json(r.metrics)},
                   {"memory_peaks", r.memory_peaks},
                   {"bubble_ratio", r.bubble_ratio},
                   {"makespan", r.makespan}});
  }
  return out;
}

std::string timeline_csv(const Timeline &tl) {
  std::string out = std::string(kTimelineCsvHeader) + "\n";
  for (const auto &e : tl.events) {
    out += std::to_string(e.slot) + "," + std::to_string(e.stage) + "," + to_string(e.kind) + "," +
           std::to_string(e.mb) + "," + std::to_string(e.micro) + "\n";
  }
  return out;
}

json timeline_json(const Timeline &tl) {
  json events = json::array();
  for (const auto &e : tl.events) {
    events.push_back({{"slot", e.slot}, {"stage", e.stage}, {"kind", to_string(e.kind)}, {"mb", e.mb}, {"micro", e.micro}});
  }
  return {{"schedule", to_string(tl.kind)},
          {"depth", tl.depth},
          {"n_batches", tl.n_batches},
          {"micro_per_mini", tl.micro_per_mini},
          {"horizon", tl.horizon},
          {"events", events}};
}

json bubble_stats(const Timeline &tl) {
  json j = {{"schedule", to_string(tl.kind)}, {"depth", tl.depth}, {"micro_per_mini", tl.micro_per_mini}};
  if (tl.horizon == 0) return j;
  j["total"] = ratio_json(bubble_ratio(tl, full_window(tl)));
  const SlotWindow first = batch_window(tl, 1);
  j["first_batch"] = ratio_json(bubble_ratio(tl, first));
  j["first_batch"]["window"] = {first.begin, first.end};
  if (tl.kind == ScheduleKind::kGPipe) {
    const SlotWindow f = forward_phase_window(tl, 1);
    j["forward_phase"] = ratio_json(bubble_ratio(tl, f));
    j["forward_phase"]["window"] = {f.begin, f.end};
  }
  if (tl.kind == ScheduleKind::k1F1B) {
    const SlotWindow s = steady_state_window(tl);
    if (s.length() > 0) {
      j["steady_state"] = ratio_json(bubble_ratio(tl, s));
      j["steady_state"]["window"] = {s.begin, s.end};
    }
  }
  j["makespan_unit_cost"] = makespan(tl, CostModel::uniform(tl.depth));
  return j;
}

ExperimentConfig with_axis(const ExperimentConfig &base, const std::string &axis, const std::string &value) {
  static const std::map<std::string, std::string> aliases = {{"lr", "optimizer.lr"},
                                                             {"momentum", "optimizer.momentum"},
                                                             {"optimizer", "optimizer.kind"},
                                                             {"n_samples", "dataset.n_samples"},
                                                             {"noise", "dataset.noise"},
                                                             {"T", "micro_batches"}};
  const auto alias = aliases.find(axis);
  const std::string path = alias == aliases.end() ? axis : alias->second;
  std::string pointer;
  for (char ch : "/" + path) pointer += ch == '.' ? '/' : ch;

  json j = to_json(base);
  const json::json_pointer ptr(pointer);
  if (!j.contains(ptr) && path != "dataset.seed") throw ConfigError("unknown sweep axis '" + axis + "'", axis);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error &) {
    v = value;
  }
  j[ptr] = v;
  if (path == "strategy" && v.is_string()) {
    const StrategyKind k = parse_strategy(v.get<std::string>());
    j["schedule"] = to_string(schedule_for(k));
    if (k != StrategyKind::kGPipe) j["micro_batches"] = 1;
    if (k == StrategyKind::kSerial) j["depth"] = 1;
  }
  return parse_config(j);
}

namespace {

SweepStat stat(const std::vector<double> &xs) {
  SweepStat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

SweepResult sweep(const ExperimentConfig &base, const std::string &axis, const std::vector<std::string> &values,
                  const std::vector<std::uint64_t> &seeds) {
  if (values.empty()) throw ConfigError("sweep needs at least one value", axis);
  const std::vector<std::uint64_t> seed_list = seeds.empty() || axis == "seed" ? std::vector<std::uint64_t>{} : seeds;
  SweepResult out;
  for (const auto &value : values) {
    ExperimentConfig cfg = with_axis(base, axis, value);
    std::vector<std::uint64_t> run_seeds = seed_list.empty() ? std::vector<std::uint64_t>{cfg.seed} : seed_list;
    std::vector<double> loss, acc, stale, bubble, span;
    for (auto seed : run_seeds) {
      cfg.seed = seed;
      const RunOutcome o = run_experiment(cfg);
      out.rows.push_back({axis, value, seed, o.metrics, o.report.bubble_total.value(), o.report.makespan});
      loss.push_back(o.metrics.final_train_loss);
      if (o.metrics.eval_accuracy) acc.push_back(*o.metrics.eval_accuracy);
      stale.push_back(o.metrics.mean_staleness);
      bubble.push_back(o.report.bubble_total.value());
      span.push_back(o.report.makespan);
    }
    out.summary.push_back({axis, value, run_seeds.size(), stat(loss), stat(acc), stat(stale), stat(bubble), stat(span),
                           !acc.empty()});
  }
  return out;
}

std::string sweep_csv(const SweepResult &r) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto &row : r.rows) {
    std::ostringstream os;
    os << row.axis << ',' << row.value << ',' << row.seed << ',' << num(row.metrics.final_train_loss) << ','
       << num(row.metrics.eval_loss) << ',' << (row.metrics.eval_accuracy ? num(*row.metrics.eval_accuracy) : "")
       << ',' << row.metrics.inconsistent_events << ',' << num(row.metrics.mean_staleness) << ','
       << num(row.bubble_ratio) << ',' << num(row.makespan) << '\n';
    out += os.str();
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult &r) {
  std::string out = std::string(kSweepSummaryCsvHeader) + "\n";
  for (const auto &s : r.summary) {
    std::ostringstream os;
    os << s.axis << ',' << s.value << ',' << s.runs << ',' << num(s.final_loss.mean) << ',' << num(s.final_loss.std)
       << ',' << (s.has_accuracy ? num(s.eval_accuracy.mean) : "") << ','
       << (s.has_accuracy ? num(s.eval_accuracy.std) : "") << ',' << num(s.mean_staleness.mean) << ','
       << num(s.mean_staleness.std) << ',' << num(s.bubble_ratio.mean) << ',' << num(s.bubble_ratio.std) << ','
       << num(s.makespan.mean) << ',' << num(s.makespan.std) << '\n';
    out += os.str();
  }
  return out;
}

}  // namespace pipesim
