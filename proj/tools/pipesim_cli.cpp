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

// pipesim: run, compare, sweep and inspect pipeline-training simulations.
//
//   pipesim run      --config cfg.json [--out DIR] [--seed N]
//   pipesim compare  --config a.json --config b.json ... [--format csv|json]
//   pipesim timeline --config cfg.json [--batches N] [--format csv|json]
//   pipesim sweep    --config cfg.json --axis depth --values 1,2,4 [--seeds 1,2,3]
//
// Exit codes: 0 ok, 2 configuration error, 3 numeric abort.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipesim/config.hpp"
#include "pipesim/error.hpp"
#include "pipesim/experiment.hpp"

namespace fs = std::filesystem;
using namespace pipesim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::vector<std::string> configs;
  std::string out = "pipesim_out";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

fs::path out_root(const Common &c) {
  if (const char *env = std::getenv("PIPESIM_OUT"); env != nullptr && *env != '\0') return env;
  return c.out;
}

ExperimentConfig load(const std::string &path, const Common &c) {
  ExperimentConfig cfg = load_config(path);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.validate();
  }
  return cfg;
}

void write_text(const fs::path &p, const std::string &text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int cmd_run(const Common &c) {
  const ExperimentConfig cfg = load(c.configs.front(), c);
  const RunOutcome o = run_experiment(cfg);
  const fs::path dir = write_run(o, out_root(c));
  std::cout << "run " << to_string(cfg.strategy) << " depth=" << cfg.depth << " final_loss=" << o.metrics.final_train_loss;
  if (o.metrics.eval_accuracy) std::cout << " eval_accuracy=" << *o.metrics.eval_accuracy;
  std::cout << " checksum=" << report_checksum(o) << "\n" << dir.string() << "\n";
  return 0;
}

int cmd_compare(const Common &c) {
  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  for (const auto &p : c.configs) configs.emplace_back(fs::path(p).stem().string(), load(p, c));
  const auto rows = compare(configs);
  std::string text;
  std::string name;
  if (c.format == "json") {
    text = compare_json(rows).dump(2) + "\n";
    name = "compare.json";
  } else {
    text = compare_csv(rows);
    name = "compare.csv";
  }
  const fs::path path = out_root(c) / ("compare-" + hex64(fnv1a(text)).substr(0, 12)) / name;
  write_text(path, text);
  std::cout << text << path.string() << "\n";
  return 0;
}

int cmd_timeline(const Common &c, std::optional<std::int64_t> batches) {
  const ExperimentConfig cfg = load(c.configs.front(), c);
  const Timeline tl = timeline_for(cfg, batches);
  const auto problems = validate_timeline(tl);
  if (!problems.empty()) throw std::logic_error("constructed timeline is invalid: " + problems.front());
  const fs::path dir = out_root(c) / ("timeline-" + config_hash(cfg));
  if (c.format == "json") {
    write_text(dir / "timeline.json", timeline_json(tl).dump(2) + "\n");
  } else {
    write_text(dir / "timeline.csv", timeline_csv(tl));
  }
  const auto stats = bubble_stats(tl);
  write_text(dir / "bubble.json", stats.dump(2) + "\n");
  std::cout << stats.dump(2) << "\n" << dir.string() << "\n";
  return 0;
}

std::vector<std::string> split(const std::string &s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_sweep(const Common &c, const std::string &axis, const std::string &values, const std::string &seeds) {
  const ExperimentConfig base = load(c.configs.front(), c);
  std::vector<std::uint64_t> seed_list;
  for (const auto &s : split(seeds)) {
    try {
      seed_list.push_back(std::stoull(s));
    } catch (const std::exception &) {
      throw ConfigError("not an integer seed: '" + s + "'", "--seeds");
    }
  }
  const SweepResult r = sweep(base, axis, split(values), seed_list);
  const fs::path dir = out_root(c) / ("sweep-" + config_hash(base) + "-" + axis);
  write_text(dir / "sweep.csv", sweep_csv(r));
  write_text(dir / "sweep_summary.csv", sweep_summary_csv(r));
  std::cout << sweep_summary_csv(r) << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Deterministic simulator of pipeline-parallel training strategies"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App *sub, bool many) {
    if (many) {
      sub->add_option("--config", common.configs, "Experiment config (repeatable)")->required();
    } else {
      sub->add_option("--config", common.configs, "Experiment config")->required()->expected(1);
    }
    sub->add_option("--out", common.out, "Output root (PIPESIM_OUT overrides)");
    sub->add_option("--seed", common.seed, "Override the config seed");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  auto *run = app.add_subcommand("run", "Train one configuration and write its report");
  add_common(run, false);
  auto *cmp = app.add_subcommand("compare", "Run several strategies on one problem and tabulate");
  add_common(cmp, true);
  auto *tlc = app.add_subcommand("timeline", "Dump a schedule timeline and its bubble statistics");
  add_common(tlc, false);
  std::optional<std::int64_t> batches;
  tlc->add_option("--batches", batches, "Mini-batch count (default: from the config)");
  auto *swp = app.add_subcommand("sweep", "Vary one config field over values and seeds");
  add_common(swp, false);
  std::string axis, values, seeds;
  swp->add_option("--axis", axis, "Config field, e.g. depth or optimizer.lr")->required();
  swp->add_option("--values", values, "Comma-separated values")->required();
  swp->add_option("--seeds", seeds, "Comma-separated seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(common);
    if (*cmp) return cmd_compare(common);
    if (*tlc) return cmd_timeline(common, batches);
    if (*swp) return cmd_sweep(common, axis, values, seeds);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError &e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
