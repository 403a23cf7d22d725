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

#ifndef PIPESIM_CONFIG_HPP_
#define PIPESIM_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipesim/dataset.hpp"
#include "pipesim/model.hpp"
#include "pipesim/optimizer.hpp"
#include "pipesim/runtime.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {

struct LrSchedule {
  enum class Kind { kConstant, kStep };
  Kind kind = Kind::kConstant;
  double factor = 0.1;
  std::vector<std::int64_t> milestones;  // epoch indices at which lr *= factor

  double at(double base, std::int64_t epoch) const;
  bool operator==(const LrSchedule &) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<std::size_t> dims{4, 16, 16, 1};
  std::vector<Activation> activations{Activation::kTanh, Activation::kTanh, Activation::kLinear};
  int depth = 1;
  ScheduleKind schedule = ScheduleKind::kSerial;
  int micro_batches = 1;
  StrategyKind strategy = StrategyKind::kSerial;
  OptimizerKind optimizer;
  LrSchedule lr_schedule;
  DatasetSpec dataset;
  std::int64_t epochs = 1;
  std::size_t batch_size = 16;

  std::vector<LayerSpec> layers() const;
  std::uint64_t dataset_seed() const { return dataset.seed.value_or(seed); }
  // Cross-field checks; throws ConfigError with the field path.
  void validate() const;
  bool operator==(const ExperimentConfig &) const = default;
};

// Parses and validates. Unknown keys and wrong types are ConfigErrors.
ExperimentConfig parse_config(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);
// Every field explicit, keys sorted; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig &c);
// FNV-1a of the canonical JSON text, as 16 hex digits.
std::string config_hash(const ExperimentConfig &c);

std::string hex64(std::uint64_t v);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace pipesim

#endif  // PIPESIM_CONFIG_HPP_
