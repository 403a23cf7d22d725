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

#ifndef PIPESIM_DATASET_HPP_
#define PIPESIM_DATASET_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pipesim/layers.hpp"
#include "pipesim/matrix.hpp"
#include "pipesim/runtime.hpp"

namespace pipesim {

enum class DatasetKind { kSyntheticRegression, kTwoSpirals, kTinyClassification };

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSyntheticRegression;
  std::size_t n_samples = 500;
  std::size_t input_dim = 4;
  std::size_t classes = 2;  // ignored for regression
  double noise = 0.05;
  std::optional<std::uint64_t> seed;  // falls back to the experiment seed

  bool classification() const { return kind != DatasetKind::kSyntheticRegression; }
  std::size_t output_dim() const { return classification() ? classes : 1; }
  void validate() const;
  bool operator==(const DatasetSpec &) const = default;
};

// Targets are an n x 1 column: class indices for classification, values
// for regression. The split is 80/20 after a seeded shuffle.
struct Dataset {
  Matrix x_train, y_train;
  Matrix x_eval, y_eval;
  LossKind loss = LossKind::kMse;
};

Dataset generate_dataset(const DatasetSpec &spec, std::uint64_t seed);

// The noise-free regression target for one input row.
double regression_function(std::uint64_t seed, std::span<const double> x);

// Point on spiral arm `cls` (0 or 1) at parameter t in [0, 1].
std::pair<double, double> spiral_point(int cls, double t);

std::size_t batches_per_epoch(const Dataset &ds, std::size_t batch_size);

// epochs x batches_per_epoch mini-batches, reshuffled every epoch.
std::vector<Batch> make_batches(const Dataset &ds, std::size_t batch_size, std::int64_t epochs,
                                std::uint64_t seed);

}  // namespace pipesim

#endif  // PIPESIM_DATASET_HPP_
