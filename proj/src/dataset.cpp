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

#include "pipesim/dataset.hpp"

#include <cmath>
#include <numbers>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"

namespace pipesim {

namespace {
constexpr double kSpiralTurns = 1.5;  // arm length in turns
}

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::kSyntheticRegression: return "synthetic-regression";
    case DatasetKind::kTwoSpirals: return "two-spirals";
    case DatasetKind::kTinyClassification: return "tiny-classification";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "synthetic-regression") return DatasetKind::kSyntheticRegression;
  if (s == "two-spirals") return DatasetKind::kTwoSpirals;
  if (s == "tiny-classification") return DatasetKind::kTinyClassification;
  throw ConfigError("unknown dataset kind '" + std::string(s) + "'", "dataset.kind");
}

void DatasetSpec::validate() const {
  if (n_samples < 10) throw ConfigError("need at least 10 samples", "dataset.n_samples");
  if (input_dim < 1) throw ConfigError("must be >= 1", "dataset.input_dim");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("must be >= 0", "dataset.noise");
  if (kind == DatasetKind::kTwoSpirals) {
    if (input_dim != 2) throw ConfigError("two-spirals is 2-dimensional", "dataset.input_dim");
    if (classes != 2) throw ConfigError("two-spirals has 2 classes", "dataset.classes");
  }
  if (kind == DatasetKind::kTinyClassification && classes < 2) {
    throw ConfigError("need at least 2 classes", "dataset.classes");
  }
}

double regression_function(std::uint64_t seed, std::span<const double> x) {
  RngStream coef(seed, 0xC0EF);
  double lin = 0.0;
  double quad = 0.0;
  for (double xi : x) {
    lin += coef.uniform(-1.0, 1.0) * xi;
    quad += coef.uniform(-0.5, 0.5) * xi * xi;
  }
  return std::sin(2.0 * lin) + quad;
}

std::pair<double, double> spiral_point(int cls, double t) {
  const double angle = 2.0 * std::numbers::pi * kSpiralTurns * t + std::numbers::pi * cls;
  const double r = 0.1 + 0.9 * t;
  return {r * std::cos(angle), r * std::sin(angle)};
}

Dataset generate_dataset(const DatasetSpec &spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = spec.n_samples;
  const std::size_t d = spec.input_dim;
  RngStream rng(seed, 0xDA7A);
  Matrix x(n, d);
  Matrix y(n, 1);
  switch (spec.kind) {
    case DatasetKind::kSyntheticRegression:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        const auto row = x.values().subspan(i * d, d);
        y(i, 0) = regression_function(seed, row) + spec.noise * rng.uniform(-1.0, 1.0);
      }
      break;
    case DatasetKind::kTwoSpirals:
      for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % 2);
        const auto [px, py] = spiral_point(cls, rng.uniform());
        x(i, 0) = px + spec.noise * rng.normal();
        x(i, 1) = py + spec.noise * rng.normal();
        y(i, 0) = cls;
      }
      break;
    case DatasetKind::kTinyClassification: {
      Matrix centers(spec.classes, d);
      for (double &c : centers.values()) c = rng.uniform(-2.0, 2.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % spec.classes;
        for (std::size_t j = 0; j < d; ++j) x(i, j) = centers(cls, j) + spec.noise * rng.normal();
        y(i, 0) = static_cast<double>(cls);
      }
      break;
    }
  }
  const auto order = permutation(n, rng);
  const std::size_t n_train = (n * 4) / 5;
  Dataset ds;
  ds.loss = spec.classification() ? LossKind::kSoftmaxXent : LossKind::kMse;
  ds.x_train = Matrix(n_train, d);
  ds.y_train = Matrix(n_train, 1);
  ds.x_eval = Matrix(n - n_train, d);
  ds.y_eval = Matrix(n - n_train, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    Matrix &dx = i < n_train ? ds.x_train : ds.x_eval;
    Matrix &dy = i < n_train ? ds.y_train : ds.y_eval;
    const std::size_t r = i < n_train ? i : i - n_train;
    for (std::size_t j = 0; j < d; ++j) dx(r, j) = x(src, j);
    dy(r, 0) = y(src, 0);
  }
  return ds;
}

std::size_t batches_per_epoch(const Dataset &ds, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("must be >= 1", "batch_size");
  return ds.x_train.rows() / batch_size;
}

std::vector<Batch> make_batches(const Dataset &ds, std::size_t batch_size, std::int64_t epochs,
                                std::uint64_t seed) {
  const std::size_t per_epoch = batches_per_epoch(ds, batch_size);
  if (per_epoch == 0) throw ConfigError("larger than the training split", "batch_size");
  const std::size_t d = ds.x_train.cols();
  std::vector<Batch> out;
  out.reserve(per_epoch * static_cast<std::size_t>(epochs));
  for (std::int64_t e = 0; e < epochs; ++e) {
    RngStream rng(seed, 0x5000 + static_cast<std::uint64_t>(e));
    const auto order = permutation(ds.x_train.rows(), rng);
    for (std::size_t b = 0; b < per_epoch; ++b) {
      Batch batch{Matrix(batch_size, d), Matrix(batch_size, 1)};
      for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t src = order[b * batch_size + i];
        for (std::size_t j = 0; j < d; ++j) batch.x(i, j) = ds.x_train(src, j);
        batch.y(i, 0) = ds.y_train(src, 0);
      }
      out.push_back(std::move(batch));
    }
  }
  return out;
}

}  // namespace pipesim
