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

#include "pipesim/model.hpp"

#include <cmath>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"

namespace pipesim {

void validate_layers(const std::vector<LayerSpec> &specs) {
  if (specs.empty()) throw DimensionError("model has no layers");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].in_dim < 1 || specs[i].out_dim < 1) {
      throw DimensionError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0 && specs[i - 1].out_dim != specs[i].in_dim) {
      throw DimensionError("layer " + std::to_string(i - 1) + " out_dim " +
                           std::to_string(specs[i - 1].out_dim) + " != layer " +
                           std::to_string(i) + " in_dim " + std::to_string(specs[i].in_dim));
    }
  }
}

Mlp init_mlp(const std::vector<LayerSpec> &specs, std::uint64_t seed) {
  validate_layers(specs);
  RngStream rng(seed, /*stream=*/0x1417);
  Mlp mlp{specs, {}};
  for (const auto &s : specs) {
    const double a = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
    Matrix w(s.in_dim, s.out_dim);
    for (double &v : w.values()) v = rng.uniform(-a, a);
    mlp.params.push_back(std::move(w));
    mlp.params.emplace_back(1, s.out_dim);
  }
  return mlp;
}

namespace {

Matrix run_layers(const std::vector<LayerSpec> &layers, const ParamSet &weights,
                  const Matrix &input, StashEntry *record) {
  if (weights.size() != 2 * layers.size()) {
    throw DimensionError("weights snapshot has " + std::to_string(weights.size()) +
                         " tensors, stage expects " + std::to_string(2 * layers.size()));
  }
  Matrix x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (x.cols() != layers[l].in_dim) {
      throw DimensionError("layer input " + x.shape_str() + " does not match in_dim " +
                           std::to_string(layers[l].in_dim));
    }
    Matrix z = add_row(matmul(x, weights[2 * l]), weights[2 * l + 1]);
    Matrix a = layer_forward(layers[l].activation, z);
    if (record != nullptr) {
      record->pre.push_back(std::move(z));
      record->post.push_back(a);
    }
    x = std::move(a);
  }
  return x;
}

}  // namespace

Matrix mlp_predict(const Mlp &mlp, const Matrix &x) {
  return run_layers(mlp.layers, mlp.params, x, nullptr);
}

void ActivationStash::put(BatchId id, StashEntry entry) {
  if (!entries_.emplace(id, std::move(entry)).second) {
    throw std::logic_error("activation stash already holds mini-batch " + std::to_string(id.mb) +
                           " micro " + std::to_string(id.micro));
  }
  peak_ = std::max(peak_, entries_.size());
}

StashEntry ActivationStash::take(BatchId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw std::logic_error("no activation stash for mini-batch " + std::to_string(id.mb) +
                           " micro " + std::to_string(id.micro));
  }
  StashEntry e = std::move(it->second);
  entries_.erase(it);
  return e;
}

const StashEntry &ActivationStash::at(BatchId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw std::logic_error("no activation stash for mini-batch " + std::to_string(id.mb));
  }
  return it->second;
}

std::string StageModel::param_name(std::size_t i) const {
  return "layer" + std::to_string(first_layer + i / 2) + (i % 2 == 0 ? ".weight" : ".bias");
}

std::vector<std::size_t> partition_counts(std::size_t n_layers, std::size_t depth) {
  if (depth < 1) throw DimensionError("pipeline depth must be >= 1");
  if (depth > n_layers) {
    throw DimensionError("pipeline depth " + std::to_string(depth) + " exceeds layer count " +
                         std::to_string(n_layers));
  }
  std::vector<std::size_t> counts(depth, n_layers / depth);
  for (std::size_t k = 0; k < n_layers % depth; ++k) ++counts[k];
  return counts;
}

std::vector<StageModel> partition_layers(const Mlp &mlp, std::size_t depth) {
  validate_layers(mlp.layers);
  const auto counts = partition_counts(mlp.layers.size(), depth);
  std::vector<StageModel> stages;
  std::size_t next = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    StageModel s;
    s.rank = static_cast<int>(k);
    s.first_layer = next;
    for (std::size_t l = next; l < next + counts[k]; ++l) {
      s.layers.push_back(mlp.layers[l]);
      s.params.push_back(mlp.params[2 * l]);
      s.params.push_back(mlp.params[2 * l + 1]);
    }
    next += counts[k];
    stages.push_back(std::move(s));
  }
  return stages;
}

Mlp join_stages(const std::vector<StageModel> &stages) {
  Mlp mlp;
  for (const auto &s : stages) {
    mlp.layers.insert(mlp.layers.end(), s.layers.begin(), s.layers.end());
    mlp.params.insert(mlp.params.end(), s.params.begin(), s.params.end());
  }
  return mlp;
}

Matrix stage_forward(StageModel &stage, const ParamSet &weights, std::int64_t weights_version,
                     BatchId id, const Matrix &input) {
  if (stage.stash.contains(id)) {
    throw std::logic_error("stage " + std::to_string(stage.rank) + ": duplicate forward of mini-batch " +
                           std::to_string(id.mb));
  }
  StashEntry entry;
  entry.input = input;
  entry.weights_version = weights_version;
  Matrix out = run_layers(stage.layers, weights, input, &entry);
  stage.stash.put(id, std::move(entry));
  return out;
}

StageGrads stage_backward(StageModel &stage, const ParamSet &weights, BatchId id,
                          const Matrix &grad_out) {
  StashEntry e = stage.stash.take(id);
  StageGrads g;
  g.forward_weights_version = e.weights_version;
  g.param_grads.resize(weights.size());
  Matrix grad = grad_out;
  for (std::size_t l = stage.layers.size(); l-- > 0;) {
    const Matrix dz = activation_backward(stage.layers[l].activation, e.pre[l], e.post[l], grad);
    const Matrix &x = l == 0 ? e.input : e.post[l - 1];
    g.param_grads[2 * l] = matmul(transpose(x), dz);
    g.param_grads[2 * l + 1] = col_sums(dz);
    grad = matmul(dz, transpose(weights[2 * l]));
  }
  g.grad_in = std::move(grad);
  return g;
}

}  // namespace pipesim
