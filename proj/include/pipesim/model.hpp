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

#ifndef PIPESIM_MODEL_HPP_
#define PIPESIM_MODEL_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pipesim/layers.hpp"
#include "pipesim/matrix.hpp"

namespace pipesim {

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::kLinear;
  bool operator==(const LayerSpec &) const = default;
};

// Parameters laid out as [W0, b0, W1, b1, ...]; W is in x out, b is 1 x out.
using ParamSet = std::vector<Matrix>;

// Layer dims >= 1 and chained.
void validate_layers(const std::vector<LayerSpec> &specs);

// The whole, unpartitioned network.
struct Mlp {
  std::vector<LayerSpec> layers;
  ParamSet params;
};

// Xavier-uniform weights and zero biases, drawn layer by layer from one
// stream so the result does not depend on how the model is later split.
Mlp init_mlp(const std::vector<LayerSpec> &specs, std::uint64_t seed);

Matrix mlp_predict(const Mlp &mlp, const Matrix &x);

// Identifies one unit of pipeline work. micro is 0 outside GPipe.
struct BatchId {
  std::int64_t mb = 0;
  int micro = 0;
  auto operator<=>(const BatchId &) const = default;
};

struct StashEntry {
  Matrix input;
  std::vector<Matrix> pre;   // per-layer pre-activations
  std::vector<Matrix> post;  // per-layer outputs
  std::int64_t weights_version = 0;
};

// Per-stage activations kept between a mini-batch's forward and backward.
class ActivationStash {
 public:
  void put(BatchId id, StashEntry entry);
  // Removes and returns the entry; throws if absent.
  StashEntry take(BatchId id);
  bool contains(BatchId id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::size_t peak() const { return peak_; }
  const StashEntry &at(BatchId id) const;

 private:
  std::map<BatchId, StashEntry> entries_;
  std::size_t peak_ = 0;
};

struct StageModel {
  int rank = 0;
  std::size_t first_layer = 0;  // global index of layers[0]
  std::vector<LayerSpec> layers;
  ParamSet params;
  std::int64_t version = 1;  // W_t index; +1 per applied update
  ActivationStash stash;

  std::string param_name(std::size_t i) const;
  std::size_t input_dim() const { return layers.front().in_dim; }
  std::size_t output_dim() const { return layers.back().out_dim; }
};

// Layers per stage under a uniform count split; earlier stages take the extra.
std::vector<std::size_t> partition_counts(std::size_t n_layers, std::size_t depth);

// Splits the network into `depth` contiguous stages (ranks 0..depth-1),
// copying the corresponding parameters.
std::vector<StageModel> partition_layers(const Mlp &mlp, std::size_t depth);

// Reassembles stage parameters into one Mlp (inverse of partition_layers).
Mlp join_stages(const std::vector<StageModel> &stages);

// Runs the stage's layers on `input` with `weights` (a snapshot shaped like
// stage.params) and stashes what the backward pass needs.
Matrix stage_forward(StageModel &stage, const ParamSet &weights, std::int64_t weights_version,
                     BatchId id, const Matrix &input);

struct StageGrads {
  Matrix grad_in;
  ParamSet param_grads;
  std::int64_t forward_weights_version = 0;
};

// Backprop through the stage using the stashed activations of `id` and the
// given weights; consumes the stash entry.
StageGrads stage_backward(StageModel &stage, const ParamSet &weights, BatchId id,
                          const Matrix &grad_out);

}  // namespace pipesim

#endif  // PIPESIM_MODEL_HPP_
