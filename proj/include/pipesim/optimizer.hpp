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

#ifndef PIPESIM_OPTIMIZER_HPP_
#define PIPESIM_OPTIMIZER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pipesim/matrix.hpp"
#include "pipesim/model.hpp"

namespace pipesim {

enum class OptimizerTag { kSgdm, kAdam, kAdamW };

std::string to_string(OptimizerTag t);
OptimizerTag parse_optimizer(std::string_view s);

struct OptimizerKind {
  OptimizerTag tag = OptimizerTag::kSgdm;
  double lr = 0.01;
  // SGDM
  double momentum = 0.9;  // u
  double dampening = 0.0;  // tau
  double weight_decay = 5e-4;
  // Adam / AdamW
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decoupled_decay = 1e-2;  // lambda, AdamW only

  // Throws ConfigError naming the offending hyperparameter.
  void validate() const;
  bool operator==(const OptimizerKind &) const = default;
};

struct OptimizerState {
  std::vector<Matrix> first;   // SGDM velocity v, or Adam m
  std::vector<Matrix> second;  // Adam v; empty for SGDM
  std::int64_t step_count = 0;

  static OptimizerState zeros_like(OptimizerTag tag, const ParamSet &params);
};

// One optimizer update at learning rate `lr`. `names` labels parameters for
// the NumericError raised when a result is non-finite; may be empty.
void step(const OptimizerKind &kind, OptimizerState &state, ParamSet &params,
          const ParamSet &grads, double lr, const std::vector<std::string> &names = {});

// Step direction of the most recent update, without touching state:
//   SGDM        v
//   Adam/AdamW  m_hat / (sqrt(v_hat) + eps), bias exponent = step_count
// AdamW's decoupled decay is not part of the direction. Zeros before the
// first step.
ParamSet delta_w(const OptimizerKind &kind, const OptimizerState &state, const ParamSet &like);

// W - lr * s * dW, entrywise.
ParamSet predict_weights(const ParamSet &params, double lr, std::int64_t s, const ParamSet &dw);
Matrix predict_weights(const Matrix &w, double lr, std::int64_t s, const Matrix &dw);

// Updates between a mini-batch's forward and backward at `rank` in a
// steady 1F1B pipeline: D - rank - 1.
std::int64_t version_difference(std::int64_t depth, std::int64_t rank);

}  // namespace pipesim

#endif  // PIPESIM_OPTIMIZER_HPP_
