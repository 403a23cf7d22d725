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

#ifndef PIPESIM_LAYERS_HPP_
#define PIPESIM_LAYERS_HPP_

#include <functional>
#include <string>
#include <string_view>

#include "pipesim/matrix.hpp"

namespace pipesim {

enum class Activation { kTanh, kRelu, kLinear };
enum class LossKind { kMse, kSoftmaxXent };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string to_string(LossKind k);
LossKind parse_loss(std::string_view s);

// Elementwise activation.
Matrix layer_forward(Activation kind, const Matrix &x);

// dL/dz given dL/da, with z the pre-activation and a = act(z).
Matrix activation_backward(Activation kind, const Matrix &z, const Matrix &a,
                           const Matrix &grad_a);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // dloss/dpred, same shape as pred
};

// mse: mean over every element of (pred - target)^2.
// softmax-xent: mean over rows of the cross-entropy of softmax(pred). The
// target is either pred-shaped (one-hot or probabilities) or a rows x 1
// column of class indices.
LossGrad loss_and_grad(LossKind kind, const Matrix &pred, const Matrix &target);

// Row-wise argmax of logits; used for accuracy.
std::vector<std::size_t> argmax_rows(const Matrix &m);

// Central-difference estimate of df/dx, one entry at a time.
Matrix finite_diff_grad(const std::function<double(const Matrix &)> &f, const Matrix &x,
                        double h);

}  // namespace pipesim

#endif  // PIPESIM_LAYERS_HPP_
