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

#include "pipesim/layers.hpp"

#include <algorithm>
#include <cmath>

#include "pipesim/error.hpp"

namespace pipesim {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

std::string to_string(LossKind k) { return k == LossKind::kMse ? "mse" : "softmax-xent"; }

LossKind parse_loss(std::string_view s) {
  if (s == "mse") return LossKind::kMse;
  if (s == "softmax-xent") return LossKind::kSoftmaxXent;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

Matrix layer_forward(Activation kind, const Matrix &x) {
  Matrix y = x;
  switch (kind) {
    case Activation::kTanh:
      for (double &v : y.values()) v = std::tanh(v);
      break;
    case Activation::kRelu:
      for (double &v : y.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kLinear:
      break;
  }
  return y;
}

Matrix activation_backward(Activation kind, const Matrix &z, const Matrix &a,
                           const Matrix &grad_a) {
  require_same_shape(z, grad_a, "activation_backward");
  Matrix g = grad_a;
  switch (kind) {
    case Activation::kTanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - a[i] * a[i];
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = z[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::kLinear:
      break;
  }
  return g;
}

namespace {

LossGrad mse(const Matrix &pred, const Matrix &target) {
  require_same_shape(pred, target, "mse");
  const auto n = static_cast<double>(pred.size());
  LossGrad out{0.0, Matrix(pred.rows(), pred.cols())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss /= n;
  return out;
}

LossGrad softmax_xent(const Matrix &pred, const Matrix &target) {
  const std::size_t rows = pred.rows();
  const std::size_t classes = pred.cols();
  Matrix t;
  if (target.rows() == rows && target.cols() == 1 && classes > 1) {
    t = Matrix(rows, classes);
    for (std::size_t i = 0; i < rows; ++i) {
      const double c = target(i, 0);
      if (c < 0 || c >= static_cast<double>(classes) || c != std::floor(c)) {
        throw DimensionError("softmax-xent: class index " + std::to_string(c) +
                             " outside [0," + std::to_string(classes) + ")");
      }
      t(i, static_cast<std::size_t>(c)) = 1.0;
    }
  } else {
    require_same_shape(pred, target, "softmax-xent");
    t = target;
  }
  const auto n = static_cast<double>(rows);
  LossGrad out{0.0, Matrix(rows, classes)};
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = pred(i, 0);
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, pred(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < classes; ++j) z += std::exp(pred(i, j) - mx);
    const double log_z = mx + std::log(z);
    double mass = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      out.loss -= t(i, j) * (pred(i, j) - log_z);
      mass += t(i, j);
    }
    for (std::size_t j = 0; j < classes; ++j) {
      const double p = std::exp(pred(i, j) - log_z);
      out.grad(i, j) = (p * mass - t(i, j)) / n;
    }
  }
  out.loss /= n;
  return out;
}

}  // namespace

LossGrad loss_and_grad(LossKind kind, const Matrix &pred, const Matrix &target) {
  LossGrad out = kind == LossKind::kMse ? mse(pred, target) : softmax_xent(pred, target);
  if (!std::isfinite(out.loss)) throw NumericError(to_string(kind) + ": non-finite loss");
  return out;
}

std::vector<std::size_t> argmax_rows(const Matrix &m) {
  std::vector<std::size_t> idx(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (m(i, j) > m(i, idx[i])) idx[i] = j;
  return idx;
}

Matrix finite_diff_grad(const std::function<double(const Matrix &)> &f, const Matrix &x,
                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite f at index " + std::to_string(i) + " (row " +
                         std::to_string(i / x.cols()) + ", col " + std::to_string(i % x.cols()) +
                         ")");
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace pipesim
