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

#ifndef PIPESIM_TESTS_ORACLE_HPP_
#define PIPESIM_TESTS_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pipesim/matrix.hpp"
#include "pipesim/model.hpp"
#include "pipesim/optimizer.hpp"
#include "pipesim/rng.hpp"

// Test-side reference implementations. Nothing here calls into the
// library's layers, optimizers or runtime.
namespace pipesim::testing_util {

inline Matrix random_matrix(std::size_t r, std::size_t c, RngStream &rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double &v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

inline double max_abs_diff(const ParamSet &a, const ParamSet &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, pipesim::max_abs_diff(a[i], b[i]));
  return m;
}

// Straight-line reference network used as an oracle: no stages, no stash.
struct ReferenceNet {
  std::vector<LayerSpec> layers;
  ParamSet params;

  struct Trace {
    std::vector<Matrix> inputs, pre, post;
  };

  Matrix forward(const Matrix &x, Trace *trace = nullptr) const {
    Matrix h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix &w = params[2 * l];
      const Matrix &b = params[2 * l + 1];
      Matrix z(h.rows(), w.cols());
      for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
          double s = 0.0;
          for (std::size_t k = 0; k < w.rows(); ++k) s += h(i, k) * w(k, j);
          z(i, j) = s + b(0, j);
        }
      }
      Matrix a = z;
      for (double &v : a.values()) {
        if (layers[l].activation == Activation::kTanh) v = std::tanh(v);
        if (layers[l].activation == Activation::kRelu) v = v > 0 ? v : 0.0;
      }
      if (trace) {
        trace->inputs.push_back(h);
        trace->pre.push_back(z);
        trace->post.push_back(a);
      }
      h = a;
    }
    return h;
  }

  // Parameter gradients and input gradient for upstream gradient `gout`.
  std::pair<ParamSet, Matrix> backward(const Matrix &x, const Matrix &gout) const {
    Trace t;
    forward(x, &t);
    ParamSet grads(params.size());
    Matrix g = gout;
    for (std::size_t l = layers.size(); l-- > 0;) {
      Matrix dz = g;
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (layers[l].activation == Activation::kTanh) dz[i] *= 1.0 - t.post[l][i] * t.post[l][i];
        if (layers[l].activation == Activation::kRelu) dz[i] = t.pre[l][i] > 0 ? dz[i] : 0.0;
      }
      const Matrix &in = t.inputs[l];
      const Matrix &w = params[2 * l];
      Matrix dw(w.rows(), w.cols()), db(1, w.cols()), dx(in.rows(), in.cols());
      for (std::size_t k = 0; k < w.rows(); ++k)
        for (std::size_t j = 0; j < w.cols(); ++j)
          for (std::size_t i = 0; i < in.rows(); ++i) dw(k, j) += in(i, k) * dz(i, j);
      for (std::size_t i = 0; i < dz.rows(); ++i)
        for (std::size_t j = 0; j < dz.cols(); ++j) db(0, j) += dz(i, j);
      for (std::size_t i = 0; i < in.rows(); ++i)
        for (std::size_t k = 0; k < w.rows(); ++k)
          for (std::size_t j = 0; j < w.cols(); ++j) dx(i, k) += dz(i, j) * w(k, j);
      grads[2 * l] = dw;
      grads[2 * l + 1] = db;
      g = dx;
    }
    return {grads, g};
  }
};

// Mean-squared-error gradient.
inline Matrix mse_grad(const Matrix &pred, const Matrix &y) {
  Matrix g(pred.rows(), pred.cols());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * (pred[i] - y[i]) / n;
  return g;
}

// One SGDM step over a parameter set, written out entrywise.
inline void sgdm_update(const OptimizerKind &k, double lr, ParamSet &w, ParamSet &v, const ParamSet &g) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w[i].size(); ++j) {
      const double gd = g[i][j] + k.weight_decay * w[i][j];
      v[i][j] = k.momentum * v[i][j] + (1.0 - k.dampening) * gd;
      w[i][j] -= lr * v[i][j];
    }
  }
}

// SGDM training loop on MSE with `micro`-way mean gradient accumulation.
inline ParamSet reference_training(const std::vector<LayerSpec> &layers, const ParamSet &init,
                                   const std::vector<std::pair<Matrix, Matrix>> &batches, const OptimizerKind &k,
                                   int micro) {
  ReferenceNet net{layers, init};
  ParamSet v;
  for (const auto &p : net.params) v.emplace_back(p.rows(), p.cols());
  for (const auto &[bx, by] : batches) {
    ParamSet acc;
    const std::size_t per = bx.rows() / static_cast<std::size_t>(micro);
    for (int m = 0; m < micro; ++m) {
      const Matrix x = slice_rows(bx, per * m, per * (m + 1));
      const Matrix y = slice_rows(by, per * m, per * (m + 1));
      auto [g, gin] = net.backward(x, mse_grad(net.forward(x), y));
      if (acc.empty()) {
        acc = g;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
      }
    }
    if (micro > 1) {
      for (auto &a : acc) a *= 1.0 / micro;
    }
    sgdm_update(k, k.lr, net.params, v, acc);
  }
  return net.params;
}

}  // namespace pipesim::testing_util

#endif  // PIPESIM_TESTS_ORACLE_HPP_
