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

#include "pipesim/optimizer.hpp"

#include <cmath>

#include "pipesim/error.hpp"

namespace pipesim {

std::string to_string(OptimizerTag t) {
  switch (t) {
    case OptimizerTag::kSgdm: return "sgdm";
    case OptimizerTag::kAdam: return "adam";
    case OptimizerTag::kAdamW: return "adamw";
  }
  return "?";
}

OptimizerTag parse_optimizer(std::string_view s) {
  if (s == "sgdm") return OptimizerTag::kSgdm;
  if (s == "adam") return OptimizerTag::kAdam;
  if (s == "adamw") return OptimizerTag::kAdamW;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'", "optimizer.kind");
}

void OptimizerKind::validate() const {
  auto unit = [](double v, const char *name) {
    if (!(v >= 0.0 && v < 1.0)) {
      throw ConfigError("must lie in [0, 1), got " + std::to_string(v),
                        std::string("optimizer.") + name);
    }
  };
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("must be > 0", "optimizer.lr");
  if (tag == OptimizerTag::kSgdm) {
    unit(momentum, "momentum");
    unit(dampening, "dampening");
    if (!(weight_decay >= 0.0)) throw ConfigError("must be >= 0", "optimizer.weight_decay");
  } else {
    unit(beta1, "beta1");
    unit(beta2, "beta2");
    if (!(eps > 0.0)) throw ConfigError("must be > 0", "optimizer.eps");
    if (!(decoupled_decay >= 0.0)) throw ConfigError("must be >= 0", "optimizer.decoupled_decay");
  }
}

OptimizerState OptimizerState::zeros_like(OptimizerTag tag, const ParamSet &params) {
  OptimizerState s;
  for (const auto &p : params) {
    s.first.emplace_back(p.rows(), p.cols());
    if (tag != OptimizerTag::kSgdm) s.second.emplace_back(p.rows(), p.cols());
  }
  return s;
}

namespace {

std::string label(const std::vector<std::string> &names, std::size_t i) {
  return i < names.size() ? names[i] : "param" + std::to_string(i);
}

double adam_direction(const OptimizerKind &k, double m, double v, double bc1, double bc2) {
  return (m / bc1) / (std::sqrt(v / bc2) + k.eps);
}

}  // namespace

void step(const OptimizerKind &kind, OptimizerState &state, ParamSet &params,
          const ParamSet &grads, double lr, const std::vector<std::string> &names) {
  if (grads.size() != params.size()) {
    throw DimensionError("step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  if (state.first.empty()) state = OptimizerState::zeros_like(kind.tag, params);
  const std::int64_t t = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(kind.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kind.beta2, static_cast<double>(t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix &w = params[i];
    const Matrix &g = grads[i];
    require_same_shape(w, g, "step");
    if (!g.all_finite()) throw NumericError("non-finite gradient for " + label(names, i));
    Matrix &m = state.first[i];
    switch (kind.tag) {
      case OptimizerTag::kSgdm:
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double gd = g[j] + kind.weight_decay * w[j];
          m[j] = kind.momentum * m[j] + (1.0 - kind.dampening) * gd;
          w[j] -= lr * m[j];
        }
        break;
      case OptimizerTag::kAdam:
      case OptimizerTag::kAdamW: {
        Matrix &v = state.second[i];
        const double lambda = kind.tag == OptimizerTag::kAdamW ? kind.decoupled_decay : 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
          m[j] = kind.beta1 * m[j] + (1.0 - kind.beta1) * g[j];
          v[j] = kind.beta2 * v[j] + (1.0 - kind.beta2) * g[j] * g[j];
          const double dir = adam_direction(kind, m[j], v[j], bc1, bc2);
          if (lambda == 0.0) {
            w[j] -= lr * dir;
          } else {
            w[j] -= lr * (dir + lambda * w[j]);
          }
        }
        break;
      }
    }
    if (!w.all_finite()) throw NumericError("non-finite update result for " + label(names, i));
  }
  state.step_count = t;
}

ParamSet delta_w(const OptimizerKind &kind, const OptimizerState &state, const ParamSet &like) {
  ParamSet out;
  out.reserve(like.size());
  if (state.step_count == 0 || state.first.empty()) {
    for (const auto &p : like) out.emplace_back(p.rows(), p.cols());
    return out;
  }
  if (kind.tag == OptimizerTag::kSgdm) return state.first;
  const auto t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(kind.beta1, t);
  const double bc2 = 1.0 - std::pow(kind.beta2, t);
  for (std::size_t i = 0; i < state.first.size(); ++i) {
    const Matrix &m = state.first[i];
    const Matrix &v = state.second[i];
    Matrix d(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.size(); ++j) d[j] = adam_direction(kind, m[j], v[j], bc1, bc2);
    out.push_back(std::move(d));
  }
  return out;
}

Matrix predict_weights(const Matrix &w, double lr, std::int64_t s, const Matrix &dw) {
  if (s < 0) throw std::invalid_argument("predict_weights: negative version difference");
  require_same_shape(w, dw, "predict_weights");
  Matrix out = w;
  if (s == 0) return out;
  const double scale = lr * static_cast<double>(s);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= scale * dw[j];
  return out;
}

ParamSet predict_weights(const ParamSet &params, double lr, std::int64_t s, const ParamSet &dw) {
  if (params.size() != dw.size()) {
    throw DimensionError("predict_weights: parameter/direction count mismatch");
  }
  ParamSet out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(predict_weights(params[i], lr, s, dw[i]));
  return out;
}

std::int64_t version_difference(std::int64_t depth, std::int64_t rank) {
  if (depth < 1 || rank < 0 || rank >= depth) {
    throw std::out_of_range("version_difference: rank " + std::to_string(rank) +
                            " outside [0, " + std::to_string(depth) + ")");
  }
  return depth - rank - 1;
}

}  // namespace pipesim
