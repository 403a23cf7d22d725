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

#include <stdexcept>

#include "gtest/gtest.h"
#include "pipesim/error.hpp"
#include "pipesim/model.hpp"
#include "test_util.hpp"

namespace pipesim {
namespace {

using testing_util::random_matrix;
using testing_util::ReferenceNet;

std::vector<LayerSpec> chain(const std::vector<std::size_t> &dims, Activation act) {
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) out.push_back({dims[i], dims[i + 1], act});
  out.back().activation = Activation::kLinear;
  return out;
}

std::vector<std::size_t> stage_sizes(const std::vector<StageModel> &stages) {
  std::vector<std::size_t> n;
  for (const auto &s : stages) n.push_back(s.layers.size());
  return n;
}

TEST(Partition, UniformCounts) {
  const auto specs8 = chain({3, 3, 3, 3, 3, 3, 3, 3, 3}, Activation::kTanh);
  EXPECT_EQ(stage_sizes(partition_layers(init_mlp(specs8, 1), 4)),
            (std::vector<std::size_t>{2, 2, 2, 2}));
  const auto specs7 = chain({3, 3, 3, 3, 3, 3, 3, 3}, Activation::kTanh);
  EXPECT_EQ(stage_sizes(partition_layers(init_mlp(specs7, 1), 4)),
            (std::vector<std::size_t>{2, 2, 2, 1}));
  const auto specs5 = chain({3, 3, 3, 3, 3, 3}, Activation::kTanh);
  EXPECT_EQ(stage_sizes(partition_layers(init_mlp(specs5, 1), 1)), (std::vector<std::size_t>{5}));
}

TEST(Partition, RanksAndContiguity) {
  const auto mlp = init_mlp(chain({2, 4, 5, 6, 7, 1}, Activation::kRelu), 9);
  const auto stages = partition_layers(mlp, 3);
  std::size_t next = 0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    EXPECT_EQ(stages[k].rank, static_cast<int>(k));
    EXPECT_EQ(stages[k].first_layer, next);
    EXPECT_EQ(stages[k].version, 1);
    next += stages[k].layers.size();
  }
  const Mlp back = join_stages(stages);
  EXPECT_EQ(back.layers, mlp.layers);
  EXPECT_EQ(back.params, mlp.params);
}

TEST(Partition, DepthBeyondLayerCountIsAnError) {
  const auto mlp = init_mlp(chain({2, 2, 2}, Activation::kTanh), 1);
  EXPECT_THROW(partition_layers(mlp, 3), DimensionError);
  EXPECT_THROW(partition_layers(mlp, 0), DimensionError);
}

TEST(Layers, ChainValidation) {
  EXPECT_THROW(validate_layers({{2, 3, Activation::kTanh}, {4, 1, Activation::kLinear}}),
               DimensionError);
  EXPECT_THROW(validate_layers({{0, 3, Activation::kTanh}}), DimensionError);
  EXPECT_THROW(validate_layers({}), DimensionError);
}

TEST(StageForward, IdentityLinearStage) {
  Mlp mlp{{{3, 3, Activation::kLinear}}, {Matrix::identity(3), Matrix(1, 3)}};
  auto stages = partition_layers(mlp, 1);
  const Matrix x{{1, -2, 3.5}, {0, 4, 5}};
  EXPECT_EQ(stage_forward(stages[0], stages[0].params, 1, {1, 0}, x), x);
}

TEST(StageForward, SingleLinearLayer) {
  Mlp mlp{{{1, 1, Activation::kLinear}}, {Matrix{{2}}, Matrix{{1}}}};
  auto stages = partition_layers(mlp, 1);
  EXPECT_EQ(stage_forward(stages[0], stages[0].params, 1, {1, 0}, Matrix{{3}}), (Matrix{{7}}));
  EXPECT_EQ(stages[0].stash.at({1, 0}).weights_version, 1);
}

TEST(StageForward, DuplicateAndDimensionErrors) {
  auto stages = partition_layers(init_mlp(chain({2, 3, 1}, Activation::kTanh), 2), 1);
  const Matrix x(4, 2, 0.5);
  stage_forward(stages[0], stages[0].params, 1, {1, 0}, x);
  EXPECT_THROW(stage_forward(stages[0], stages[0].params, 1, {1, 0}, x), std::logic_error);
  EXPECT_THROW(stage_forward(stages[0], stages[0].params, 1, {2, 0}, Matrix(4, 3)), DimensionError);
  EXPECT_THROW(stage_backward(stages[0], stages[0].params, {7, 0}, Matrix(4, 1)), std::logic_error);
}

class SplitVersusWhole : public ::testing::TestWithParam<std::size_t> {};

TEST_P(SplitVersusWhole, ForwardAndBackwardMatchReference) {
  const std::size_t depth = GetParam();
  const auto specs = chain({5, 8, 7, 6, 9, 4, 3}, Activation::kTanh);
  const Mlp mlp = init_mlp(specs, 100 + depth);
  const ReferenceNet ref{mlp.layers, mlp.params};
  RngStream rng(depth);
  const Matrix x = random_matrix(6, 5, rng);
  const Matrix gout = random_matrix(6, 3, rng);

  auto stages = partition_layers(mlp, depth);
  Matrix h = x;
  for (auto &s : stages) h = stage_forward(s, s.params, s.version, {1, 0}, h);
  EXPECT_LE(max_abs_diff(h, ref.forward(x)), 1e-15);

  Matrix g = gout;
  ParamSet grads;
  for (std::size_t k = depth; k-- > 0;) {
    auto sg = stage_backward(stages[k], stages[k].params, {1, 0}, g);
    grads.insert(grads.begin(), sg.param_grads.begin(), sg.param_grads.end());
    g = sg.grad_in;
  }
  const auto [ref_grads, ref_gin] = ref.backward(x, gout);
  EXPECT_LE(testing_util::max_abs_diff(grads, ref_grads), 1e-15);
  EXPECT_LE(max_abs_diff(g, ref_gin), 1e-15);
  for (const auto &s : stages) EXPECT_EQ(s.stash.size(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Depths, SplitVersusWhole, ::testing::Values(1, 2, 3, 6));

TEST(StageBackward, ZeroUpstreamGradient) {
  auto stages = partition_layers(init_mlp(chain({3, 4, 2}, Activation::kRelu), 4), 1);
  RngStream rng(2);
  stage_forward(stages[0], stages[0].params, 1, {1, 0}, random_matrix(5, 3, rng));
  const auto g = stage_backward(stages[0], stages[0].params, {1, 0}, Matrix(5, 2));
  EXPECT_EQ(g.grad_in, Matrix::zeros(5, 3));
  for (const auto &p : g.param_grads) EXPECT_EQ(max_abs_diff(p, Matrix::zeros(p.rows(), p.cols())), 0.0);
}

TEST(StageBackward, ParamGradsMatchFiniteDifferences) {
  for (auto act : {Activation::kTanh, Activation::kRelu, Activation::kLinear}) {
    const auto specs = chain({4, 6, 5, 3}, act);
    RngStream rng(31);
    const Matrix x = random_matrix(7, 4, rng);
    const Matrix target = random_matrix(7, 3, rng);
    auto stages = partition_layers(init_mlp(specs, 17), 1);
    StageModel &st = stages[0];

    const Matrix pred = stage_forward(st, st.params, 1, {1, 0}, x);
    const auto lg = loss_and_grad(LossKind::kMse, pred, target);
    const auto g = stage_backward(st, st.params, {1, 0}, lg.grad);

    for (std::size_t i = 0; i < st.params.size(); ++i) {
      auto f = [&](const Matrix &p) {
        ParamSet w = st.params;
        w[i] = p;
        return loss_and_grad(LossKind::kMse, mlp_predict(Mlp{specs, w}, x), target).loss;
      };
      testing_util::expect_grad_close(g.param_grads[i], finite_diff_grad(f, st.params[i], 1e-6), 1e-6, 1e-4);
    }
    auto fx = [&](const Matrix &xx) {
      return loss_and_grad(LossKind::kMse, mlp_predict(Mlp{specs, st.params}, xx), target).loss;
    };
    testing_util::expect_grad_close(g.grad_in, finite_diff_grad(fx, x, 1e-6), 1e-6, 1e-4);
  }
}

TEST(StageBackward, SoftmaxNetworkGradientProperty) {
  // Random dims up to 16, several seeds.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream r(seed, 99);
    std::vector<std::size_t> dims{1 + r.below(16)};
    const std::size_t n_layers = 1 + r.below(3);
    for (std::size_t l = 0; l < n_layers; ++l) dims.push_back(2 + r.below(15));
    const auto specs = chain(dims, Activation::kTanh);
    const Mlp mlp = init_mlp(specs, seed);
    const Matrix x = random_matrix(4, dims.front(), r);
    Matrix y(4, 1);
    for (std::size_t i = 0; i < 4; ++i) y(i, 0) = static_cast<double>(r.below(dims.back()));

    auto stages = partition_layers(mlp, 1);
    const Matrix pred = stage_forward(stages[0], mlp.params, 1, {1, 0}, x);
    const auto g = stage_backward(stages[0], mlp.params, {1, 0},
                                  loss_and_grad(LossKind::kSoftmaxXent, pred, y).grad);
    for (std::size_t i = 0; i < mlp.params.size(); ++i) {
      auto f = [&](const Matrix &p) {
        ParamSet w = mlp.params;
        w[i] = p;
        return loss_and_grad(LossKind::kSoftmaxXent, mlp_predict(Mlp{specs, w}, x), y).loss;
      };
      testing_util::expect_grad_close(g.param_grads[i], finite_diff_grad(f, mlp.params[i], 1e-6), 1e-6, 1e-4);
    }
  }
}

TEST(Stash, LifetimeAndPeak) {
  ActivationStash s;
  s.put({1, 0}, {});
  s.put({2, 0}, {});
  s.put({2, 1}, {});
  EXPECT_EQ(s.size(), 3u);
  s.take({1, 0});
  s.put({3, 0}, {});
  EXPECT_EQ(s.peak(), 3u);
  EXPECT_THROW(s.take({1, 0}), std::logic_error);
  EXPECT_THROW(s.put({2, 0}, {}), std::logic_error);
}

TEST(InitMlp, DeterministicAndBounded) {
  const auto specs = chain({4, 16, 1}, Activation::kTanh);
  const Mlp a = init_mlp(specs, 5), b = init_mlp(specs, 5), c = init_mlp(specs, 6);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, c.params);
  const double bound = std::sqrt(6.0 / 20.0);
  for (double v : a.params[0].values()) EXPECT_LE(std::abs(v), bound);
  EXPECT_EQ(a.params[1], Matrix::zeros(1, 16));
}

TEST(StageModel, ParamNames) {
  auto stages = partition_layers(init_mlp(chain({2, 2, 2, 2}, Activation::kTanh), 1), 2);
  EXPECT_EQ(stages[1].param_name(0), "layer2.weight");
  EXPECT_EQ(stages[0].param_name(3), "layer1.bias");
}

}  // namespace
}  // namespace pipesim
