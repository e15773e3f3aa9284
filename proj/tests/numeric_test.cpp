/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "retina/error.hpp"
#include "retina/gradcheck.hpp"
#include "retina/ops.hpp"
#include "retina/optim.hpp"
#include "test_util.hpp"

namespace retina::nn {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

// Oracles below are deliberately naive and share no code with ops.cpp.

Tensor direct_conv(const Tensor& x, const Tensor& k, const Tensor& b, int stride, int pad) {
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor out({std::size_t(K), std::size_t(Ho), std::size_t(Wo)});
  for (int o = 0; o < K; ++o)
    for (int y = 0; y < Ho; ++y)
      for (int xx = 0; xx < Wo; ++xx) {
        double s = b[o];
        for (int c = 0; c < C; ++c)
          for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
              int iy = y * stride + i - pad, ix = xx * stride + j - pad;
              double v = (iy < 0 || ix < 0 || iy >= H || ix >= W) ? 0.0 : x.at(c, iy, ix);
              s += v * k[((o * C + c) * kh + i) * kw + j];
            }
        out.at(o, y, xx) = s;
      }
  return out;
}

TEST(Conv2d, IdentityKernelReproducesInput) {
  Tape tape(false);
  Rng rng(1);
  Tensor x = random_tensor({1, 3, 3}, rng);
  Var out = conv2d(tape.constant(x), tape.constant(Tensor({1, 1, 1, 1}, 1.0)), tape.constant(Tensor({1}, 0.0)), 1, 0);
  EXPECT_EQ(out.value(), x);
}

TEST(Conv2d, OnesKernelSumsWindow) {
  Tape tape(false);
  Var out = conv2d(tape.constant(Tensor({1, 2, 2}, {1, 2, 3, 4})), tape.constant(Tensor({1, 1, 2, 2}, 1.0)),
                   tape.constant(Tensor({1}, 0.0)), 1, 0);
  ASSERT_EQ(out.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(out.value()[0], 10.0);
}

TEST(Conv2d, MatchesDirectConvolution) {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Tensor x = random_tensor({3, 8, 8}, rng), k = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
    for (int stride : {1, 2}) {
      for (int pad : {0, 1}) {
        Tape tape(false);
        Var out = conv2d(tape.constant(x), tape.constant(k), tape.constant(b), stride, pad);
        Tensor expect = direct_conv(x, k, b, stride, pad);
        ASSERT_EQ(out.shape(), expect.shape());
        EXPECT_LT(max_abs_diff(out.value().data(), expect.data()), 1e-10);
      }
    }
  }
}

TEST(Conv2d, RejectsShapeMismatch) {
  Tape tape(false);
  Var x = tape.constant(Tensor({2, 4, 4}));
  EXPECT_THROW(conv2d(x, tape.constant(Tensor({1, 3, 3, 3})), tape.constant(Tensor({1})), 1, 0), ShapeError);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor({1, 2, 7, 7})), tape.constant(Tensor({1})), 1, 1), ShapeError);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor({1, 2, 3, 3})), tape.constant(Tensor({2})), 1, 0), ShapeError);
}

TEST(MaxPool, ConstantAndSmallCases) {
  Tape tape(false);
  Var c = maxpool2d(tape.constant(Tensor({2, 4, 4}, 3.5)), 2, 2);
  for (double v : c.value().data()) EXPECT_EQ(v, 3.5);
  Var m = maxpool2d(tape.constant(Tensor({1, 2, 2}, {1, 2, 3, 4})), 2, 2);
  EXPECT_EQ(m.value(), Tensor({1, 1, 1}, {4}));
  EXPECT_THROW(maxpool2d(tape.constant(Tensor({1, 2, 2})), 3, 1), ShapeError);
}

TEST(MaxPool, MatchesNestedLoopOracle) {
  Rng rng(3);
  Tensor x = random_tensor({2, 6, 6}, rng);
  Tape tape(false);
  Var out = maxpool2d(tape.constant(x), 2, 2);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t xx = 0; xx < 3; ++xx) {
        double best = std::max({x.at(c, 2 * y, 2 * xx), x.at(c, 2 * y, 2 * xx + 1), x.at(c, 2 * y + 1, 2 * xx),
                                x.at(c, 2 * y + 1, 2 * xx + 1)});
        EXPECT_EQ(out.value().at(c, y, xx), best);
      }
}

TEST(Relu, Cases) {
  Tape tape(false);
  EXPECT_EQ(relu(tape.constant(Tensor::vector({-1, -2}))).value(), Tensor::vector({0, 0}));
  EXPECT_EQ(relu(tape.constant(Tensor::vector({1, 2}))).value(), Tensor::vector({1, 2}));
  EXPECT_EQ(relu(tape.constant(Tensor::vector({-1, 0, 2}))).value(), Tensor::vector({0, 0, 2}));
}

TEST(Linear, IdentityZeroAndOracle) {
  Tape tape(false);
  Tensor eye({3, 3}, 0.0);
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor x = Tensor::vector({0.5, -2, 3});
  EXPECT_EQ(linear(tape.constant(x), tape.constant(eye), tape.constant(Tensor({3}))).value(), x);
  Tensor b = Tensor::vector({1, 2, 3});
  EXPECT_EQ(linear(tape.constant(Tensor({3})), tape.constant(eye), tape.constant(b)).value(), b);

  Rng rng(9);
  Tensor w = random_tensor({3, 4}, rng), in = random_tensor({4}, rng), bias = random_tensor({3}, rng);
  Var y = linear(tape.constant(in), tape.constant(w), tape.constant(bias));
  for (std::size_t i = 0; i < 3; ++i) {
    double s = bias[i];
    for (std::size_t j = 0; j < 4; ++j) s += w.at(i, j) * in[j];
    EXPECT_NEAR(y.value()[i], s, 1e-12);
  }
  EXPECT_THROW(linear(tape.constant(Tensor({5})), tape.constant(w), tape.constant(bias)), ShapeError);
}

TEST(GlobalAvgPool, Cases) {
  Tape tape(false);
  EXPECT_EQ(global_avg_pool(tape.constant(Tensor({3, 2, 2}, 1.25))).value(), Tensor({3}, 1.25));
  EXPECT_EQ(global_avg_pool(tape.constant(Tensor({1, 2, 2}, {1, 3, 5, 7}))).value()[0], 4.0);
  Rng rng(4);
  Tensor x = random_tensor({8, 5, 5}, rng);
  Var y = global_avg_pool(tape.constant(x));
  for (std::size_t k = 0; k < 8; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 25; ++i) s += x[k * 25 + i];
    EXPECT_NEAR(y.value()[k], s / 25.0, 1e-12);
  }
}

TEST(SoftmaxCrossEntropy, Cases) {
  Tape tape(false);
  EXPECT_NEAR(softmax_cross_entropy(tape.constant(Tensor({4}, 0.3)), 2).value()[0], std::log(4.0), 1e-15);
  double big = softmax_cross_entropy(tape.constant(Tensor::vector({1000, 0})), 0).value()[0];
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 0.0, 1e-12);
  EXPECT_THROW(softmax_cross_entropy(tape.constant(Tensor({3})), 3), ShapeError);

  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor z = random_tensor({7}, rng, -5, 5);
    std::size_t target = rng.below(7);
    long double total = 0;
    for (double v : z.data()) total += std::exp(static_cast<long double>(v));
    long double expect = -(static_cast<long double>(z[target]) - std::log(total));
    EXPECT_NEAR(softmax_cross_entropy(tape.constant(z), target).value()[0], static_cast<double>(expect), 1e-10);
  }
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Tensor z = random_tensor({9}, rng, -20, 20);
    auto p = softmax(z.data());
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    Tensor shifted = z;
    const double shift = rng.uniform(-100, 100);
    for (double& v : shifted.data()) v += shift;
    auto q = softmax(shifted.data());
    EXPECT_LT(max_abs_diff(p, q), 1e-12);
  }
}

struct LstmFixture {
  Tensor w_ih, w_hh, bias;
};

TEST(Lstm, ZeroParamsGiveZeroState) {
  Tape tape(false);
  LstmWeights w{tape.constant(Tensor({8, 3})), tape.constant(Tensor({8, 2})), tape.constant(Tensor({8}))};
  auto s = lstm_step(tape.constant(Tensor::vector({1, -2, 3})),
                     {tape.constant(Tensor({2})), tape.constant(Tensor({2}))}, w);
  EXPECT_EQ(s.h.value(), Tensor({2}));
  EXPECT_EQ(s.c.value(), Tensor({2}));
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
  Tape tape(false);
  Tensor bias({4}, 0.0);
  bias[1] = 1000.0;
  LstmWeights w{tape.constant(Tensor({4, 2})), tape.constant(Tensor({4, 1})), tape.constant(bias)};
  auto s = lstm_step(tape.constant(Tensor::vector({0.7, -0.1})),
                     {tape.constant(Tensor({1})), tape.constant(Tensor::vector({2.0}))}, w);
  EXPECT_EQ(s.c.value()[0], 2.0);
}

TEST(Lstm, MatchesGateEquations) {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::size_t D = 3, H = 4;
    Tensor wih = random_tensor({4 * H, D}, rng), whh = random_tensor({4 * H, H}, rng), b = random_tensor({4 * H}, rng);
    Tensor x = random_tensor({D}, rng), h = random_tensor({H}, rng), c = random_tensor({H}, rng);
    Tape tape(false);
    auto s = lstm_step(tape.constant(x), {tape.constant(h), tape.constant(c)},
                       {tape.constant(wih), tape.constant(whh), tape.constant(b)});
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (std::size_t j = 0; j < H; ++j) {
      double pre[4];
      for (int g = 0; g < 4; ++g) {
        std::size_t r = g * H + j;
        double acc = b[r];
        for (std::size_t d = 0; d < D; ++d) acc += wih.at(r, d) * x[d];
        for (std::size_t k = 0; k < H; ++k) acc += whh.at(r, k) * h[k];
        pre[g] = acc;
      }
      double cn = sig(pre[1]) * c[j] + sig(pre[0]) * std::tanh(pre[2]);
      double hn = sig(pre[3]) * std::tanh(cn);
      EXPECT_NEAR(s.c.value()[j], cn, 1e-10);
      EXPECT_NEAR(s.h.value()[j], hn, 1e-10);
    }
  }
}

TEST(Lstm, RejectsShapeMismatch) {
  Tape tape(false);
  LstmWeights w{tape.constant(Tensor({8, 3})), tape.constant(Tensor({8, 2})), tape.constant(Tensor({8}))};
  EXPECT_THROW(lstm_step(tape.constant(Tensor({4})), {tape.constant(Tensor({2})), tape.constant(Tensor({2}))}, w),
               ShapeError);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(2);
  Tensor w = random_tensor({5}, rng);
  Tape tape;
  tape.backward(sum(tape.parameter(w)));
  for (double g : w.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, Square) {
  Tensor w = Tensor::scalar(3.0);
  Tape tape;
  Var p = tape.parameter(w);
  tape.backward(mul(p, p));
  EXPECT_EQ(w.grad()[0], 6.0);
}

TEST(Backward, RejectsNonScalarAndForeignLoss) {
  Tensor w({3}, 1.0);
  Tape tape;
  Var p = tape.parameter(w);
  EXPECT_THROW(tape.backward(relu(p)), ShapeError);
  Tape other;
  Tensor v = Tensor::scalar(1.0);
  Var q = other.parameter(v);
  EXPECT_THROW(tape.backward(q), Error);
  EXPECT_THROW(add(p, other.constant(Tensor({3}))), Error);
}

TEST(Backward, EachOpVisitedOnce) {
  Tensor w = Tensor::scalar(2.0);
  Tape tape;
  Var p = tape.parameter(w);
  Var loss = mul(p, p);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), Error);
  EXPECT_EQ(w.grad()[0], 4.0);
}

// Builds a loss from every differentiable op; used for the finite-difference
// property over seeds.
struct OpZoo {
  Tensor image, kernels, conv_bias, fc_w, fc_b, emb, wih, whh, lbias;
  std::size_t target = 0;

  explicit OpZoo(std::uint64_t seed) {
    Rng rng(seed);
    image = random_tensor({2, 6, 6}, rng);
    kernels = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
    conv_bias = random_tensor({3}, rng, -0.1, 0.1);
    fc_w = random_tensor({4, 3}, rng);
    fc_b = random_tensor({4}, rng);
    emb = random_tensor({5, 4}, rng);
    wih = random_tensor({12, 4}, rng);
    whh = random_tensor({12, 3}, rng);
    lbias = random_tensor({12}, rng);
    target = rng.below(4);
  }

  NamedParams params() {
    return {{"kernels", &kernels}, {"conv_bias", &conv_bias}, {"fc_w", &fc_w}, {"fc_b", &fc_b}, {"emb", &emb},
            {"wih", &wih},         {"whh", &whh},             {"lbias", &lbias}};
  }

  Var build(Tape& t, bool grads) {
    auto P = [&](Tensor& x) { return grads ? t.parameter(x) : t.constant_ref(x); };
    Var feat = relu(conv2d(t.constant_ref(image), P(kernels), P(conv_bias), 1, 1));
    Var pooled = global_avg_pool(maxpool2d(feat, 2, 2));
    Var logits = linear(pooled, P(fc_w), P(fc_b));
    Var ce = softmax_cross_entropy(logits, target);
    LstmWeights lw{P(wih), P(whh), P(lbias)};
    LstmState s{t.constant(Tensor({3})), t.constant(Tensor({3}))};
    Var e = row(P(emb), 2);
    s = lstm_step(average(e, scale(slice(logits, 0, 4), 0.3)), s, lw);
    s = lstm_step(row(P(emb), 4), s, lw);
    Var extra = sum(mul(s.h, sub(s.c, s.h)));
    std::vector<Var> parts{ce, extra, sum(tanh(s.c))};
    return mean(parts);
  }

  double loss() {
    Tape t(false);
    return build(t, false).value()[0];
  }
};

TEST(Backward, AllOpsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    OpZoo zoo(seed);
    auto params = zoo.params();
    zero_grads(params);
    Tape tape;
    tape.backward(zoo.build(tape, true));
    auto report = finite_difference_check([&] { return zoo.loss(); }, params, 1e-5, 1e-4);
    EXPECT_TRUE(report.passed()) << "seed " << seed << "\n" << report.summary();
  }
}

TEST(Sgd, Steps) {
  Tensor p = Tensor::scalar(1.0);
  p.zero_grad();
  p.grad()[0] = 2.0;
  NamedParams params{{"p", &p}};
  sgd_step(params, 0.0);
  EXPECT_EQ(p[0], 1.0);
  sgd_step(params, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.8);

  Tensor a = Tensor::vector({1.0, -1.0}), b = a;
  a.zero_grad();
  b.zero_grad();
  a.grad()[0] = 0.5, a.grad()[1] = -0.25;
  b.grad()[0] = 1.0, b.grad()[1] = -0.5;
  sgd_step({{"a", &a}}, 0.1);
  sgd_step({{"a", &a}}, 0.1);
  sgd_step({{"b", &b}}, 0.1);
  EXPECT_NEAR(a[0], b[0], 1e-15);
  EXPECT_NEAR(a[1], b[1], 1e-15);

  Tensor missing = Tensor::scalar(1.0);
  EXPECT_THROW(sgd_step({{"missing", &missing}}, 0.1), Error);
}

TEST(SgdConfig, Validation) {
  SgdConfig ok;
  EXPECT_NO_THROW(ok.validate());
  EXPECT_THROW((SgdConfig{0.0, 5.0, 50}.validate()), DataError);
  EXPECT_THROW((SgdConfig{0.1, 1.0, 50}.validate()), DataError);
  EXPECT_THROW((SgdConfig{0.1, 5.0, 0}.validate()), DataError);
}

TEST(GradCheck, LinearModelIsExact) {
  Rng rng(5);
  Tensor w = random_tensor({3, 4}, rng), b = random_tensor({3}, rng), x = random_tensor({4}, rng);
  NamedParams params{{"w", &w}, {"b", &b}};
  auto build = [&](Tape& t, bool g) {
    return sum(linear(t.constant_ref(x), g ? t.parameter(w) : t.constant_ref(w), g ? t.parameter(b) : t.constant_ref(b)));
  };
  zero_grads(params);
  Tape tape;
  tape.backward(build(tape, true));
  auto report = finite_difference_check(
      [&] {
        Tape t(false);
        return build(t, false).value()[0];
      },
      params, 1e-5, 1e-10);
  EXPECT_TRUE(report.passed()) << report.summary();
}

TEST(GradCheck, ReluAwayFromKink) {
  Tensor w = Tensor::vector({0.5, -0.7, 1.3, -2.0, 0.05});
  NamedParams params{{"w", &w}};
  auto build = [&](Tape& t, bool g) {
    Var p = g ? t.parameter(w) : t.constant_ref(w);
    return sum(mul(relu(p), p));
  };
  zero_grads(params);
  Tape tape;
  tape.backward(build(tape, true));
  auto report = finite_difference_check(
      [&] {
        Tape t(false);
        return build(t, false).value()[0];
      },
      params, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed()) << report.summary();
}

TEST(GradCheck, CatchesCorruptedGradient) {
  Rng rng(6);
  Tensor w = random_tensor({4}, rng);
  NamedParams params{{"w", &w}};
  auto build = [&](Tape& t, bool g) {
    Var p = g ? t.parameter(w) : t.constant_ref(w);
    return sum(mul(p, tanh(p)));
  };
  zero_grads(params);
  Tape tape;
  tape.backward(build(tape, true));
  for (double& g : w.grad()) g *= 1.10;
  auto report = finite_difference_check(
      [&] {
        Tape t(false);
        return build(t, false).value()[0];
      },
      params, 1e-5, 1e-4);
  EXPECT_FALSE(report.passed());
}

TEST(GradCheck, ReportsNonFiniteProbe) {
  Tensor w = Tensor::scalar(1.0);
  w.zero_grad();
  auto report = finite_difference_check([] { return std::nan(""); }, {{"w", &w}}, 1e-5, 1e-4);
  ASSERT_EQ(report.blocks.size(), 1u);
  EXPECT_FALSE(report.passed());
  EXPECT_NE(report.blocks[0].failure.find("element 0"), std::string::npos);
}

TEST(Init, XavierIsSeededAndBounded) {
  Rng a(42), b(42);
  Tensor x = xavier_uniform({16, 8}, 8, 16, a), y = xavier_uniform({16, 8}, 8, 16, b);
  EXPECT_EQ(x, y);
  const double bound = std::sqrt(6.0 / 24.0);
  for (double v : x.data()) {
    EXPECT_LE(std::abs(v), bound);
    EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
}

}  // namespace
}  // namespace retina::nn
