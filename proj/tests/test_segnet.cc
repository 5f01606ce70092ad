// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/segnet.h"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lad/layers.h"
#include "test_util.h"

namespace lad {
namespace {

using testing::CodeOf;
using testing::RandomTensor;

std::vector<double> RandomVec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

TEST(LayersTest, ConvMatchesDirectLoop) {
  const int in_c = 3, out_c = 4, h = 5, w = 6;
  for (int k : {1, 3}) {
    auto in = RandomVec(in_c * h * w, 1);
    auto weight = RandomVec(out_c * in_c * k * k, 2);
    auto bias = RandomVec(out_c, 3);
    std::vector<double> out(out_c * h * w);
    layers::Conv2dForward<double>(in, in_c, h, w, weight, bias, out_c, k, out);
    const int r = k / 2;
    for (int o = 0; o < out_c; ++o) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = bias[o];
          for (int i = 0; i < in_c; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const int yy = y + ky - r, xx = x + kx - r;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                acc += weight[((o * in_c + i) * k + ky) * k + kx] * in[(i * h + yy) * w + xx];
              }
            }
          }
          EXPECT_NEAR(out[(o * h + y) * w + x], acc, 1e-12);
        }
      }
    }
  }
}

TEST(LayersTest, GroupNormNormalizesEachGroup) {
  const int channels = 4, plane = 9, groups = 2;
  auto in = RandomVec(channels * plane, 4);
  std::vector<double> gamma = {1.0, 2.0, 0.5, 1.5}, beta = {0.0, 1.0, -1.0, 0.3};
  std::vector<double> out(in.size()), xhat(in.size()), rstd(groups);
  layers::GroupNormForward<double>(in, channels, plane, groups, gamma, beta, out, xhat, rstd);
  const int per = channels / groups * plane;
  for (int g = 0; g < groups; ++g) {
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < per; ++i) mean += in[g * per + i] / per;
    for (int i = 0; i < per; ++i) var += std::pow(in[g * per + i] - mean, 2) / per;
    for (int i = 0; i < per; ++i) {
      const int c = (g * per + i) / plane;
      const double expect = (in[g * per + i] - mean) / std::sqrt(var + 1e-5) * gamma[c] + beta[c];
      EXPECT_NEAR(out[g * per + i], expect, 1e-12);
    }
  }
}

// Half-pixel bilinear sampling with edge clamping.
TEST(LayersTest, UpsampleMatchesBilinearFormula) {
  const int h = 3, w = 4;
  auto in = RandomVec(h * w, 5);
  std::vector<double> out(4 * h * w);
  layers::Upsample2Forward<double>(in, 1, h, w, out);
  auto sample = [&](double y, double x) {
    y = std::clamp(y, 0.0, h - 1.0);
    x = std::clamp(x, 0.0, w - 1.0);
    const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0, fx = x - x0;
    return (1 - fy) * ((1 - fx) * in[y0 * w + x0] + fx * in[y0 * w + x1]) +
           fy * ((1 - fx) * in[y1 * w + x0] + fx * in[y1 * w + x1]);
  };
  for (int y = 0; y < 2 * h; ++y) {
    for (int x = 0; x < 2 * w; ++x) {
      EXPECT_NEAR(out[y * 2 * w + x], sample((y + 0.5) / 2 - 0.5, (x + 0.5) / 2 - 0.5), 1e-12);
    }
  }
}

TEST(LayersTest, MaxPoolPicksWindowMaximum) {
  std::vector<double> in = {1, 5, 2, 0, 3, 4, 9, 8};  // 1 x 2 x 4
  std::vector<double> out(2);
  std::vector<std::int32_t> arg(2);
  layers::MaxPool2Forward<double>(in, 1, 2, 4, out, arg);
  EXPECT_EQ(out[0], 5);
  EXPECT_EQ(out[1], 9);
  std::vector<double> grad_in(8, 0.0);
  std::vector<double> grad_out = {1.0, 2.0};
  layers::MaxPool2Backward<double>(grad_out, arg, grad_in);
  EXPECT_EQ(grad_in[1], 1.0);
  EXPECT_EQ(grad_in[6], 2.0);
}

TEST(SegNetTest, SameSeedSameInit) {
  NetConfig c;
  c.seed = 123;
  SegNet<float> a(c), b(c);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  c.seed = 124;
  SegNet<float> d(c);
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), d.parameters().begin()));
}

TEST(SegNetTest, FloatAndDoubleInitAgree) {
  NetConfig c;
  c.seed = 9;
  SegNet<float> f(c);
  SegNet<double> d(c);
  for (std::size_t i = 0; i < f.num_parameters(); ++i) {
    EXPECT_EQ(f.parameters()[i], static_cast<float>(d.parameters()[i]));
  }
}

TEST(SegNetTest, LabelChannelAddsOnlyFirstConvWeights) {
  NetConfig rgb, four;
  four.in_channels = 4;
  SegNet<float> a(rgb), b(four);
  const auto& ia = a.param_info();
  const auto& ib = b.param_info();
  ASSERT_EQ(ia.size(), ib.size());
  for (std::size_t i = 0; i < ia.size(); ++i) {
    EXPECT_EQ(ia[i].name, ib[i].name);
    if (ia[i].name == "enc0.conv.weight") {
      EXPECT_EQ(ib[i].size - ia[i].size, static_cast<std::size_t>(rgb.base_width) * 9);
    } else {
      EXPECT_EQ(ia[i].size, ib[i].size) << ia[i].name;
    }
  }
  EXPECT_EQ(b.num_parameters() - a.num_parameters(), static_cast<std::size_t>(rgb.base_width) * 9);
}

TEST(SegNetTest, OutputShape) {
  NetConfig c{3, 4, 32, 2};
  SegNet<float> net(c);
  LogitsMap out = net.Forward(RandomTensor(3, 64, 64, 1));
  EXPECT_EQ(out.channels(), 4);
  EXPECT_EQ(out.height(), 64);
  EXPECT_EQ(out.width(), 64);
}

TEST(SegNetTest, ZeroHeadGivesZeroLogits) {
  SegNet<float> net(NetConfig{});
  for (float& v : net.parameter("head.conv.weight")) v = 0.0f;
  for (float& v : net.parameter("head.conv.bias")) v = 0.0f;
  LogitsMap out = net.Forward(RandomTensor(3, 16, 16, 2));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(SegNetTest, InferenceIsDeterministic) {
  SegNet<float> net(NetConfig{});
  ImageTensor x = RandomTensor(3, 32, 32, 3);
  EXPECT_EQ(net.Forward(x), net.Forward(x));
}

TEST(SegNetTest, BatchedForwardMatchesSingle) {
  SegNet<float> net(NetConfig{});
  std::vector<ImageTensor> xs = {RandomTensor(3, 16, 16, 4), RandomTensor(3, 16, 16, 5, 3.0),
                                 RandomTensor(3, 16, 16, 6)};
  std::vector<LogitsMap> batched = net.Forward(std::span<const ImageTensor>(xs));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    LogitsMap single = net.Forward(xs[i]);
    for (std::size_t j = 0; j < single.size(); ++j) {
      EXPECT_NEAR(batched[i].data()[j], single.data()[j], 1e-5);
    }
  }
}

TEST(SegNetTest, RandomInputsGiveBoundedFiniteLogits) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    NetConfig c;
    c.seed = seed;
    c.in_channels = seed % 2 == 0 ? 3 : 4;
    SegNet<float> net(c);
    LogitsMap out = net.Forward(RandomTensor(c.in_channels, 64, 64, seed + 1000, 2.0));
    ASSERT_TRUE(out.all_finite()) << seed;
    for (double v : out.data()) ASSERT_LT(std::abs(v), 1e4) << seed;
  }
}

TEST(SegNetTest, RejectsBadConfigAndInput) {
  EXPECT_EQ(CodeOf([] { SegNet<float>(NetConfig{5}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { SegNet<float>(NetConfig{3, 5, 2}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { SegNet<float>(NetConfig{3, 5, 32, 0}); }), ErrorCode::kInvalidArgument);
  SegNet<float> net(NetConfig{});
  EXPECT_EQ(CodeOf([&] { net.Forward(RandomTensor(4, 16, 16, 1)); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(CodeOf([&] { net.Forward(RandomTensor(3, 18, 16, 1)); }), ErrorCode::kShapeMismatch);
}

// Gradient of sum(coef * logits) with respect to the input and parameters.
struct Probe {
  SegNet<double> net;
  ImageTensor x;
  Batch<double> coef;

  double Value(const ImageTensor& input) const {
    Batch<double> out = net.Forward(ToBatch<double>(std::span<const Tensor>(&input, 1)));
    double v = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) v += coef.data[i] * out.data[i];
    return v;
  }
};

Probe MakeProbe(int in_c, int size, std::uint64_t seed) {
  NetConfig c{in_c, 3, 8, 2};
  c.seed = seed;
  Probe p{SegNet<double>(c), RandomTensor(in_c, size, size, seed + 1), {}};
  // Non-zero biases and norm parameters so every term is exercised.
  auto params = p.net.parameters();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  for (const ParamInfo& info : p.net.param_info()) {
    if (info.name.find("weight") != std::string::npos) continue;
    for (std::size_t i = 0; i < info.size; ++i) params[info.offset + i] += g(rng);
  }
  p.coef = ToBatch<double>(std::vector<Tensor>{RandomTensor(3, size, size, seed + 2)});
  return p;
}

TEST(SegNetGradientTest, InputGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Probe p = MakeProbe(3, 8, seed);
    SegNet<double>::Cache cache;
    p.net.Forward(ToBatch<double>(std::span<const Tensor>(&p.x, 1)), &cache);
    std::vector<double> grad_params(p.net.num_parameters(), 0.0);
    Batch<double> grad_in;
    p.net.Backward(cache, p.coef, grad_params, &grad_in);

    std::vector<double> numeric(p.x.size());
    const double step = 1e-6;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      ImageTensor up = p.x, down = p.x;
      up.data()[i] += step;
      down.data()[i] -= step;
      numeric[i] = (p.Value(up) - p.Value(down)) / (2 * step);
    }
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      err += std::pow(grad_in.data[i] - numeric[i], 2);
      norm += numeric[i] * numeric[i];
    }
    EXPECT_LT(std::sqrt(err / norm), 1e-3) << seed;
  }
}

TEST(SegNetGradientTest, ParameterGradientMatchesFiniteDifferences) {
  Probe p = MakeProbe(4, 8, 7);
  SegNet<double>::Cache cache;
  p.net.Forward(ToBatch<double>(std::span<const Tensor>(&p.x, 1)), &cache);
  std::vector<double> grad(p.net.num_parameters(), 0.0);
  p.net.Backward(cache, p.coef, grad);
  // A few entries of every parameter tensor.
  const double step = 1e-6;
  for (const ParamInfo& info : p.net.param_info()) {
    for (std::size_t k = 0; k < std::min<std::size_t>(info.size, 5); ++k) {
      const std::size_t i = info.offset + (k * 7919) % info.size;
      double& w = p.net.parameters()[i];
      const double orig = w;
      w = orig + step;
      const double up = p.Value(p.x);
      w = orig - step;
      const double down = p.Value(p.x);
      w = orig;
      const double numeric = (up - down) / (2 * step);
      EXPECT_NEAR(grad[i], numeric, 1e-3 * std::max(1.0, std::abs(numeric))) << info.name;
    }
  }
}

TEST(SegNetGradientTest, ReceptiveFieldCoversNineByNine) {
  NetConfig c{3, 3, 8, 2};
  SegNet<double> net(c);
  ImageTensor x = RandomTensor(3, 32, 32, 4);
  SegNet<double>::Cache cache;
  Batch<double> out = net.Forward(ToBatch<double>(std::span<const Tensor>(&x, 1)), &cache);
  Batch<double> g(1, 3, 32, 32);
  for (int k = 0; k < 3; ++k) g.data[(k * 32 + 16) * 32 + 16] = 1.0;
  std::vector<double> grad_params(net.num_parameters(), 0.0);
  Batch<double> grad_in;
  net.Backward(cache, g, grad_params, &grad_in);
  for (int dy : {-4, 4}) {
    for (int dx : {-4, 4}) {
      double mag = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        mag += std::abs(grad_in.data[(ch * 32 + 16 + dy) * 32 + 16 + dx]);
      }
      EXPECT_GT(mag, 0.0) << dy << "," << dx;
    }
  }
}

TEST(SegNetGradientTest, TrainingBackwardIsSumOverSamples) {
  Probe p = MakeProbe(3, 8, 11);
  std::vector<Tensor> xs = {p.x, RandomTensor(3, 8, 8, 99)};
  SegNet<double>::Cache both, one, two;
  p.net.Forward(ToBatch<double>(std::span<const Tensor>(xs)), &both);
  p.net.Forward(ToBatch<double>(std::span<const Tensor>(&xs[0], 1)), &one);
  p.net.Forward(ToBatch<double>(std::span<const Tensor>(&xs[1], 1)), &two);
  Batch<double> g2(2, 3, 8, 8);
  std::copy(p.coef.data.begin(), p.coef.data.end(), g2.data.begin());
  std::copy(p.coef.data.begin(), p.coef.data.end(), g2.data.begin() + p.coef.data.size());
  std::vector<double> gb(p.net.num_parameters(), 0.0), gs(p.net.num_parameters(), 0.0);
  p.net.Backward(both, g2, gb);
  p.net.Backward(one, p.coef, gs);
  p.net.Backward(two, p.coef, gs);
  for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_NEAR(gb[i], gs[i], 1e-10);
}

}  // namespace
}  // namespace lad
