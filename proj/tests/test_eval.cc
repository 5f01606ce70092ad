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

#include "lad/eval.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lad/rng.h"
#include "test_util.h"

namespace lad {
namespace {

using testing::CodeOf;
using testing::MakeLabel;
using testing::RandomLabel;
using testing::RandomTensor;

TEST(MiouTest, PerfectPrediction) {
  LabelMap y = RandomLabel(8, 8, 4, 1);
  ConfusionMatrix conf(4);
  conf.Add(y, y);
  EXPECT_EQ(Miou(conf).miou, 1.0);
}

TEST(MiouTest, TwoPixelHandCase) {
  ConfusionMatrix conf(2);
  conf.Add(MakeLabel(1, 2, 2, {0, 1}), MakeLabel(1, 2, 2, {0, 0}));
  MiouResult r = Miou(conf);
  ASSERT_TRUE(r.per_class[0] && r.per_class[1]);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.0);
  EXPECT_DOUBLE_EQ(r.miou, 0.25);
}

TEST(MiouTest, AbsentClassesExcluded) {
  ConfusionMatrix conf(4);
  conf.Add(MakeLabel(1, 2, 4, {0, 1}), MakeLabel(1, 2, 4, {0, 1}));
  MiouResult r = Miou(conf);
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_FALSE(r.per_class[3].has_value());
  EXPECT_EQ(r.miou, 1.0);
}

TEST(MiouTest, IgnoreRegionContributesNothing) {
  ConfusionMatrix conf(3);
  conf.Add(LabelMap(4, 4, 3), RandomLabel(4, 4, 3, 2));
  EXPECT_EQ(conf.total(), 0u);
  EXPECT_EQ(conf, ConfusionMatrix(3));
  EXPECT_EQ(CodeOf([&] { Miou(conf); }), ErrorCode::kInvalidArgument);
}

TEST(MiouTest, ConfusionIsAdditive) {
  LabelMap ya = RandomLabel(6, 6, 4, 1, 0.2), pa = RandomLabel(6, 6, 4, 2);
  LabelMap yb = RandomLabel(6, 6, 4, 3, 0.2), pb = RandomLabel(6, 6, 4, 4);
  ConfusionMatrix a(4), b(4), both(4);
  a.Add(ya, pa);
  b.Add(yb, pb);
  both.Add(ya, pa);
  both.Add(yb, pb);
  a += b;
  EXPECT_EQ(a, both);
  EXPECT_EQ(both.total(), ya.count_valid() + yb.count_valid());
}

TEST(MiouTest, PositiveLogitScalingLeavesResultUnchanged) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LogitsMap x = RandomTensor(4, 8, 8, seed);
    LogitsMap scaled = x;
    for (double& v : scaled.data()) v *= 3.7;
    EXPECT_EQ(Predict(x), Predict(scaled));
    LabelMap y = RandomLabel(8, 8, 4, seed + 10, 0.1);
    ConfusionMatrix c1(4), c2(4);
    c1.Add(y, Predict(x));
    c2.Add(y, Predict(scaled));
    EXPECT_EQ(c1, c2);
    EXPECT_EQ(Miou(c1).miou, Miou(c2).miou);
  }
}

// Pairwise per-pixel KL, written without log-softmax tricks.
double OracleKlMean(const std::vector<LogitsMap>& outs) {
  const std::size_t m = outs.size();
  const int C = outs[0].channels(), H = outs[0].height(), W = outs[0].width();
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      double kl = 0.0;
      for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
          double zk = 0.0, zj = 0.0;
          for (int c = 0; c < C; ++c) {
            zk += std::exp(outs[k].at(c, h, w));
            zj += std::exp(outs[j].at(c, h, w));
          }
          for (int c = 0; c < C; ++c) {
            const double p = std::exp(outs[k].at(c, h, w)) / zk;
            const double q = std::exp(outs[j].at(c, h, w)) / zj;
            kl += p * std::log(p / q);
          }
        }
      }
      total += kl / (H * W);
    }
  }
  return total / static_cast<double>(m * m);
}

TEST(KlMeanTest, MatchesDoubleLoopOracle) {
  for (int m = 2; m <= 5; ++m) {
    std::vector<LogitsMap> outs;
    for (int k = 0; k < m; ++k) outs.push_back(RandomTensor(3, 5, 4, 100 * m + k, 2.0));
    EXPECT_NEAR(KlMeanFromLogits(outs), OracleKlMean(outs), 1e-10);
    EXPECT_GE(KlMeanFromLogits(outs), 0.0);
  }
}

TEST(KlMeanTest, SingleSampleIsZero) {
  std::vector<LogitsMap> one = {RandomTensor(3, 4, 4, 1)};
  EXPECT_EQ(KlMeanFromLogits(one), 0.0);
  SegNet<float> teacher(NetConfig{4});
  Rng rng(1);
  EXPECT_EQ(KlMean(teacher, RandomTensor(3, 16, 16, 2), RandomLabel(16, 16, 5, 3), 1,
                   LabelNoiser{}, rng),
            0.0);
}

SegNet<float> TeacherWithInputWeights(bool keep_rgb, bool keep_label) {
  NetConfig c{4};
  c.seed = 5;
  SegNet<float> net(c);
  auto w = net.parameter("enc0.conv.weight");
  for (int o = 0; o < c.base_width; ++o) {
    for (int i = 0; i < 4; ++i) {
      const bool keep = i == 3 ? keep_label : keep_rgb;
      if (keep) continue;
      for (int k = 0; k < 9; ++k) w[(o * 4 + i) * 9 + k] = 0.0f;
    }
  }
  return net;
}

TEST(KlMeanTest, NoiseBlindTeacherIsExactlyStable) {
  SegNet<float> net = TeacherWithInputWeights(true, false);
  Rng rng(3);
  for (int m : {2, 3, 5}) {
    EXPECT_EQ(KlMean(net, RandomTensor(3, 16, 16, m), RandomLabel(16, 16, 5, m), m,
                     LabelNoiser{NoisingMode::kClassWise, 1.0}, rng),
              0.0);
  }
}

TEST(KlMeanTest, NoiseSensitiveTeacherIsPositive) {
  SegNet<float> net(NetConfig{4});
  Rng rng(3);
  EXPECT_GT(KlMean(net, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1), 3,
                   LabelNoiser{}, rng),
            0.0);
}

TEST(KlMeanTest, Errors) {
  SegNet<float> student(NetConfig{3});
  SegNet<float> teacher(NetConfig{4});
  Rng rng(0);
  EXPECT_EQ(CodeOf([&] {
              KlMean(student, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1), 3,
                     LabelNoiser{}, rng);
            }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(CodeOf([&] {
              KlMean(teacher, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1), 0,
                     LabelNoiser{}, rng);
            }),
            ErrorCode::kInvalidArgument);
}

TEST(SaliencyTest, LabelBlindTeacherScoresZero) {
  SegNet<float> net = TeacherWithInputWeights(true, false);
  Rng rng(1);
  EXPECT_EQ(SaliencyRatio(net, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1),
                          LabelNoiser{}, rng),
            0.0);
}

TEST(SaliencyTest, LabelOnlyTeacherHitsCap) {
  SegNet<float> net = TeacherWithInputWeights(false, true);
  Rng rng(1);
  EXPECT_EQ(SaliencyRatio(net, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1),
                          LabelNoiser{}, rng),
            kSaliencyCap);
}

TEST(SaliencyTest, StudentRejected) {
  SegNet<float> student(NetConfig{3});
  Rng rng(0);
  EXPECT_EQ(CodeOf([&] {
              SaliencyRatio(student, RandomTensor(3, 16, 16, 1), RandomLabel(16, 16, 5, 1),
                            LabelNoiser{}, rng);
            }),
            ErrorCode::kShapeMismatch);
}

TEST(EvaluateTest, DatasetLevelReportsAreSeeded) {
  std::vector<Sample> samples;
  for (int i = 0; i < 3; ++i) {
    samples.push_back({RandomTensor(3, 16, 16, i), RandomLabel(16, 16, 5, i, 0.1)});
  }
  SegNet<float> teacher(NetConfig{4});
  StabilityReport s1 = EvaluateStability(teacher, samples, 3, LabelNoiser{}, 4);
  StabilityReport s2 = EvaluateStability(teacher, samples, 3, LabelNoiser{}, 4);
  EXPECT_EQ(s1.per_image, s2.per_image);
  EXPECT_EQ(s1.m, 3);
  EXPECT_DOUBLE_EQ(s1.kl_mean_x100(), 100.0 * s1.kl_mean);
  EXPECT_DOUBLE_EQ(s1.kl_mean, (s1.per_image[0] + s1.per_image[1] + s1.per_image[2]) / 3);
  ShortcutReport r1 = EvaluateShortcut(teacher, samples, LabelNoiser{}, 4);
  EXPECT_EQ(r1.per_image, EvaluateShortcut(teacher, samples, LabelNoiser{}, 4).per_image);
  EXPECT_EQ(EvaluateMiou(teacher, samples, LabelNoiser{}, 1).miou,
            EvaluateMiou(teacher, samples, LabelNoiser{}, 1).miou);
  SegNet<float> wrong(NetConfig{3, 4});
  EXPECT_EQ(CodeOf([&] { EvaluateMiou(wrong, samples, LabelNoiser{}, 1); }),
            ErrorCode::kShapeMismatch);
}

}  // namespace
}  // namespace lad
