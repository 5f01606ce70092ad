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

#include "lad/synthdata.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lad/eval.h"
#include "lad/png_io.h"
#include "test_util.h"

namespace lad {
namespace {

namespace fs = std::filesystem;
using testing::CodeOf;
using testing::TempDir;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

DatasetSpec SmallSpec(std::uint64_t seed) {
  DatasetSpec spec;
  spec.num_train = 40;
  spec.num_val = 8;
  spec.image_size = 32;
  spec.seed = seed;
  return spec;
}

// Per-pixel argmin distance to the class base colors.
LabelMap NearestColor(const RawSample& s, const std::vector<Rgb>& colors) {
  const int n = s.rgb.width * s.rgb.height;
  std::vector<std::uint8_t> pred(n);
  for (int p = 0; p < n; ++p) {
    double best = 1e300;
    for (std::size_t c = 0; c < colors.size(); ++c) {
      double d = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = s.rgb.pixels[p * 3 + ch] / 255.0 - colors[c][ch];
        d += v * v;
      }
      if (d < best) {
        best = d;
        pred[p] = static_cast<std::uint8_t>(c);
      }
    }
  }
  return LabelMap(s.rgb.height, s.rgb.width, static_cast<int>(colors.size()), pred);
}

TEST(SynthDataTest, SameSeedByteIdenticalFiles) {
  const fs::path a = TempDir("a"), b = TempDir("b");
  GenerateDataset(SmallSpec(7), a);
  GenerateDataset(SmallSpec(7), b);
  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(Slurp(entry.path()), Slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 2 * 48 + 1);
}

TEST(SynthDataTest, EveryClassCoversOnePercent) {
  DatasetSpec spec;
  std::vector<double> hist(spec.num_classes, 0.0);
  double valid = 0.0;
  for (int i = 0; i < spec.num_train; ++i) {
    RawSample s = GenerateSample(spec, i);
    for (auto v : s.label.data()) {
      if (v == LabelMap::kIgnore) continue;
      hist[v] += 1.0;
      valid += 1.0;
    }
  }
  for (int c = 0; c < spec.num_classes; ++c) EXPECT_GE(hist[c] / valid, 0.01) << c;
}

TEST(SynthDataTest, NoiselessSeparableColorsClassifiedOnInteriors) {
  DatasetSpec spec;
  spec.color_noise_sigma = 0.0;
  spec.class_color_overlap = 0.0;
  const auto colors = ClassBaseColors(spec);
  long correct = 0, total = 0;
  for (int i = 0; i < 100; ++i) {
    RawSample s = GenerateSample(spec, i);
    LabelMap pred = NearestColor(s, colors);
    const int n = spec.image_size;
    for (int y = 1; y < n - 1; ++y) {
      for (int x = 1; x < n - 1; ++x) {
        const auto c = s.label.at(y, x);
        if (c == LabelMap::kIgnore) continue;
        bool interior = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) interior &= s.label.at(y + dy, x + dx) == c;
        }
        if (!interior) continue;
        ++total;
        correct += pred.at(y, x) == c;
      }
    }
  }
  EXPECT_GT(static_cast<double>(correct) / total, 0.99);
}

TEST(SynthDataTest, NearestColorOracleLeavesHeadroom) {
  DatasetSpec spec;
  const auto colors = ClassBaseColors(spec);
  ConfusionMatrix conf(spec.num_classes);
  for (int i = spec.num_train; i < spec.num_train + spec.num_val; ++i) {
    RawSample s = GenerateSample(spec, i);
    conf.Add(s.label, NearestColor(s, colors));
  }
  const double miou = Miou(conf).miou;
  EXPECT_GT(miou, 0.45);
  EXPECT_LT(miou, 0.85);
}

TEST(SynthDataTest, IgnoreFractionBelowTwentyPercent) {
  DatasetSpec spec;
  double ignore = 0.0, total = 0.0;
  for (int i = 0; i < 100; ++i) {
    RawSample s = GenerateSample(spec, i);
    total += static_cast<double>(s.label.size());
    ignore += static_cast<double>(s.label.size() - s.label.count_valid());
  }
  EXPECT_LT(ignore / total, 0.2);
  EXPECT_GT(ignore, 0.0);
}

TEST(SynthDataTest, ShapesAndLabelsArePaired) {
  DatasetSpec spec;
  std::set<ShapeKind> kinds;
  for (int c = 1; c < spec.num_classes; ++c) kinds.insert(ShapeForClass(c));
  EXPECT_EQ(kinds.size(), 4u);
  RawSample s = GenerateSample(spec, 3);
  EXPECT_EQ(s.rgb.width, spec.image_size);
  EXPECT_EQ(s.label.height(), spec.image_size);
  EXPECT_EQ(s.label.num_classes(), spec.num_classes);
}

TEST(SynthDataTest, RoundTripIsLossless) {
  const fs::path dir = TempDir("ds");
  DatasetManifest m = GenerateDataset(SmallSpec(3), dir);
  Dataset d = LoadDataset(dir);
  ASSERT_EQ(d.train.size(), 40u);
  ASSERT_EQ(d.val.size(), 8u);
  EXPECT_EQ(d.manifest.spec, SmallSpec(3));
  EXPECT_EQ(d.num_classes(), 5);
  DatasetSpec effective = m.spec;
  effective.seed = m.effective_seed;
  for (int i = 0; i < 48; ++i) {
    RawSample s = GenerateSample(effective, i);
    const Sample& loaded = i < 40 ? d.train[i] : d.val[i - 40];
    EXPECT_EQ(loaded.label, s.label) << i;
    EXPECT_EQ(loaded.image, NormalizeImage(s.rgb)) << i;
  }
}

TEST(SynthDataTest, NormalizationConstants) {
  Image8 img{2, 1, 3, {0, 128, 255, 64, 64, 64}};
  ImageTensor t = NormalizeImage(img);
  EXPECT_DOUBLE_EQ(t.at(0, 0, 0), -2.0);
  EXPECT_DOUBLE_EQ(t.at(2, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(t.at(1, 0, 0), (128 / 255.0 - 0.5) / 0.25);
}

TEST(SynthDataTest, EmptyDirectoryIsAnError) {
  const fs::path dir = TempDir("empty");
  EXPECT_EQ(CodeOf([&] { LoadDataset(dir); }), ErrorCode::kIo);
}

TEST(SynthDataTest, MissingFileIsNamed) {
  const fs::path dir = TempDir("broken");
  GenerateDataset(SmallSpec(4), dir);
  fs::remove(dir / "labels" / "00005.png");
  try {
    LoadDataset(dir);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("00005.png"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "images" / "00002.png", std::ios::trunc) << "not a png";
  try {
    LoadDataset(dir);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("00002.png"), std::string::npos) << e.what();
  }
}

TEST(SynthDataTest, SeededShuffleIsStablePermutation) {
  std::vector<int> a = ShuffledOrder(50, 9), b = ShuffledOrder(50, 9);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, ShuffledOrder(50, 10));
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(SynthDataTest, InvalidSpecRejected) {
  DatasetSpec spec;
  spec.num_classes = 1;
  EXPECT_EQ(CodeOf([&] { ValidateDatasetSpec(spec); }), ErrorCode::kInvalidArgument);
  spec = DatasetSpec{};
  spec.image_size = 8;
  EXPECT_EQ(CodeOf([&] { ValidateDatasetSpec(spec); }), ErrorCode::kInvalidArgument);
  spec = DatasetSpec{};
  spec.color_noise_sigma = -1;
  EXPECT_EQ(CodeOf([&] { ValidateDatasetSpec(spec); }), ErrorCode::kInvalidArgument);
  spec = DatasetSpec{};
  spec.class_color_overlap = 1.5;
  EXPECT_EQ(CodeOf([&] { ValidateDatasetSpec(spec); }), ErrorCode::kInvalidArgument);
}

TEST(PngTest, RoundTrip) {
  const fs::path dir = TempDir("png");
  Image8 gray{3, 2, 1, {0, 1, 2, 253, 254, 255}};
  Image8 rgb{1, 2, 3, {10, 20, 30, 40, 50, 60}};
  WritePng(dir / "g.png", gray);
  WritePng(dir / "c.png", rgb);
  EXPECT_EQ(ReadPng(dir / "g.png"), gray);
  EXPECT_EQ(ReadPng(dir / "c.png"), rgb);
  EXPECT_EQ(CodeOf([&] { ReadPng(dir / "nope.png"); }), ErrorCode::kIo);
}

}  // namespace
}  // namespace lad
