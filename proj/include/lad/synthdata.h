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

// Synthetic shape-segmentation data. Each class above background owns one
// shape kind (rectangle, disc, triangle, annulus, cycling for larger C) and a
// base color. The last two classes are "confusable": their per-instance
// colors are drawn from overlapping ranges, so color alone cannot separate
// them and RGB-only segmentation keeps some headroom.

#ifndef LAD_SYNTHDATA_H_
#define LAD_SYNTHDATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lad/png_io.h"
#include "lad/tensor.h"

namespace lad {

struct DatasetSpec {
  int num_classes = 5;
  int num_train = 400;
  int num_val = 100;
  int image_size = 64;
  double color_noise_sigma = 0.25;
  double class_color_overlap = 0.5;
  int ignore_border = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

void ValidateDatasetSpec(const DatasetSpec& spec);

enum class ShapeKind { kRectangle, kDisc, kTriangle, kAnnulus };

using Rgb = std::array<double, 3>;

// Shape kind drawn for class c >= 1.
ShapeKind ShapeForClass(int class_id);
// Mean color of each class's instances, background first.
std::vector<Rgb> ClassBaseColors(const DatasetSpec& spec);

// Generator output before normalization.
struct RawSample {
  Image8 rgb;
  LabelMap label;
};

struct Sample {
  ImageTensor image;  // 3 x S x S, (v / 255 - 0.5) / 0.25
  LabelMap label;
};

// Deterministic in (spec.seed, index).
RawSample GenerateSample(const DatasetSpec& spec, int index);

ImageTensor NormalizeImage(const Image8& rgb);

struct DatasetManifest {
  DatasetSpec spec;
  // Seed actually used; differs from spec.seed when the class-coverage
  // check forced a regeneration.
  std::uint64_t effective_seed = 0;
  int format_version = 1;
};

// Writes images/%05d.png, labels/%05d.png and manifest.json. Samples
// [0, num_train) form the train split, the rest the validation split. If a
// class covers < 1% of the non-IGNORE train pixels the whole set is
// regenerated with seed + 1 (up to 16 attempts).
DatasetManifest GenerateDataset(const DatasetSpec& spec,
                                const std::filesystem::path& out_dir);

struct Dataset {
  DatasetManifest manifest;
  std::vector<Sample> train;
  std::vector<Sample> val;

  int num_classes() const { return manifest.spec.num_classes; }
};

// Throws kIo naming the offending file for missing or corrupt content.
Dataset LoadDataset(const std::filesystem::path& dir);

// Seeded permutation of [0, n).
std::vector<int> ShuffledOrder(int n, std::uint64_t seed);

}  // namespace lad

#endif  // LAD_SYNTHDATA_H_
