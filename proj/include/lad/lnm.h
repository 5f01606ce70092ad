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

// Label noising: turns a ground-truth label map into a real-valued input
// channel for the label-assisted teacher.
//
//   noised[h, w] = sum_c W[c] * onehot(Y)[c, h, w] + alpha * Z[h, w]
//
// W (one weight per class) scrambles class identity while keeping pixels of a
// class equal; Z (one value per pixel) breaks that equality. Both are drawn
// from a standard Gaussian for every call. IGNORE pixels have an all-zero
// one-hot row, so they receive only alpha * Z.

#ifndef LAD_LNM_H_
#define LAD_LNM_H_

#include <vector>

#include "lad/rng.h"
#include "lad/tensor.h"

namespace lad {

struct NoiseParams {
  std::vector<double> class_weights;  // W, one per class
  int height = 0;
  int width = 0;
  std::vector<double> pixel_noise;    // Z, row-major H x W
  double alpha = 0.0;
};

enum class NoisingMode {
  // Class-wise weights followed by pixel noise (the default teacher input).
  kClassWise,
  // Ablation: class index scaled to [0, 1], then pixel noise. With alpha = 0
  // this hands the clean label to the network.
  kNormalizedIndex,
};

OneHotTensor OneHot(const LabelMap& label);

// Throws kInvalidArgument for alpha < 0 or non-positive sizes.
NoiseParams SampleNoiseParams(int num_classes, int height, int width,
                              double alpha, Rng& rng);

// Class-wise + pixel-wise noising. Throws kShapeMismatch when params were
// sampled for a different class count or spatial size.
NoisedLabelMap ApplyLnm(const LabelMap& label, const NoiseParams& params);

// index / (C - 1) + alpha * Z; IGNORE pixels get alpha * Z. class_weights
// are not used.
NoisedLabelMap ApplyNormalizedIndex(const LabelMap& label,
                                    const NoiseParams& params);

// Appends the noised map to the image as the last channel.
ImageTensor ConcatInput(const ImageTensor& image, const NoisedLabelMap& noised);

// Draws fresh NoiseParams per call and applies the configured mode.
struct LabelNoiser {
  NoisingMode mode = NoisingMode::kClassWise;
  double alpha = 0.01;

  NoisedLabelMap operator()(const LabelMap& label, Rng& rng) const;
  ImageTensor Input(const ImageTensor& image, const LabelMap& label,
                    Rng& rng) const {
    return ConcatInput(image, (*this)(label, rng));
  }
};

}  // namespace lad

#endif  // LAD_LNM_H_
