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

#include "lad/lnm.h"

#include <algorithm>
#include <random>
#include <string>

#include "lad/error.h"

namespace lad {
namespace {

void CheckParams(const LabelMap& label, const NoiseParams& params,
                 bool need_weights) {
  Require(!need_weights ||
              static_cast<int>(params.class_weights.size()) ==
                  label.num_classes(),
          ErrorCode::kShapeMismatch,
          "noise params carry " +
              std::to_string(params.class_weights.size()) +
              " class weights for a label with " +
              std::to_string(label.num_classes()) + " classes");
  Require(params.height == label.height() && params.width == label.width() &&
              params.pixel_noise.size() == label.size(),
          ErrorCode::kShapeMismatch,
          "pixel noise shape does not match the label");
}

}  // namespace

OneHotTensor OneHot(const LabelMap& label) {
  OneHotTensor out(label.num_classes(), label.height(), label.width());
  auto labels = label.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == LabelMap::kIgnore) continue;
    out.channel(labels[i])[i] = 1.0;
  }
  return out;
}

NoiseParams SampleNoiseParams(int num_classes, int height, int width,
                              double alpha, Rng& rng) {
  Require(alpha >= 0.0, ErrorCode::kInvalidArgument, "alpha must be >= 0");
  Require(num_classes >= 1 && height >= 1 && width >= 1,
          ErrorCode::kInvalidArgument, "noise params need positive sizes");
  std::normal_distribution<double> gauss(0.0, 1.0);
  NoiseParams params;
  params.alpha = alpha;
  params.height = height;
  params.width = width;
  params.class_weights.resize(num_classes);
  for (double& w : params.class_weights) w = gauss(rng);
  params.pixel_noise.resize(static_cast<std::size_t>(height) * width);
  for (double& z : params.pixel_noise) z = gauss(rng);
  return params;
}

NoisedLabelMap ApplyLnm(const LabelMap& label, const NoiseParams& params) {
  CheckParams(label, params, /*need_weights=*/true);
  NoisedLabelMap out(1, label.height(), label.width());
  auto dst = out.data();
  auto labels = label.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double v = labels[i] == LabelMap::kIgnore
                   ? 0.0
                   : params.class_weights[labels[i]];
    dst[i] = v + params.alpha * params.pixel_noise[i];
  }
  return out;
}

NoisedLabelMap ApplyNormalizedIndex(const LabelMap& label,
                                    const NoiseParams& params) {
  CheckParams(label, params, /*need_weights=*/false);
  const double scale = 1.0 / std::max(1, label.num_classes() - 1);
  NoisedLabelMap out(1, label.height(), label.width());
  auto dst = out.data();
  auto labels = label.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double v = labels[i] == LabelMap::kIgnore ? 0.0 : labels[i] * scale;
    dst[i] = v + params.alpha * params.pixel_noise[i];
  }
  return out;
}

ImageTensor ConcatInput(const ImageTensor& image,
                        const NoisedLabelMap& noised) {
  Require(noised.channels() == 1, ErrorCode::kShapeMismatch,
          "noised label must have exactly one channel");
  Require(image.height() == noised.height() && image.width() == noised.width(),
          ErrorCode::kShapeMismatch,
          "image " + image.shape_string() + " and noised label " +
              noised.shape_string() + " differ spatially");
  ImageTensor out(image.channels() + 1, image.height(), image.width());
  std::copy(image.data().begin(), image.data().end(), out.data().begin());
  auto last = out.channel(image.channels());
  std::copy(noised.data().begin(), noised.data().end(), last.begin());
  return out;
}

NoisedLabelMap LabelNoiser::operator()(const LabelMap& label, Rng& rng) const {
  NoiseParams params = SampleNoiseParams(label.num_classes(), label.height(),
                                         label.width(), alpha, rng);
  return mode == NoisingMode::kClassWise ? ApplyLnm(label, params)
                                         : ApplyNormalizedIndex(label, params);
}

}  // namespace lad
