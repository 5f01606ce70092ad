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

#include "lad/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lad/error.h"

namespace lad {

Tensor::Tensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  Require(channels >= 0 && height >= 0 && width >= 0,
          ErrorCode::kInvalidArgument, "tensor dimensions must be >= 0");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::span<double> Tensor::channel(int c) {
  return std::span<double>(data_).subspan(c * plane_size(), plane_size());
}

std::span<const double> Tensor::channel(int c) const {
  return std::span<const double>(data_).subspan(c * plane_size(),
                                                plane_size());
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << channels_ << "x" << height_ << "x" << width_;
  return os.str();
}

LabelMap::LabelMap(int height, int width, int num_classes, std::uint8_t fill)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      data_(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0),
            fill) {
  validate();
}

LabelMap::LabelMap(int height, int width, int num_classes,
                   std::vector<std::uint8_t> data)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      data_(std::move(data)) {
  validate();
}

void LabelMap::set(int h, int w, std::uint8_t value) {
  Require(value == kIgnore || value < num_classes_, ErrorCode::kInvalidLabel,
          "label value " + std::to_string(value) + " outside [0, " +
              std::to_string(num_classes_) + ")");
  data_[static_cast<std::size_t>(h) * width_ + w] = value;
}

std::size_t LabelMap::count_valid() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(),
                    [](std::uint8_t v) { return v != kIgnore; }));
}

void LabelMap::validate() const {
  Require(height_ >= 1 && width_ >= 1, ErrorCode::kInvalidArgument,
          "label map must be at least 1x1");
  Require(num_classes_ >= 1 && num_classes_ < kIgnore,
          ErrorCode::kInvalidArgument, "num_classes must be in [1, 254]");
  Require(data_.size() == static_cast<std::size_t>(height_) * width_,
          ErrorCode::kShapeMismatch, "label data size does not match HxW");
  for (std::uint8_t v : data_) {
    Require(v == kIgnore || v < num_classes_, ErrorCode::kInvalidLabel,
            "label value " + std::to_string(v) + " outside [0, " +
                std::to_string(num_classes_) + ")");
  }
}

}  // namespace lad
