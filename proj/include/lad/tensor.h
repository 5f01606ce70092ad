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

#ifndef LAD_TENSOR_H_
#define LAD_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lad {

// Dense channel-first C x H x W array of doubles. Images, one-hot encodings,
// noised label channels and logits all use this layout.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * width_;
  }

  double& at(int c, int h, int w) { return data_[index(c, h, w)]; }
  double at(int c, int h, int w) const { return data_[index(c, h, w)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> channel(int c);
  std::span<const double> channel(int c) const;

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * height_ + h) * width_ + w;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Normalized RGB (3 channels) or RGB + noised label (4 channels).
using ImageTensor = Tensor;
// Pre-softmax network output, one channel per class.
using LogitsMap = Tensor;
// Binary C x H x W encoding of a LabelMap.
using OneHotTensor = Tensor;
// Single-channel real-valued map produced by the label noising module.
using NoisedLabelMap = Tensor;

// Per-pixel class indices in [0, num_classes) or kIgnore.
class LabelMap {
 public:
  static constexpr std::uint8_t kIgnore = 255;

  LabelMap() = default;
  // Filled with `fill`, which must itself be a valid entry.
  LabelMap(int height, int width, int num_classes,
           std::uint8_t fill = kIgnore);
  LabelMap(int height, int width, int num_classes,
           std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int h, int w) const {
    return data_[static_cast<std::size_t>(h) * width_ + w];
  }
  // Throws kInvalidLabel for a value that is neither a class nor kIgnore.
  void set(int h, int w, std::uint8_t value);

  std::span<const std::uint8_t> data() const { return data_; }
  bool is_ignore(std::size_t i) const { return data_[i] == kIgnore; }
  std::size_t count_valid() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  void validate() const;

  int height_ = 0;
  int width_ = 0;
  int num_classes_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace lad

#endif  // LAD_TENSOR_H_
