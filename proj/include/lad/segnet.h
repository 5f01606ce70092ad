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

// Small encoder-decoder segmentation network with skip connections.
//
//   encoder  depth x [conv3x3 -> group norm -> ReLU -> maxpool 2x2]
//   middle   conv3x3 -> group norm -> ReLU
//   decoder  for each level above the bottom: bilinear 2x upsample, concat
//            with the encoder activation of that level, conv3x3 -> norm ->
//            ReLU; at full resolution the concat feeds a 1x1 head instead.
//
// Every conv has base_width output channels except the head (num_classes).
// The 3- and 4-channel variants differ only in the first conv.

#ifndef LAD_SEGNET_H_
#define LAD_SEGNET_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lad/tensor.h"

namespace lad {

struct NetConfig {
  int in_channels = 3;
  int num_classes = 5;
  int base_width = 32;
  int depth = 2;
  int norm_groups = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

// Throws kInvalidArgument unless in_channels in {3, 4}, base_width >= 4,
// depth >= 1, num_classes >= 1 and norm_groups divides base_width.
void ValidateNetConfig(const NetConfig& config);

// A batch of same-shaped activations, N x C x H x W.
template <typename T>
struct Batch {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Batch() = default;
  Batch(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t sample_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  std::span<T> sample(int i) {
    return std::span<T>(data).subspan(i * sample_size(), sample_size());
  }
  std::span<const T> sample(int i) const {
    return std::span<const T>(data).subspan(i * sample_size(), sample_size());
  }
};

// All tensors must share one shape.
template <typename T>
Batch<T> ToBatch(std::span<const Tensor> tensors);
template <typename T>
Tensor FromBatch(const Batch<T>& batch, int index);

struct ParamInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

namespace detail {

template <typename T>
struct BlockCache {
  std::vector<T> input;  // block input (conv input)
  std::vector<T> xhat;   // normalized conv output
  std::vector<T> rstd;   // per norm group
  std::vector<T> output; // after ReLU
  int h = 0, w = 0;
};

template <typename T>
struct SampleCache {
  std::vector<BlockCache<T>> encoder;
  std::vector<std::vector<std::int32_t>> pool_argmax;
  BlockCache<T> middle;
  std::vector<BlockCache<T>> decoder;
  std::vector<T> head_input;
};

}  // namespace detail

template <typename T>
class SegNet {
 public:
  // Activations saved by a training-mode forward pass.
  struct Cache {
    std::vector<detail::SampleCache<T>> samples;
    int h = 0, w = 0;
  };

  // Validates the config and initializes weights from config.seed
  // (He-normal convs, unit norm scale, zero biases).
  explicit SegNet(const NetConfig& config);

  const NetConfig& config() const { return config_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.size(); }
  const std::vector<ParamInfo>& param_info() const { return info_; }
  // Span of one named parameter tensor, e.g. "enc0.conv.weight".
  std::span<T> parameter(const std::string& name);

  // Spatial size must be divisible by 2^depth. If cache is non-null the
  // activations needed by Backward are stored there.
  Batch<T> Forward(const Batch<T>& input, Cache* cache = nullptr) const;

  // Accumulates parameter gradients into grad_params (num_parameters()
  // long). Writes the input gradient when grad_input is non-null.
  void Backward(const Cache& cache, const Batch<T>& grad_logits,
                std::span<T> grad_params, Batch<T>* grad_input = nullptr) const;

  // Single image in double precision.
  LogitsMap Forward(const ImageTensor& input) const;
  std::vector<LogitsMap> Forward(std::span<const ImageTensor> inputs) const;

  // Converts weights to another precision, keeping the config.
  template <typename U>
  SegNet<U> Cast() const {
    SegNet<U> out(config_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) {
      dst[i] = static_cast<U>(params_[i]);
    }
    return out;
  }

 private:
  struct Block {
    int in_c = 0, out_c = 0, kernel = 3;
    std::size_t weight = 0, bias = 0, gamma = 0, beta = 0;
  };
  using SampleCache = detail::SampleCache<T>;
  using BlockCache = detail::BlockCache<T>;

  void ForwardBlock(const Block& block, std::vector<T> input, int h, int w,
                    BlockCache& cache) const;
  // Returns the gradient w.r.t. the block input (empty if !want_input_grad).
  std::vector<T> BackwardBlock(const Block& block, const BlockCache& cache,
                               std::vector<T> grad_out,
                               std::span<T> grad_params,
                               bool want_input_grad) const;
  Block AddBlock(const std::string& name, int in_c, int out_c, int kernel,
                 bool norm);
  void CheckInput(int n, int c, int h, int w) const;
  void ForwardSample(std::span<const T> input, int h, int w, std::span<T> out,
                     SampleCache* cache) const;
  void BackwardSample(const SampleCache& cache, std::span<const T> grad_logits,
                      std::span<T> grad_params, std::span<T> grad_input) const;

  NetConfig config_;
  std::vector<T> params_;
  std::vector<ParamInfo> info_;
  std::vector<Block> encoder_;
  Block middle_;
  std::vector<Block> decoder_;  // decoder_[i] runs at encoder level i + 1
  Block head_;
};

extern template class SegNet<float>;
extern template class SegNet<double>;

}  // namespace lad

#endif  // LAD_SEGNET_H_
