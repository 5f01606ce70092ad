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

// Per-sample building blocks of the segmentation network. Every function
// works on one C x H x W activation stored channel-first in a flat span.
// Backward functions accumulate (+=) into parameter gradients and write
// (=) input gradients.

#ifndef LAD_LAYERS_H_
#define LAD_LAYERS_H_

#include <cstdint>
#include <span>
#include <vector>

namespace lad::layers {

// Same-padded convolution with an odd square kernel (1 or 3 in practice).
// weight is [out_c][in_c * k * k], bias is [out_c].
template <typename T>
void Conv2dForward(std::span<const T> in, int in_c, int h, int w,
                   std::span<const T> weight, std::span<const T> bias,
                   int out_c, int kernel, std::span<T> out);

// grad_in may be empty, in which case the input gradient is skipped.
template <typename T>
void Conv2dBackward(std::span<const T> in, int in_c, int h, int w,
                    std::span<const T> weight, int out_c, int kernel,
                    std::span<const T> grad_out, std::span<T> grad_weight,
                    std::span<T> grad_bias, std::span<T> grad_in);

// Per-sample group normalization with a per-channel affine transform.
// xhat (size of in) and rstd (one per group) are saved for backward.
template <typename T>
void GroupNormForward(std::span<const T> in, int channels, int plane,
                      int groups, std::span<const T> gamma,
                      std::span<const T> beta, std::span<T> out,
                      std::span<T> xhat, std::span<T> rstd);

template <typename T>
void GroupNormBackward(std::span<const T> grad_out, int channels, int plane,
                       int groups, std::span<const T> gamma,
                       std::span<const T> xhat, std::span<const T> rstd,
                       std::span<T> grad_gamma, std::span<T> grad_beta,
                       std::span<T> grad_in);

template <typename T>
void ReluInPlace(std::span<T> x);

// grad *= (out > 0)
template <typename T>
void ReluBackwardInPlace(std::span<const T> out, std::span<T> grad);

// 2x2 max pooling, stride 2. h and w must be even.
template <typename T>
void MaxPool2Forward(std::span<const T> in, int channels, int h, int w,
                     std::span<T> out, std::span<std::int32_t> argmax);

template <typename T>
void MaxPool2Backward(std::span<const T> grad_out,
                      std::span<const std::int32_t> argmax,
                      std::span<T> grad_in);

// Bilinear 2x upsampling with half-pixel centers (align_corners = false).
template <typename T>
void Upsample2Forward(std::span<const T> in, int channels, int h, int w,
                      std::span<T> out);

template <typename T>
void Upsample2Backward(std::span<const T> grad_out, int channels, int h, int w,
                       std::span<T> grad_in);

}  // namespace lad::layers

#endif  // LAD_LAYERS_H_
