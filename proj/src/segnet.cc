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

#include <algorithm>
#include <cmath>
#include <random>

#include "lad/error.h"
#include "lad/layers.h"
#include "lad/parallel.h"
#include "lad/rng.h"

namespace lad {
namespace {

constexpr std::size_t kNoNorm = static_cast<std::size_t>(-1);

}  // namespace

void ValidateNetConfig(const NetConfig& config) {
  Require(config.in_channels == 3 || config.in_channels == 4,
          ErrorCode::kInvalidArgument, "in_channels must be 3 or 4");
  Require(config.num_classes >= 1, ErrorCode::kInvalidArgument,
          "num_classes must be >= 1");
  Require(config.base_width >= 4, ErrorCode::kInvalidArgument,
          "base_width must be >= 4");
  Require(config.depth >= 1, ErrorCode::kInvalidArgument, "depth must be >= 1");
  Require(config.norm_groups >= 1 &&
              config.base_width % config.norm_groups == 0,
          ErrorCode::kInvalidArgument,
          "norm_groups must divide base_width");
}

template <typename T>
Batch<T> ToBatch(std::span<const Tensor> tensors) {
  Require(!tensors.empty(), ErrorCode::kInvalidArgument, "empty batch");
  const Tensor& first = tensors.front();
  Batch<T> batch(static_cast<int>(tensors.size()), first.channels(),
                 first.height(), first.width());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Require(tensors[i].same_shape(first), ErrorCode::kShapeMismatch,
            "batch tensors differ in shape");
    auto src = tensors[i].data();
    std::transform(src.begin(), src.end(), batch.sample(i).begin(),
                   [](double v) { return static_cast<T>(v); });
  }
  return batch;
}

template <typename T>
Tensor FromBatch(const Batch<T>& batch, int index) {
  Tensor out(batch.c, batch.h, batch.w);
  auto src = batch.sample(index);
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

template <typename T>
SegNet<T>::SegNet(const NetConfig& config) : config_(config) {
  ValidateNetConfig(config);
  const int width = config.base_width;
  for (int i = 0; i < config.depth; ++i) {
    encoder_.push_back(AddBlock("enc" + std::to_string(i),
                                i == 0 ? config.in_channels : width, width, 3,
                                true));
  }
  middle_ = AddBlock("mid", width, width, 3, true);
  for (int i = 1; i < config.depth; ++i) {
    decoder_.push_back(
        AddBlock("dec" + std::to_string(i), 2 * width, width, 3, true));
  }
  head_ = AddBlock("head", 2 * width, config.num_classes, 1, false);

  // Draw in double so float and double nets from one seed agree.
  std::vector<const Block*> blocks;
  for (const Block& b : encoder_) blocks.push_back(&b);
  blocks.push_back(&middle_);
  for (const Block& b : decoder_) blocks.push_back(&b);
  blocks.push_back(&head_);
  Rng rng = MakeRng(config.seed, "init");
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const Block* b : blocks) {
    const double stddev = std::sqrt(2.0 / (b->in_c * b->kernel * b->kernel));
    const std::size_t count =
        static_cast<std::size_t>(b->out_c) * b->in_c * b->kernel * b->kernel;
    for (std::size_t i = 0; i < count; ++i) {
      params_[b->weight + i] = static_cast<T>(stddev * gauss(rng));
    }
    if (b->gamma != kNoNorm) {
      std::fill_n(params_.begin() + b->gamma, b->out_c, T(1));
    }
  }
}

template <typename T>
typename SegNet<T>::Block SegNet<T>::AddBlock(const std::string& name,
                                              int in_c, int out_c, int kernel,
                                              bool norm) {
  auto add = [&](const std::string& suffix, std::size_t size) {
    ParamInfo p{name + suffix, params_.size(), size};
    params_.resize(params_.size() + size, T(0));
    info_.push_back(p);
    return p.offset;
  };
  Block b;
  b.in_c = in_c;
  b.out_c = out_c;
  b.kernel = kernel;
  b.weight = add(".conv.weight",
                 static_cast<std::size_t>(out_c) * in_c * kernel * kernel);
  b.bias = add(".conv.bias", out_c);
  if (norm) {
    b.gamma = add(".norm.gamma", out_c);
    b.beta = add(".norm.beta", out_c);
  } else {
    b.gamma = b.beta = kNoNorm;
  }
  return b;
}

template <typename T>
std::span<T> SegNet<T>::parameter(const std::string& name) {
  for (const ParamInfo& p : info_) {
    if (p.name == name) return parameters().subspan(p.offset, p.size);
  }
  Fail(ErrorCode::kInvalidArgument, "no parameter named " + name);
}

template <typename T>
void SegNet<T>::CheckInput(int n, int c, int h, int w) const {
  Require(n >= 1, ErrorCode::kInvalidArgument, "empty batch");
  Require(c == config_.in_channels, ErrorCode::kShapeMismatch,
          "network expects " + std::to_string(config_.in_channels) +
              " input channels, got " + std::to_string(c));
  const int stride = 1 << config_.depth;
  Require(h >= stride && w >= stride && h % stride == 0 && w % stride == 0,
          ErrorCode::kShapeMismatch,
          "input " + std::to_string(h) + "x" + std::to_string(w) +
              " is not divisible by " + std::to_string(stride));
}

template <typename T>
void SegNet<T>::ForwardBlock(const Block& block, std::vector<T> input, int h,
                             int w, BlockCache& cache) const {
  const std::span<const T> p = params_;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  cache.input = std::move(input);
  cache.h = h;
  cache.w = w;
  std::vector<T> conv(block.out_c * plane);
  layers::Conv2dForward<T>(cache.input, block.in_c, h, w,
                           p.subspan(block.weight,
                                     block.out_c * block.in_c * 9),
                           p.subspan(block.bias, block.out_c), block.out_c, 3,
                           conv);
  const int groups = config_.norm_groups;
  cache.xhat.resize(conv.size());
  cache.rstd.resize(groups);
  cache.output.resize(conv.size());
  layers::GroupNormForward<T>(conv, block.out_c, static_cast<int>(plane),
                              groups, p.subspan(block.gamma, block.out_c),
                              p.subspan(block.beta, block.out_c), cache.output,
                              cache.xhat, cache.rstd);
  layers::ReluInPlace<T>(cache.output);
}

template <typename T>
std::vector<T> SegNet<T>::BackwardBlock(const Block& block,
                                        const BlockCache& cache,
                                        std::vector<T> grad_out,
                                        std::span<T> grad_params,
                                        bool want_input_grad) const {
  const std::span<const T> p = params_;
  const int plane = cache.h * cache.w;
  layers::ReluBackwardInPlace<T>(cache.output, grad_out);
  std::vector<T> grad_conv(grad_out.size());
  layers::GroupNormBackward<T>(
      grad_out, block.out_c, plane, config_.norm_groups,
      p.subspan(block.gamma, block.out_c), cache.xhat, cache.rstd,
      grad_params.subspan(block.gamma, block.out_c),
      grad_params.subspan(block.beta, block.out_c), grad_conv);
  std::vector<T> grad_in;
  if (want_input_grad) grad_in.resize(cache.input.size());
  const std::size_t wsize = static_cast<std::size_t>(block.out_c) * block.in_c * 9;
  layers::Conv2dBackward<T>(cache.input, block.in_c, cache.h, cache.w,
                            p.subspan(block.weight, wsize), block.out_c, 3,
                            grad_conv, grad_params.subspan(block.weight, wsize),
                            grad_params.subspan(block.bias, block.out_c),
                            grad_in);
  return grad_in;
}

namespace {

template <typename T>
std::vector<T> Concat(std::span<const T> a, std::span<const T> b) {
  std::vector<T> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

template <typename T>
void SegNet<T>::ForwardSample(std::span<const T> input, int h, int w,
                              std::span<T> out, SampleCache* cache) const {
  const int depth = config_.depth;
  const int width = config_.base_width;
  SampleCache local;
  SampleCache& c = cache ? *cache : local;
  c.encoder.resize(depth);
  c.pool_argmax.resize(depth);
  c.decoder.resize(decoder_.size());

  std::vector<T> x(input.begin(), input.end());
  int lh = h, lw = w;
  for (int i = 0; i < depth; ++i) {
    ForwardBlock(encoder_[i], std::move(x), lh, lw, c.encoder[i]);
    const std::size_t pooled = static_cast<std::size_t>(width) * (lh / 2) * (lw / 2);
    x.assign(pooled, T(0));
    c.pool_argmax[i].resize(pooled);
    layers::MaxPool2Forward<T>(c.encoder[i].output, width, lh, lw, x,
                               c.pool_argmax[i]);
    lh /= 2;
    lw /= 2;
  }
  ForwardBlock(middle_, std::move(x), lh, lw, c.middle);
  const std::vector<T>* current = &c.middle.output;
  for (int level = depth - 1; level >= 0; --level) {
    const BlockCache& skip = c.encoder[level];
    std::vector<T> up(static_cast<std::size_t>(width) * skip.h * skip.w);
    layers::Upsample2Forward<T>(*current, width, lh, lw, up);
    lh = skip.h;
    lw = skip.w;
    std::vector<T> cat = Concat<T>(up, skip.output);
    if (level == 0) {
      c.head_input = std::move(cat);
      break;
    }
    ForwardBlock(decoder_[level - 1], std::move(cat), lh, lw,
                 c.decoder[level - 1]);
    current = &c.decoder[level - 1].output;
  }
  const std::span<const T> p = params_;
  layers::Conv2dForward<T>(
      c.head_input, head_.in_c, h, w,
      p.subspan(head_.weight, static_cast<std::size_t>(head_.out_c) * head_.in_c),
      p.subspan(head_.bias, head_.out_c), head_.out_c, 1, out);
}

template <typename T>
void SegNet<T>::BackwardSample(const SampleCache& c,
                               std::span<const T> grad_logits,
                               std::span<T> grad_params,
                               std::span<T> grad_input) const {
  const int depth = config_.depth;
  const int width = config_.base_width;
  const int h = c.encoder[0].h, w = c.encoder[0].w;
  const std::size_t head_w = static_cast<std::size_t>(head_.out_c) * head_.in_c;
  std::vector<T> grad_cat(c.head_input.size());
  layers::Conv2dBackward<T>(c.head_input, head_.in_c, h, w,
                            std::span<const T>(params_).subspan(head_.weight, head_w),
                            head_.out_c, 1, grad_logits,
                            grad_params.subspan(head_.weight, head_w),
                            grad_params.subspan(head_.bias, head_.out_c),
                            grad_cat);

  // Gradients reaching each encoder output through its skip connection.
  std::vector<std::vector<T>> grad_skip(depth);
  std::vector<T> grad_current;
  for (int level = 0; level < depth; ++level) {
    const BlockCache& skip = c.encoder[level];
    const std::size_t half = static_cast<std::size_t>(width) * skip.h * skip.w;
    grad_skip[level].assign(grad_cat.begin() + half, grad_cat.end());
    std::vector<T> grad_up(grad_cat.begin(), grad_cat.begin() + half);
    const int below_h = skip.h / 2, below_w = skip.w / 2;
    grad_current.assign(static_cast<std::size_t>(width) * below_h * below_w, T(0));
    layers::Upsample2Backward<T>(grad_up, width, below_h, below_w, grad_current);
    if (level + 1 < depth) {
      grad_cat = BackwardBlock(decoder_[level], c.decoder[level],
                               std::move(grad_current), grad_params, true);
    }
  }
  std::vector<T> grad_x =
      BackwardBlock(middle_, c.middle, std::move(grad_current), grad_params, true);
  for (int level = depth - 1; level >= 0; --level) {
    std::vector<T>& g = grad_skip[level];
    std::vector<T> pooled_grad(g.size());
    layers::MaxPool2Backward<T>(grad_x, c.pool_argmax[level], pooled_grad);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += pooled_grad[i];
    const bool need_input = level > 0 || !grad_input.empty();
    grad_x = BackwardBlock(encoder_[level], c.encoder[level], std::move(g),
                           grad_params, need_input);
  }
  if (!grad_input.empty()) std::copy(grad_x.begin(), grad_x.end(), grad_input.begin());
}

template <typename T>
Batch<T> SegNet<T>::Forward(const Batch<T>& input, Cache* cache) const {
  CheckInput(input.n, input.c, input.h, input.w);
  Batch<T> out(input.n, config_.num_classes, input.h, input.w);
  if (cache) {
    cache->samples.assign(input.n, SampleCache{});
    cache->h = input.h;
    cache->w = input.w;
  }
  ParallelFor(input.n, [&](std::size_t i) {
    ForwardSample(input.sample(i), input.h, input.w, out.sample(i),
                  cache ? &cache->samples[i] : nullptr);
  });
  return out;
}

template <typename T>
void SegNet<T>::Backward(const Cache& cache, const Batch<T>& grad_logits,
                         std::span<T> grad_params, Batch<T>* grad_input) const {
  const int n = static_cast<int>(cache.samples.size());
  Require(grad_logits.n == n && grad_logits.c == config_.num_classes &&
              grad_logits.h == cache.h && grad_logits.w == cache.w,
          ErrorCode::kShapeMismatch, "logit gradient does not match the cache");
  Require(grad_params.size() == params_.size(), ErrorCode::kShapeMismatch,
          "gradient buffer has the wrong size");
  if (grad_input) *grad_input = Batch<T>(n, config_.in_channels, cache.h, cache.w);
  // Per-sample buffers summed in index order keep results independent of
  // the thread count.
  std::vector<std::vector<T>> per_sample(n, std::vector<T>(params_.size(), T(0)));
  ParallelFor(n, [&](std::size_t i) {
    BackwardSample(cache.samples[i], grad_logits.sample(i), per_sample[i],
                   grad_input ? grad_input->sample(i) : std::span<T>());
  });
  for (const auto& g : per_sample) {
    for (std::size_t k = 0; k < g.size(); ++k) grad_params[k] += g[k];
  }
}

template <typename T>
LogitsMap SegNet<T>::Forward(const ImageTensor& input) const {
  return FromBatch(Forward(ToBatch<T>(std::span<const Tensor>(&input, 1))), 0);
}

template <typename T>
std::vector<LogitsMap> SegNet<T>::Forward(
    std::span<const ImageTensor> inputs) const {
  Batch<T> out = Forward(ToBatch<T>(inputs));
  std::vector<LogitsMap> maps;
  maps.reserve(out.n);
  for (int i = 0; i < out.n; ++i) maps.push_back(FromBatch(out, i));
  return maps;
}

template class SegNet<float>;
template class SegNet<double>;
template Batch<float> ToBatch<float>(std::span<const Tensor>);
template Batch<double> ToBatch<double>(std::span<const Tensor>);
template Tensor FromBatch<float>(const Batch<float>&, int);
template Tensor FromBatch<double>(const Batch<double>&, int);

}  // namespace lad
