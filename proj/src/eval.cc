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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lad/error.h"
#include "lad/parallel.h"

namespace lad {
namespace {

constexpr int kEvalChunk = 16;

void RequireLabelChannel(const SegNet<float>& net) {
  Require(net.config().in_channels == 4, ErrorCode::kShapeMismatch,
          "model has no label channel (in_channels = " +
              std::to_string(net.config().in_channels) + ")");
}

// Channel-axis log-softmax of every pixel.
Tensor LogSoftmaxChannels(const LogitsMap& logits) {
  Tensor out(logits.channels(), logits.height(), logits.width());
  const std::size_t plane = logits.plane_size();
  const int classes = logits.channels();
  auto src = logits.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < plane; ++i) {
    double peak = -INFINITY;
    for (int c = 0; c < classes; ++c) peak = std::max(peak, src[c * plane + i]);
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += std::exp(src[c * plane + i] - peak);
    const double log_norm = peak + std::log(sum);
    for (int c = 0; c < classes; ++c) dst[c * plane + i] = src[c * plane + i] - log_norm;
  }
  return out;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes),
      counts_(static_cast<std::size_t>(std::max(num_classes, 0)) *
                  std::max(num_classes, 0),
              0) {
  Require(num_classes >= 1, ErrorCode::kInvalidArgument,
          "confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::Add(const LabelMap& truth, const LabelMap& prediction) {
  Require(truth.height() == prediction.height() &&
              truth.width() == prediction.width(),
          ErrorCode::kShapeMismatch, "truth and prediction sizes differ");
  Require(truth.num_classes() == num_classes_ &&
              prediction.num_classes() == num_classes_,
          ErrorCode::kShapeMismatch, "class count differs from the matrix");
  auto t = truth.data();
  auto p = prediction.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == LabelMap::kIgnore) continue;
    Require(p[i] != LabelMap::kIgnore, ErrorCode::kInvalidLabel,
            "prediction contains IGNORE");
    ++counts_[static_cast<std::size_t>(t[i]) * num_classes_ + p[i]];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  Require(other.num_classes_ == num_classes_, ErrorCode::kShapeMismatch,
          "cannot add confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

MiouResult Miou(const ConfusionMatrix& conf) {
  const int n = conf.num_classes();
  MiouResult result;
  result.per_class.resize(n);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < n; ++c) {
    std::uint64_t tp = conf.count(c, c), fp = 0, fn = 0;
    for (int k = 0; k < n; ++k) {
      if (k == c) continue;
      fp += conf.count(k, c);
      fn += conf.count(c, k);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    result.per_class[c] = iou;
    sum += iou;
    ++present;
  }
  Require(present > 0, ErrorCode::kInvalidArgument,
          "mIoU undefined: no class appears in truth or prediction");
  result.miou = sum / present;
  return result;
}

LabelMap Predict(const LogitsMap& logits) {
  const int classes = logits.channels();
  const std::size_t plane = logits.plane_size();
  std::vector<std::uint8_t> out(plane);
  auto src = logits.data();
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (src[c * plane + i] > src[best * plane + i]) best = c;
    }
    out[i] = static_cast<std::uint8_t>(best);
  }
  return LabelMap(logits.height(), logits.width(), classes, std::move(out));
}

ImageTensor ModelInput(const SegNet<float>& net, const Sample& sample,
                       const LabelNoiser& noiser, Rng& rng) {
  if (net.config().in_channels == 3) return sample.image;
  return noiser.Input(sample.image, sample.label, rng);
}

MiouResult EvaluateMiou(const SegNet<float>& net,
                        std::span<const Sample> samples,
                        const LabelNoiser& noiser, std::uint64_t seed) {
  Require(!samples.empty(), ErrorCode::kInvalidArgument,
          "no samples to evaluate");
  Require(samples.front().label.num_classes() == net.config().num_classes,
          ErrorCode::kShapeMismatch,
          "model predicts " + std::to_string(net.config().num_classes) +
              " classes, dataset has " +
              std::to_string(samples.front().label.num_classes()));
  ConfusionMatrix conf(net.config().num_classes);
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
    std::vector<ImageTensor> inputs;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = MakeRng(seed, "eval-noise", i);
      inputs.push_back(ModelInput(net, samples[i], noiser, rng));
    }
    std::vector<LogitsMap> logits = net.Forward(std::span<const ImageTensor>(inputs));
    for (std::size_t i = begin; i < end; ++i) {
      conf.Add(samples[i].label, Predict(logits[i - begin]));
    }
  }
  return Miou(conf);
}

double KlMeanFromLogits(std::span<const LogitsMap> outputs) {
  Require(!outputs.empty(), ErrorCode::kInvalidArgument, "m must be >= 1");
  const std::size_t m = outputs.size();
  std::vector<Tensor> logp;
  logp.reserve(m);
  for (const LogitsMap& o : outputs) {
    Require(o.same_shape(outputs.front()), ErrorCode::kShapeMismatch,
            "outputs differ in shape");
    logp.push_back(LogSoftmaxChannels(o));
  }
  const std::size_t plane = outputs.front().plane_size();
  const int classes = outputs.front().channels();
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      if (k == j) continue;  // self-KL is zero
      auto a = logp[k].data();
      auto b = logp[j].data();
      double kl = 0.0;
      for (int c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
          const std::size_t idx = c * plane + i;
          kl += std::exp(a[idx]) * (a[idx] - b[idx]);
        }
      }
      total += kl / plane;
    }
  }
  return std::max(0.0, total / static_cast<double>(m * m));
}

double KlMean(const SegNet<float>& teacher, const ImageTensor& image,
              const LabelMap& label, int m, const LabelNoiser& noiser,
              Rng& rng) {
  RequireLabelChannel(teacher);
  Require(m >= 1, ErrorCode::kInvalidArgument, "m must be >= 1");
  std::vector<ImageTensor> inputs;
  for (int k = 0; k < m; ++k) inputs.push_back(noiser.Input(image, label, rng));
  std::vector<LogitsMap> outputs =
      teacher.Forward(std::span<const ImageTensor>(inputs));
  return KlMeanFromLogits(outputs);
}

StabilityReport EvaluateStability(const SegNet<float>& teacher,
                                  std::span<const Sample> samples, int m,
                                  const LabelNoiser& noiser,
                                  std::uint64_t seed) {
  RequireLabelChannel(teacher);
  Require(!samples.empty(), ErrorCode::kInvalidArgument, "no samples");
  StabilityReport report;
  report.m = m;
  report.per_image.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng = MakeRng(seed, "stability", i);
    report.per_image[i] =
        KlMean(teacher, samples[i].image, samples[i].label, m, noiser, rng);
  }
  report.kl_mean =
      std::accumulate(report.per_image.begin(), report.per_image.end(), 0.0) /
      samples.size();
  return report;
}

double SaliencyRatio(const SegNet<float>& teacher, const ImageTensor& image,
                     const LabelMap& label, const LabelNoiser& noiser, Rng& rng,
                     int draws) {
  RequireLabelChannel(teacher);
  Require(draws >= 1, ErrorCode::kInvalidArgument, "draws must be >= 1");
  double sum = 0.0;
  std::vector<float> grad_params(teacher.num_parameters());
  for (int d = 0; d < draws; ++d) {
    ImageTensor input = noiser.Input(image, label, rng);
    Batch<float> batch = ToBatch<float>(std::span<const Tensor>(&input, 1));
    SegNet<float>::Cache cache;
    Batch<float> logits = teacher.Forward(batch, &cache);
    // d(sum of max-class logits)/d(logits) selects the argmax channel.
    Batch<float> grad(1, logits.c, logits.h, logits.w);
    const std::size_t plane = static_cast<std::size_t>(logits.h) * logits.w;
    for (std::size_t i = 0; i < plane; ++i) {
      int best = 0;
      for (int c = 1; c < logits.c; ++c) {
        if (logits.data[c * plane + i] > logits.data[best * plane + i]) best = c;
      }
      grad.data[best * plane + i] = 1.0f;
    }
    Batch<float> grad_input;
    teacher.Backward(cache, grad, grad_params, &grad_input);
    double rgb = 0.0, lab = 0.0;
    for (std::size_t i = 0; i < 3 * plane; ++i) rgb += std::abs(grad_input.data[i]);
    for (std::size_t i = 3 * plane; i < 4 * plane; ++i) {
      lab += std::abs(grad_input.data[i]);
    }
    rgb /= 3.0 * plane;
    lab /= static_cast<double>(plane);
    double ratio = 0.0;
    if (rgb > 0.0) {
      ratio = std::min(kSaliencyCap, lab / rgb);
    } else if (lab > 0.0) {
      ratio = kSaliencyCap;
    }
    sum += ratio;
  }
  return sum / draws;
}

ShortcutReport EvaluateShortcut(const SegNet<float>& teacher,
                                std::span<const Sample> samples,
                                const LabelNoiser& noiser, std::uint64_t seed,
                                int draws) {
  RequireLabelChannel(teacher);
  Require(!samples.empty(), ErrorCode::kInvalidArgument, "no samples");
  ShortcutReport report;
  report.per_image.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng = MakeRng(seed, "saliency", i);
    report.per_image[i] = SaliencyRatio(teacher, samples[i].image,
                                        samples[i].label, noiser, rng, draws);
  }
  report.mean_ratio =
      std::accumulate(report.per_image.begin(), report.per_image.end(), 0.0) /
      samples.size();
  return report;
}

}  // namespace lad
