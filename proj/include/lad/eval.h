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

// Evaluation: mIoU from a confusion matrix, the KL_mean output-stability
// metric for label-assisted teachers, and an input-gradient saliency ratio
// used to detect reliance on the label channel.

#ifndef LAD_EVAL_H_
#define LAD_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lad/lnm.h"
#include "lad/rng.h"
#include "lad/segnet.h"
#include "lad/synthdata.h"
#include "lad/tensor.h"

namespace lad {

// Rows are ground truth, columns predictions. IGNORE pixels are skipped.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  std::uint64_t count(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ + predicted];
  }
  std::uint64_t total() const;

  // prediction holds class ids (IGNORE not allowed).
  void Add(const LabelMap& truth, const LabelMap& prediction);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

struct MiouResult {
  double miou = 0.0;
  // nullopt for classes absent from both truth and prediction.
  std::vector<std::optional<double>> per_class;
};

// Throws kInvalidArgument when every class has an empty union.
MiouResult Miou(const ConfusionMatrix& conf);

// Per-pixel argmax over the class axis (ties resolve to the lower index).
LabelMap Predict(const LogitsMap& logits);

// Builds the network input for one sample: the image itself for 3-channel
// nets, image + noised label for 4-channel nets.
ImageTensor ModelInput(const SegNet<float>& net, const Sample& sample,
                       const LabelNoiser& noiser, Rng& rng);

// Validation mIoU. 4-channel nets receive freshly noised labels drawn from
// the per-image substream (seed, "eval-noise", i).
MiouResult EvaluateMiou(const SegNet<float>& net, std::span<const Sample> samples,
                        const LabelNoiser& noiser, std::uint64_t seed);

// (1 / m^2) * sum_k sum_j KL(softmax_c(O_k) || softmax_c(O_j)), with the
// per-pixel KL averaged over pixels.
double KlMeanFromLogits(std::span<const LogitsMap> outputs);

// m forwards of one image with independently noised labels.
double KlMean(const SegNet<float>& teacher, const ImageTensor& image,
              const LabelMap& label, int m, const LabelNoiser& noiser,
              Rng& rng);

struct StabilityReport {
  double kl_mean = 0.0;
  int m = 0;
  std::vector<double> per_image;
  double kl_mean_x100() const { return 100.0 * kl_mean; }
};

// KL_mean over samples, image i using substream (seed, "stability", i).
StabilityReport EvaluateStability(const SegNet<float>& teacher,
                                  std::span<const Sample> samples, int m,
                                  const LabelNoiser& noiser,
                                  std::uint64_t seed);

inline constexpr double kSaliencyCap = 1e6;

// Objective sum over pixels of the max-class logit. Ratio of the mean
// absolute input gradient on the label channel to that on the RGB channels,
// averaged over `draws` noise draws. Capped at kSaliencyCap.
double SaliencyRatio(const SegNet<float>& teacher, const ImageTensor& image,
                     const LabelMap& label, const LabelNoiser& noiser, Rng& rng,
                     int draws = 4);

struct ShortcutReport {
  double mean_ratio = 0.0;
  std::vector<double> per_image;
};

ShortcutReport EvaluateShortcut(const SegNet<float>& teacher,
                                std::span<const Sample> samples,
                                const LabelNoiser& noiser, std::uint64_t seed,
                                int draws = 4);

}  // namespace lad

#endif  // LAD_EVAL_H_
