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

// Training loops for the label-assisted teacher, the distilled student and
// the RGB-only baseline, plus checkpoint files.

#ifndef LAD_TRAINER_H_
#define LAD_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lad/lnm.h"
#include "lad/losses.h"
#include "lad/segnet.h"
#include "lad/synthdata.h"

namespace lad {

enum class TrainMode { kTeacher, kStudent, kBaseline };

const char* TrainModeName(TrainMode mode);

struct TrainConfig {
  double alpha = 0.01;
  double lambda_consistency = 1.0;
  double beta_kd = 3.0;
  double temperature = 4.0;
  double learning_rate = 1e-3;
  int iterations = 3000;
  int batch_size = 8;
  std::uint64_t seed = 0;
  // Off: the label channel is the class index scaled to [0, 1] plus
  // alpha * Z. Together with alpha = 0 this is the clean-label condition.
  bool class_wise_noising = true;
  // Off: one noised forward per image and segmentation loss only.
  bool dual_path = true;
  // Off: the two paths run through two copies that start identical and are
  // optimized separately; the first copy is kept.
  bool shared_weights = true;
  ConsistencyForm consistency_form = ConsistencyForm::kSymmetric;
  int eval_every = 200;
  NetConfig net;
  std::string dataset;

  LossWeights loss_weights() const {
    return {lambda_consistency, beta_kd, temperature};
  }
  LabelNoiser noiser() const {
    return {class_wise_noising ? NoisingMode::kClassWise
                               : NoisingMode::kNormalizedIndex,
            alpha};
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct IterationRecord {
  int iter = 0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  // lambda * D for the teacher, beta * cwd for the student, 0 otherwise.
  double loss_consis_or_kd = 0.0;
  // D or cwd before weighting.
  double loss_consis_or_kd_raw = 0.0;
  std::optional<double> val_miou;
};

struct RunRecord {
  TrainMode mode = TrainMode::kBaseline;
  std::vector<IterationRecord> iterations;
  double final_val_miou = 0.0;
  double wall_clock_seconds = 0.0;
};

struct TrainResult {
  SegNet<float> net{NetConfig{}};
  TrainConfig config;  // as run, with net.seed and net.in_channels resolved
  RunRecord record;
};

// A trained model as stored on disk.
struct Checkpoint {
  TrainMode mode = TrainMode::kBaseline;
  TrainConfig config;
  SegNet<float> net{NetConfig{}};
  double final_val_miou = 0.0;
};

// Dual-path teacher: per image, two independently noised label channels,
// two forwards through one parameter set, loss CE + CE + lambda * D.
TrainResult TrainTeacher(const TrainConfig& config, const Dataset& data);

// RGB student distilled from a frozen teacher fed freshly noised labels
// (the teacher's own noising settings). Loss CE + beta * cwd.
TrainResult TrainStudent(const TrainConfig& config, const Dataset& data,
                         const Checkpoint& teacher);

// RGB-only supervised training with CE.
TrainResult TrainBaseline(const TrainConfig& config, const Dataset& data);

// Net config the trainer builds for a mode: in_channels (4 for the teacher,
// 3 otherwise), num_classes from the dataset and the init seed derived from
// config.seed.
// Progress lines at each evaluation go here; nullptr (default) is silent.
void SetTrainingLog(std::ostream* log);

NetConfig ResolveNetConfig(const TrainConfig& config, TrainMode mode,
                           int num_classes);

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(std::size_t size, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);
  void Step(std::span<float> params, std::span<const float> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<double> m_, v_;
};

// <prefix>.weights, <prefix>.manifest.json, <prefix>.metrics.jsonl
void SaveCheckpoint(const std::filesystem::path& prefix,
                    const TrainResult& result);
// Accepts the prefix or either file path. Throws kIo on missing or
// inconsistent files.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);
std::vector<IterationRecord> LoadMetrics(const std::filesystem::path& prefix);
std::filesystem::path CheckpointPrefix(const std::filesystem::path& path);

}  // namespace lad

#endif  // LAD_TRAINER_H_
