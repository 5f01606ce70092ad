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

#include "lad/trainer.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>

#include "lad/config.h"
#include "lad/error.h"
#include "lad/eval.h"
#include "lad/rng.h"

namespace lad {
namespace {

constexpr char kWeightsMagic[4] = {'L', 'A', 'D', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

std::atomic<std::ostream*> g_log{nullptr};

// Cycles through seeded permutations of the training set, one per epoch.
class BatchSampler {
 public:
  BatchSampler(int size, std::uint64_t seed) : size_(size), seed_(seed) {
    Require(size > 0, ErrorCode::kInvalidArgument, "training split is empty");
  }

  std::vector<int> Next(int batch_size) {
    std::vector<int> batch;
    batch.reserve(batch_size);
    while (static_cast<int>(batch.size()) < batch_size) {
      if (pos_ == order_.size()) {
        order_ = ShuffledOrder(size_, DeriveSeed(seed_, "shuffle", epoch_++));
        pos_ = 0;
      }
      batch.push_back(order_[pos_++]);
    }
    return batch;
  }

 private:
  int size_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<int> order_;
  std::size_t pos_ = 0;
};

void ValidateTrainConfig(const TrainConfig& c) {
  Require(c.alpha >= 0.0, ErrorCode::kInvalidArgument, "alpha must be >= 0");
  Require(c.lambda_consistency >= 0.0 && c.beta_kd >= 0.0,
          ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  Require(c.temperature > 0.0, ErrorCode::kInvalidArgument,
          "temperature must be > 0");
  Require(c.learning_rate > 0.0, ErrorCode::kInvalidArgument,
          "learning_rate must be > 0");
  Require(c.iterations >= 0, ErrorCode::kInvalidArgument,
          "iterations must be >= 0");
  Require(c.batch_size >= 1, ErrorCode::kInvalidArgument,
          "batch_size must be >= 1");
  Require(c.eval_every >= 1, ErrorCode::kInvalidArgument,
          "eval_every must be >= 1");
}

void WriteGrad(Batch<float>& grads, int index, const LogitsMap& g,
               double scale) {
  auto dst = grads.sample(index);
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(src[i] * scale);
  }
}

void CheckFinite(const IterationRecord& r) {
  Require(std::isfinite(r.loss_total), ErrorCode::kNumeric,
          "loss became non-finite at iteration " + std::to_string(r.iter) +
              " (ce=" + std::to_string(r.loss_ce) +
              ", consis/kd=" + std::to_string(r.loss_consis_or_kd) +
              "); try a lower learning rate");
}

// Shared outer loop: sampling, evaluation cadence, records and timing.
// `step` fills the loss fields for one batch of training indices.
RunRecord RunLoop(
    const TrainConfig& config, TrainMode mode, const Dataset& data,
    const std::function<void(const std::vector<int>&, IterationRecord&)>& step,
    const std::function<double(int)>& evaluate) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.mode = mode;
  BatchSampler sampler(static_cast<int>(data.train.size()), config.seed);
  record.final_val_miou = config.iterations == 0 ? evaluate(0) : 0.0;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    IterationRecord r;
    r.iter = iter;
    step(sampler.Next(config.batch_size), r);
    CheckFinite(r);
    if (iter % config.eval_every == 0 || iter == config.iterations) {
      r.val_miou = evaluate(iter);
      record.final_val_miou = *r.val_miou;
      if (std::ostream* log = g_log.load()) {
        *log << "[" << TrainModeName(mode) << "] iter " << iter << "/"
             << config.iterations << " loss " << r.loss_total << " val mIoU "
             << *r.val_miou << "\n";
      }
    }
    record.iterations.push_back(r);
  }
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

std::function<double(int)> Evaluator(const SegNet<float>& net,
                                     const TrainConfig& config,
                                     const Dataset& data) {
  return [&net, &config, &data](int iter) {
    return EvaluateMiou(net, data.val, config.noiser(),
                        DeriveSeed(config.seed, "eval", iter))
        .miou;
  };
}

}  // namespace

void SetTrainingLog(std::ostream* log) { g_log.store(log); }

const char* TrainModeName(TrainMode mode) {
  switch (mode) {
    case TrainMode::kTeacher:
      return "teacher";
    case TrainMode::kStudent:
      return "student";
    case TrainMode::kBaseline:
      return "baseline";
  }
  return "unknown";
}

NetConfig ResolveNetConfig(const TrainConfig& config, TrainMode mode,
                           int num_classes) {
  NetConfig net = config.net;
  net.in_channels = mode == TrainMode::kTeacher ? 4 : 3;
  net.num_classes = num_classes;
  net.seed = DeriveSeed(config.seed, "init");
  return net;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(size, 0.0),
      v_(size, 0.0) {}

void Adam::Step(std::span<float> params, std::span<const float> grads) {
  Require(params.size() == m_.size() && grads.size() == m_.size(),
          ErrorCode::kShapeMismatch, "optimizer state size mismatch");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double update = lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    params[i] = static_cast<float>(params[i] - update);
  }
}

TrainResult TrainTeacher(const TrainConfig& config, const Dataset& data) {
  ValidateTrainConfig(config);
  TrainResult result;
  result.config = config;
  result.config.net =
      ResolveNetConfig(config, TrainMode::kTeacher, data.num_classes());
  const TrainConfig& c = result.config;
  result.net = SegNet<float>(c.net);
  // Second copy for the independent-copies variant; starts identical.
  std::optional<SegNet<float>> twin;
  if (c.dual_path && !c.shared_weights) twin = result.net;

  const LabelNoiser noiser = c.noiser();
  const LossWeights weights = c.loss_weights();
  Rng noise = MakeRng(c.seed, "noise");
  Adam adam(result.net.num_parameters(), c.learning_rate);
  std::optional<Adam> twin_adam;
  if (twin) twin_adam.emplace(twin->num_parameters(), c.learning_rate);
  std::vector<float> grad(result.net.num_parameters());
  std::vector<float> twin_grad(twin ? twin->num_parameters() : 0);
  SegNet<float>& net = result.net;

  auto step = [&](const std::vector<int>& batch, IterationRecord& r) {
    const int n = static_cast<int>(batch.size());
    const int paths = c.dual_path ? 2 : 1;
    // inputs[p * n + b]: path p of image b
    std::vector<ImageTensor> inputs(static_cast<std::size_t>(paths) * n);
    for (int b = 0; b < n; ++b) {
      const Sample& s = data.train[batch[b]];
      for (int p = 0; p < paths; ++p) {
        inputs[p * n + b] = noiser.Input(s.image, s.label, noise);
      }
    }
    std::vector<Batch<float>> logits;
    std::vector<SegNet<float>::Cache> caches(twin ? 2 : 1);
    if (twin) {
      std::span<const ImageTensor> all(inputs);
      logits.push_back(net.Forward(ToBatch<float>(all.first(n)), &caches[0]));
      logits.push_back(twin->Forward(ToBatch<float>(all.subspan(n)), &caches[1]));
    } else {
      logits.push_back(net.Forward(ToBatch<float>(inputs), &caches[0]));
    }
    auto path_logits = [&](int p, int b) {
      return twin ? FromBatch(logits[p], b) : FromBatch(logits[0], p * n + b);
    };

    std::vector<Batch<float>> grads;
    for (const auto& l : logits) grads.emplace_back(l.n, l.c, l.h, l.w);
    for (int b = 0; b < n; ++b) {
      const LabelMap& label = data.train[batch[b]].label;
      LogitsMap o1 = path_logits(0, b);
      LogitsMap g1, g2;
      if (c.dual_path) {
        LogitsMap o2 = path_logits(1, b);
        TeacherLossBreakdown t = TeacherLoss(o1, o2, label, weights,
                                             c.consistency_form, &g1, &g2);
        r.loss_ce += (t.ce_first + t.ce_second) / n;
        r.loss_consis_or_kd += t.weighted_consistency / n;
        r.loss_consis_or_kd_raw += t.consistency / n;
        r.loss_total += t.total / n;
        if (twin) {
          WriteGrad(grads[0], b, g1, 1.0 / n);
          WriteGrad(grads[1], b, g2, 1.0 / n);
        } else {
          WriteGrad(grads[0], b, g1, 1.0 / n);
          WriteGrad(grads[0], n + b, g2, 1.0 / n);
        }
      } else {
        const double ce = CrossEntropySeg(o1, label, &g1);
        r.loss_ce += ce / n;
        r.loss_total += ce / n;
        WriteGrad(grads[0], b, g1, 1.0 / n);
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    net.Backward(caches[0], grads[0], grad);
    adam.Step(net.parameters(), grad);
    if (twin) {
      std::fill(twin_grad.begin(), twin_grad.end(), 0.0f);
      twin->Backward(caches[1], grads[1], twin_grad);
      twin_adam->Step(twin->parameters(), twin_grad);
    }
  };
  result.record = RunLoop(c, TrainMode::kTeacher, data, step,
                          Evaluator(result.net, c, data));
  return result;
}

TrainResult TrainStudent(const TrainConfig& config, const Dataset& data,
                         const Checkpoint& teacher) {
  ValidateTrainConfig(config);
  Require(teacher.net.config().in_channels == 4, ErrorCode::kShapeMismatch,
          "teacher checkpoint must take 4 input channels");
  Require(teacher.net.config().num_classes == data.num_classes(),
          ErrorCode::kShapeMismatch,
          "teacher predicts " +
              std::to_string(teacher.net.config().num_classes) +
              " classes but the dataset has " +
              std::to_string(data.num_classes()));
  TrainResult result;
  result.config = config;
  result.config.net =
      ResolveNetConfig(config, TrainMode::kStudent, data.num_classes());
  const TrainConfig& c = result.config;
  result.net = SegNet<float>(c.net);
  SegNet<float>& net = result.net;

  // The teacher sees labels noised exactly as during its own training.
  const LabelNoiser teacher_noiser = teacher.config.noiser();
  const LossWeights weights = c.loss_weights();
  Rng noise = MakeRng(c.seed, "noise");
  Adam adam(net.num_parameters(), c.learning_rate);
  std::vector<float> grad(net.num_parameters());

  auto step = [&](const std::vector<int>& batch, IterationRecord& r) {
    const int n = static_cast<int>(batch.size());
    std::vector<ImageTensor> teacher_inputs, images;
    for (int b : batch) {
      const Sample& s = data.train[b];
      teacher_inputs.push_back(teacher_noiser.Input(s.image, s.label, noise));
      images.push_back(s.image);
    }
    Batch<float> teacher_logits = teacher.net.Forward(ToBatch<float>(teacher_inputs));
    SegNet<float>::Cache cache;
    Batch<float> logits = net.Forward(ToBatch<float>(images), &cache);
    Batch<float> grads(logits.n, logits.c, logits.h, logits.w);
    for (int b = 0; b < n; ++b) {
      LogitsMap g;
      StudentLossBreakdown s =
          StudentLoss(FromBatch(logits, b), FromBatch(teacher_logits, b),
                      data.train[batch[b]].label, weights, &g);
      r.loss_ce += s.ce / n;
      r.loss_consis_or_kd += s.weighted_kd / n;
      r.loss_consis_or_kd_raw += s.kd / n;
      r.loss_total += s.total / n;
      WriteGrad(grads, b, g, 1.0 / n);
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    net.Backward(cache, grads, grad);
    adam.Step(net.parameters(), grad);
  };
  result.record = RunLoop(c, TrainMode::kStudent, data, step,
                          Evaluator(result.net, c, data));
  return result;
}

TrainResult TrainBaseline(const TrainConfig& config, const Dataset& data) {
  ValidateTrainConfig(config);
  TrainResult result;
  result.config = config;
  result.config.net =
      ResolveNetConfig(config, TrainMode::kBaseline, data.num_classes());
  const TrainConfig& c = result.config;
  result.net = SegNet<float>(c.net);
  SegNet<float>& net = result.net;
  Adam adam(net.num_parameters(), c.learning_rate);
  std::vector<float> grad(net.num_parameters());

  auto step = [&](const std::vector<int>& batch, IterationRecord& r) {
    const int n = static_cast<int>(batch.size());
    std::vector<ImageTensor> images;
    for (int b : batch) images.push_back(data.train[b].image);
    SegNet<float>::Cache cache;
    Batch<float> logits = net.Forward(ToBatch<float>(images), &cache);
    Batch<float> grads(logits.n, logits.c, logits.h, logits.w);
    for (int b = 0; b < n; ++b) {
      LogitsMap g;
      const double ce =
          CrossEntropySeg(FromBatch(logits, b), data.train[batch[b]].label, &g);
      r.loss_ce += ce / n;
      r.loss_total += ce / n;
      WriteGrad(grads, b, g, 1.0 / n);
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    net.Backward(cache, grads, grad);
    adam.Step(net.parameters(), grad);
  };
  result.record = RunLoop(c, TrainMode::kBaseline, data, step,
                          Evaluator(result.net, c, data));
  return result;
}

std::filesystem::path CheckpointPrefix(const std::filesystem::path& path) {
  std::string s = path.string();
  for (const char* suffix : {".manifest.json", ".weights", ".metrics.jsonl"}) {
    if (s.ends_with(suffix)) return s.substr(0, s.size() - std::strlen(suffix));
  }
  return path;
}

void SaveCheckpoint(const std::filesystem::path& prefix,
                    const TrainResult& result) {
  const std::string base = prefix.string();
  if (prefix.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(prefix.parent_path(), ec);
    Require(!ec, ErrorCode::kIo,
            "cannot create " + prefix.parent_path().string() + ": " +
                ec.message());
  }
  {
    std::ofstream out(base + ".weights", std::ios::binary | std::ios::trunc);
    Require(static_cast<bool>(out), ErrorCode::kIo,
            "cannot write " + base + ".weights");
    auto params = result.net.parameters();
    const std::uint64_t count = params.size();
    out.write(kWeightsMagic, sizeof(kWeightsMagic));
    out.write(reinterpret_cast<const char*>(&kWeightsVersion),
              sizeof(kWeightsVersion));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size_bytes()));
    Require(static_cast<bool>(out), ErrorCode::kIo,
            "failed writing " + base + ".weights");
  }
  {
    std::ofstream out(base + ".metrics.jsonl", std::ios::trunc);
    Require(static_cast<bool>(out), ErrorCode::kIo,
            "cannot write " + base + ".metrics.jsonl");
    for (const IterationRecord& r : result.record.iterations) {
      out << ToJson(r).dump() << "\n";
    }
  }
  Json manifest{
      {"format_version", kFormatVersion},
      {"mode", TrainModeName(result.record.mode)},
      {"seed", result.config.seed},
      {"net", ToJson(result.config.net)},
      {"train", ToJson(result.config)},
      {"weights_file",
       std::filesystem::path(base + ".weights").filename().string()},
      {"num_parameters", result.net.num_parameters()},
      {"final_metrics",
       {{"val_miou", result.record.final_val_miou},
        {"iterations", result.config.iterations},
        {"wall_clock_seconds", result.record.wall_clock_seconds}}}};
  WriteJsonFile(base + ".manifest.json", manifest);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  const std::string base = CheckpointPrefix(path).string();
  const Json manifest = ReadJsonFile(base + ".manifest.json");
  Checkpoint ckpt;
  try {
    Require(manifest.at("format_version").get<int>() == kFormatVersion,
            ErrorCode::kIo, base + ".manifest.json: unsupported format_version");
    ckpt.mode = TrainModeFromString(manifest.at("mode").get<std::string>());
    ckpt.config = TrainConfigFromJson(manifest.at("train"));
    ckpt.final_val_miou =
        manifest.at("final_metrics").at("val_miou").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, base + ".manifest.json: " + e.what());
  }
  ckpt.net = SegNet<float>(ckpt.config.net);

  std::ifstream in(base + ".weights", std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot read " + base + ".weights");
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  Require(in && std::memcmp(magic, kWeightsMagic, 4) == 0 &&
              version == kWeightsVersion,
          ErrorCode::kIo, base + ".weights: not a weights file");
  auto params = ckpt.net.parameters();
  Require(count == params.size(), ErrorCode::kIo,
          base + ".weights holds " + std::to_string(count) +
              " parameters, the manifest's network needs " +
              std::to_string(params.size()));
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(params.size_bytes()));
  Require(static_cast<bool>(in), ErrorCode::kIo,
          base + ".weights is truncated");
  return ckpt;
}

std::vector<IterationRecord> LoadMetrics(const std::filesystem::path& prefix) {
  const std::string path = CheckpointPrefix(prefix).string() + ".metrics.jsonl";
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path);
  std::vector<IterationRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(IterationRecordFromJson(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, path + ": " + e.what());
    }
  }
  return records;
}

}  // namespace lad
