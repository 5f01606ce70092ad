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

#include "lad/config.h"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "lad/error.h"

namespace lad {
namespace {

template <typename T>
void Read(const Json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("config key '") + key + "': " + e.what());
  }
}

void RejectUnknown(const Json& j, std::initializer_list<const char*> known,
                   const char* what) {
  Require(j.is_object(), ErrorCode::kInvalidArgument,
          std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    Require(ok, ErrorCode::kInvalidArgument,
            std::string("unknown key '") + item.key() + "' in " + what);
  }
}

const char* FormName(ConsistencyForm form) {
  return form == ConsistencyForm::kSymmetric ? "symmetric" : "one_directional";
}

}  // namespace

Json ToJson(const DatasetSpec& spec) {
  return Json{{"num_classes", spec.num_classes},
              {"num_train", spec.num_train},
              {"num_val", spec.num_val},
              {"image_size", spec.image_size},
              {"color_noise_sigma", spec.color_noise_sigma},
              {"class_color_overlap", spec.class_color_overlap},
              {"ignore_border", spec.ignore_border},
              {"seed", spec.seed}};
}

DatasetSpec DatasetSpecFromJson(const Json& j) {
  RejectUnknown(j,
                {"num_classes", "num_train", "num_val", "image_size",
                 "color_noise_sigma", "class_color_overlap", "ignore_border",
                 "seed"},
                "dataset spec");
  DatasetSpec spec;
  Read(j, "num_classes", spec.num_classes);
  Read(j, "num_train", spec.num_train);
  Read(j, "num_val", spec.num_val);
  Read(j, "image_size", spec.image_size);
  Read(j, "color_noise_sigma", spec.color_noise_sigma);
  Read(j, "class_color_overlap", spec.class_color_overlap);
  Read(j, "ignore_border", spec.ignore_border);
  Read(j, "seed", spec.seed);
  return spec;
}

Json ToJson(const DatasetManifest& manifest) {
  return Json{{"format_version", manifest.format_version},
              {"spec", ToJson(manifest.spec)},
              {"num_classes", manifest.spec.num_classes},
              {"splits",
               {{"train", manifest.spec.num_train},
                {"val", manifest.spec.num_val}}},
              {"effective_seed", manifest.effective_seed}};
}

DatasetManifest DatasetManifestFromJson(const Json& j) {
  DatasetManifest manifest;
  Require(j.contains("spec"), ErrorCode::kIo, "dataset manifest lacks 'spec'");
  manifest.spec = DatasetSpecFromJson(j.at("spec"));
  Read(j, "format_version", manifest.format_version);
  manifest.effective_seed = manifest.spec.seed;
  Read(j, "effective_seed", manifest.effective_seed);
  return manifest;
}

Json ToJson(const NetConfig& config) {
  return Json{{"in_channels", config.in_channels},
              {"num_classes", config.num_classes},
              {"base_width", config.base_width},
              {"depth", config.depth},
              {"norm_groups", config.norm_groups},
              {"seed", config.seed}};
}

NetConfig NetConfigFromJson(const Json& j) {
  RejectUnknown(j,
                {"in_channels", "num_classes", "base_width", "depth",
                 "norm_groups", "seed"},
                "net config");
  NetConfig config;
  Read(j, "in_channels", config.in_channels);
  Read(j, "num_classes", config.num_classes);
  Read(j, "base_width", config.base_width);
  Read(j, "depth", config.depth);
  Read(j, "norm_groups", config.norm_groups);
  Read(j, "seed", config.seed);
  return config;
}

Json ToJson(const TrainConfig& config) {
  return Json{{"alpha", config.alpha},
              {"lambda_consistency", config.lambda_consistency},
              {"beta_kd", config.beta_kd},
              {"temperature", config.temperature},
              {"learning_rate", config.learning_rate},
              {"optimizer", "adam"},
              {"iterations", config.iterations},
              {"batch_size", config.batch_size},
              {"seed", config.seed},
              {"class_wise_noising", config.class_wise_noising},
              {"dual_path", config.dual_path},
              {"shared_weights", config.shared_weights},
              {"consistency_form", FormName(config.consistency_form)},
              {"eval_every", config.eval_every},
              {"net", ToJson(config.net)},
              {"dataset", config.dataset}};
}

TrainConfig TrainConfigFromJson(const Json& j, TrainConfig base) {
  RejectUnknown(j,
                {"alpha", "lambda_consistency", "beta_kd", "temperature",
                 "learning_rate", "optimizer", "iterations", "batch_size",
                 "seed", "class_wise_noising", "dual_path", "shared_weights",
                 "consistency_form", "eval_every", "net", "dataset"},
                "train config");
  TrainConfig& c = base;
  Read(j, "alpha", c.alpha);
  Read(j, "lambda_consistency", c.lambda_consistency);
  Read(j, "beta_kd", c.beta_kd);
  Read(j, "temperature", c.temperature);
  Read(j, "learning_rate", c.learning_rate);
  Read(j, "iterations", c.iterations);
  Read(j, "batch_size", c.batch_size);
  Read(j, "seed", c.seed);
  Read(j, "class_wise_noising", c.class_wise_noising);
  Read(j, "dual_path", c.dual_path);
  Read(j, "shared_weights", c.shared_weights);
  Read(j, "eval_every", c.eval_every);
  Read(j, "dataset", c.dataset);
  if (j.contains("optimizer")) {
    Require(j.at("optimizer") == "adam", ErrorCode::kInvalidArgument,
            "only the adam optimizer is supported");
  }
  if (j.contains("consistency_form")) {
    const std::string form = j.at("consistency_form").get<std::string>();
    Require(form == "symmetric" || form == "one_directional",
            ErrorCode::kInvalidArgument,
            "consistency_form must be symmetric or one_directional");
    c.consistency_form = form == "symmetric" ? ConsistencyForm::kSymmetric
                                             : ConsistencyForm::kOneDirectional;
  }
  if (j.contains("net")) c.net = NetConfigFromJson(j.at("net"));
  return c;
}

Json ToJson(const IterationRecord& r) {
  Json j{{"iter", r.iter},
         {"loss_total", r.loss_total},
         {"loss_ce", r.loss_ce},
         {"loss_consis_or_kd", r.loss_consis_or_kd},
         {"loss_consis_or_kd_raw", r.loss_consis_or_kd_raw}};
  if (r.val_miou) j["val_miou"] = *r.val_miou;
  return j;
}

IterationRecord IterationRecordFromJson(const Json& j) {
  IterationRecord r;
  Read(j, "iter", r.iter);
  Read(j, "loss_total", r.loss_total);
  Read(j, "loss_ce", r.loss_ce);
  Read(j, "loss_consis_or_kd", r.loss_consis_or_kd);
  Read(j, "loss_consis_or_kd_raw", r.loss_consis_or_kd_raw);
  if (j.contains("val_miou")) r.val_miou = j.at("val_miou").get<double>();
  return r;
}

TrainMode TrainModeFromString(const std::string& name) {
  if (name == "teacher") return TrainMode::kTeacher;
  if (name == "student") return TrainMode::kStudent;
  if (name == "baseline") return TrainMode::kBaseline;
  Fail(ErrorCode::kInvalidArgument,
       "unknown mode '" + name + "' (expected teacher, student or baseline)");
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, path.string() + ": invalid JSON: " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot write " + path.string());
  out << j.dump(2) << "\n";
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "failed writing " + path.string());
}

std::string JsonHash(const Json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : j.dump()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lad
