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

// Command-line front end: lad gen-data | train | eval | stability | shortcut
// | sweep-alpha. Exit codes: 0 ok, 1 internal error, 2 usage or IO error.

#ifndef LAD_CLI_H_
#define LAD_CLI_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lad/config.h"
#include "lad/segnet.h"
#include "lad/synthdata.h"
#include "lad/trainer.h"

namespace lad {

struct EvalSettings {
  int m = 3;
  int num_images = 20;
  int saliency_draws = 4;
  std::uint64_t seed = 0;
};

// One document describing a whole experiment. Checkpoint manifests are also
// accepted as configs: their "train" block (which embeds the net config and
// dataset path) is used for both networks.
struct ExperimentConfig {
  DatasetSpec dataset;
  std::string dataset_dir = "data";
  NetConfig teacher_net{4};
  NetConfig student_net{3};
  TrainConfig train;
  EvalSettings eval;
  std::string out_dir = "runs";
};

Json ToJson(const ExperimentConfig& config);
ExperimentConfig ExperimentConfigFromJson(const Json& j);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace lad

#endif  // LAD_CLI_H_
