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

// JSON forms of the configuration and manifest types. Every document carries
// format_version 1.

#ifndef LAD_CONFIG_H_
#define LAD_CONFIG_H_

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lad/segnet.h"
#include "lad/synthdata.h"
#include "lad/trainer.h"

namespace lad {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json ToJson(const DatasetSpec& spec);
DatasetSpec DatasetSpecFromJson(const Json& j);

Json ToJson(const DatasetManifest& manifest);
DatasetManifest DatasetManifestFromJson(const Json& j);

Json ToJson(const NetConfig& config);
NetConfig NetConfigFromJson(const Json& j);

Json ToJson(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig TrainConfigFromJson(const Json& j, TrainConfig base = {});

Json ToJson(const IterationRecord& record);
IterationRecord IterationRecordFromJson(const Json& j);

TrainMode TrainModeFromString(const std::string& name);

// Throws kIo naming the file when it is missing or not valid JSON.
Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);

// Stable hex digest of a document's compact serialization.
std::string JsonHash(const Json& j);

}  // namespace lad

#endif  // LAD_CONFIG_H_
