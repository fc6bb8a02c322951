// Copyright 2026 The GeoGNN Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geognn/featurizer.hpp"
#include "geognn/model.hpp"
#include "geognn/params.hpp"
#include "geognn/pretrain_tasks.hpp"

namespace geognn {

// JSON views of the configuration structs. Missing keys keep defaults.
nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
nlohmann::json to_json(const FeatureConfig& c);
FeatureConfig feature_config_from_json(const nlohmann::json& j, FeatureConfig base = {});
nlohmann::json to_json(const TaskSelection& t);
TaskSelection task_selection_from_json(const nlohmann::json& j, TaskSelection base = {});

// Self-describing feature manifest: RBF grids plus the name, offset and
// width of every feature block. The mask indicator is the column appended
// after the last block of each entity.
nlohmann::json feature_manifest(const FeatureConfig& c);

// Throws ConfigError listing every differing manifest entry.
void require_compatible_manifest(const nlohmann::json& expected, const nlohmann::json& actual);

enum class StorageType : std::uint8_t { kF64 = 0, kF32 = 1 };

struct Checkpoint {
  ModelConfig model;
  FeatureConfig features;
  ParamStore params;
  std::uint64_t epoch = 0;
  std::uint64_t adam_step = 0;
  // Free-form run metadata (task names, task type, seed).
  nlohmann::json meta = nlohmann::json::object();
};

// "GGC1" container; see docs/checkpoint_format.md. Written to a temporary
// file and renamed into place. f32 storage rounds values on write.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     StorageType storage = StorageType::kF64);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes `contents` atomically (temporary file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// "GGF1" bundle of featurized molecules.
void save_feature_bundle(const std::filesystem::path& path, const FeatureConfig& config,
                         const std::vector<Sample>& samples);
std::vector<Sample> load_feature_bundle(const std::filesystem::path& path, FeatureConfig* config = nullptr);

}  // namespace geognn
