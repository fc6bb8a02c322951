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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geognn/checkpoint.hpp"
#include "geognn/metrics.hpp"
#include "geognn/molecule.hpp"
#include "geognn/pretrain_tasks.hpp"

namespace geognn {

enum class TaskType { kRegression, kClassification };

std::string to_string(TaskType t);
TaskType parse_task_type(const std::string& s);

struct RunConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr_body = 1e-3;
  double lr_head = 1e-3;
  std::uint64_t seed = 0;
  TaskType task_type = TaskType::kRegression;
  Metric metric = Metric::kRmse;
  std::size_t threads = 1;
  double max_grad_norm = 0.0;
  StorageType storage = StorageType::kF64;
  // Finetuning stops after the first epoch whose train metric reaches this
  // value (<= for RMSE/MAE, >= for ROC-AUC).
  std::optional<double> stop_at_train_metric;
};

// Throws ConfigError for non-positive epochs/batch/learning rates or a
// metric that does not fit the task type.
void validate(const RunConfig& run);

nlohmann::json to_json(const RunConfig& run);
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

// Molecules grouped by their split tag. Untagged molecules go to train.
struct DatasetSplit {
  std::vector<Molecule> train;
  std::vector<Molecule> valid;
  std::vector<Molecule> test;
};

DatasetSplit split_by_tag(std::vector<Molecule> molecules);

// Featurized molecules with their labels; targets[t][i] is the label of
// sample i for task t.
struct LabeledSet {
  std::vector<Sample> samples;
  std::vector<std::vector<std::optional<double>>> targets;
};

// Sorted union of the label names carried by the molecules.
std::vector<std::string> collect_task_names(const std::vector<Molecule>& molecules);

LabeledSet make_labeled_set(const std::vector<Molecule>& molecules, const std::vector<std::string>& task_names,
                            const FeatureConfig& features, std::size_t threads = 1);

std::vector<Sample> make_samples(const std::vector<Molecule>& molecules, const FeatureConfig& features,
                                 std::size_t threads = 1);

// Fresh checkpoint: parameters drawn from `seed`, epoch and Adam step 0.
Checkpoint initial_checkpoint(const ModelConfig& model, const FeatureConfig& features, std::uint64_t seed);

struct PretrainEpoch {
  std::size_t epoch = 0;  // 1-based
  PretrainLossValue train;
  // Eval-mode loss on the held-out set with masks fixed across epochs.
  std::optional<PretrainLossValue> eval;
};

struct PretrainOptions {
  RunConfig run;
  TaskSelection tasks;
  // When set, `checkpoint.ckpt` is rewritten after every epoch and
  // `pretrain_log.jsonl` receives one line per epoch.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const PretrainEpoch&)> on_epoch;
};

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<PretrainEpoch> history;
};

// Runs epochs ckpt.epoch + 1 .. run.epochs of minibatch Adam on the
// pretraining loss. Shuffling, masking and dropout are pure functions of
// (seed, epoch, molecule index), so resuming from a checkpoint replays the
// same trajectory. A non-finite loss or gradient throws NumericalError and
// leaves the last good checkpoint on disk.
PretrainResult pretrain(const std::vector<Sample>& train, const std::vector<Sample>& eval, Checkpoint ckpt,
                        const PretrainOptions& options);

// Fixed-mask eval-mode pretraining loss of a sample set.
PretrainLossValue pretrain_eval_loss(const std::vector<Sample>& samples, const ParamStore& store,
                                     const GeoGnn& model, const TaskSelection& tasks, std::uint64_t seed,
                                     std::size_t threads = 1);

struct FinetuneEpoch {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train = 0.0;
  std::optional<double> valid;
  std::optional<double> test;
};

struct FinetuneOptions {
  RunConfig run;
  // Label names to train on; empty selects every label seen in train.
  // A requested name without any training label is a DataError.
  std::vector<std::string> tasks;
  // When set, `best.ckpt` and `report.json` are written there.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const FinetuneEpoch&)> on_epoch;
};

struct FinetuneResult {
  Checkpoint best;
  std::vector<FinetuneEpoch> history;
  std::size_t selected_epoch = 0;
  std::optional<double> test_metric;
  std::vector<std::string> task_names;
  std::vector<std::string> warnings;
  nlohmann::json report;
};

// Trains a freshly initialised downstream head (and the body) on `train`,
// scores every split each epoch, and keeps the epoch with the best valid
// metric (ties go to the earlier epoch; train metric if valid is empty).
// `body` supplies pretrained parameters; without it the body is initialised
// from the run seed with `model`.
FinetuneResult finetune(const std::vector<Molecule>& train, const std::vector<Molecule>& valid,
                        const std::vector<Molecule>& test, const std::optional<Checkpoint>& body,
                        const ModelConfig& model, const FeatureConfig& features, const FinetuneOptions& options);

// Index of the best value; ties resolve to the earliest index.
std::size_t select_best_epoch(const std::vector<double>& values, Metric metric);

// Downstream predictions [n, num_tasks] in eval mode.
Tensor predict(const Checkpoint& ckpt, const std::vector<Sample>& samples, std::size_t threads = 1);

struct EvaluateResult {
  MetricResult metric;
  std::vector<std::string> task_names;
  nlohmann::json report;
};

// Scores a finetuned checkpoint on molecules carrying its task labels.
// ConfigError when the metric does not match the checkpoint's task type or
// the labels; DataError when a task label is absent from every molecule.
EvaluateResult evaluate(const Checkpoint& ckpt, const std::vector<Molecule>& molecules, Metric metric,
                        std::size_t threads = 1);

// Graph embeddings h_G in eval mode, one row per sample.
std::vector<std::vector<double>> embed(const Checkpoint& ckpt, const std::vector<Sample>& samples,
                                       std::size_t threads = 1);

// Rounds every parameter to the precision it would be stored with.
void round_to_storage(ParamStore& store, StorageType storage);

}  // namespace geognn
