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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geognn/tensor.hpp"

namespace geognn {

enum class Metric { kRmse, kMae, kRocAuc };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);
// RMSE/MAE are minimized, ROC-AUC maximized.
bool lower_is_better(Metric m);

// Single task. Pairs with a missing target are skipped; throws DataError if
// nothing is left.
double metric_rmse(std::span<const double> preds, std::span<const std::optional<double>> targets);
double metric_mae(std::span<const double> preds, std::span<const std::optional<double>> targets);

// Area under the ROC curve as the rank statistic
// P(score_pos > score_neg) + 0.5 * P(tie), with tied scores given their
// average rank. nullopt when only one class is present.
std::optional<double> metric_rocauc(std::span<const double> scores, std::span<const int> labels);

// Multi-task evaluation. preds is [n, T]; targets[t][i] is the label of
// sample i for task t. Returns the mean over tasks that could be scored and
// appends one warning per skipped task. Throws DataError when no task can be
// scored.
struct MetricResult {
  double value = 0.0;
  std::vector<double> per_task;  // NaN for skipped tasks
  std::vector<std::string> warnings;
};

MetricResult evaluate_metric(Metric metric, const Tensor& preds,
                             const std::vector<std::vector<std::optional<double>>>& targets,
                             std::span<const std::string> task_names);

}  // namespace geognn
