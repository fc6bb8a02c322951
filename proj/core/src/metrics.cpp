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

#include "geognn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "geognn/errors.hpp"

namespace geognn {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kRmse: return "rmse";
    case Metric::kMae: return "mae";
    case Metric::kRocAuc: return "rocauc";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  if (s == "rmse") return Metric::kRmse;
  if (s == "mae") return Metric::kMae;
  if (s == "rocauc") return Metric::kRocAuc;
  throw ConfigError("unknown metric '" + s + "' (expected rmse, mae or rocauc)");
}

bool lower_is_better(Metric m) { return m != Metric::kRocAuc; }

namespace {

template <class Acc>
double paired_mean(std::span<const double> preds, std::span<const std::optional<double>> targets, Acc acc) {
  if (preds.size() != targets.size()) throw std::invalid_argument("metric: prediction/target length mismatch");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!targets[i]) continue;
    s += acc(preds[i] - *targets[i]);
    ++n;
  }
  if (n == 0) throw DataError("metric: no labelled samples");
  return s / static_cast<double>(n);
}

}  // namespace

double metric_rmse(std::span<const double> preds, std::span<const std::optional<double>> targets) {
  return std::sqrt(paired_mean(preds, targets, [](double d) { return d * d; }));
}

double metric_mae(std::span<const double> preds, std::span<const std::optional<double>> targets) {
  return paired_mean(preds, targets, [](double d) { return std::abs(d); });
}

std::optional<double> metric_rocauc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("rocauc: score/label length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based) ranks of the positives, ties sharing their mean rank.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double pos = static_cast<double>(n_pos);
  const double u = pos_rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(n_neg));
}

MetricResult evaluate_metric(Metric metric, const Tensor& preds,
                             const std::vector<std::vector<std::optional<double>>>& targets,
                             std::span<const std::string> task_names) {
  const std::size_t tasks = preds.cols();
  if (targets.size() != tasks || task_names.size() != tasks) {
    throw std::invalid_argument("evaluate_metric: task count mismatch");
  }
  MetricResult result;
  result.per_task.assign(tasks, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (targets[t].size() != preds.rows()) throw std::invalid_argument("evaluate_metric: sample count mismatch");
    std::vector<double> col(preds.rows());
    for (std::size_t i = 0; i < preds.rows(); ++i) col[i] = preds(i, t);
    std::optional<double> value;
    if (metric == Metric::kRocAuc) {
      std::vector<double> scores;
      std::vector<int> labels;
      for (std::size_t i = 0; i < col.size(); ++i) {
        if (!targets[t][i]) continue;
        scores.push_back(col[i]);
        labels.push_back(*targets[t][i] > 0.5 ? 1 : 0);
      }
      value = metric_rocauc(scores, labels);
      if (!value) result.warnings.push_back("task '" + task_names[t] + "' has a single class; skipped");
    } else {
      const bool any = std::any_of(targets[t].begin(), targets[t].end(), [](const auto& v) { return v.has_value(); });
      if (!any) {
        result.warnings.push_back("task '" + task_names[t] + "' has no labels; skipped");
      } else {
        value = metric == Metric::kRmse ? metric_rmse(col, targets[t]) : metric_mae(col, targets[t]);
      }
    }
    if (value) {
      result.per_task[t] = *value;
      sum += *value;
      ++scored;
    }
  }
  if (scored == 0) throw DataError("no task could be scored with " + to_string(metric));
  result.value = sum / static_cast<double>(scored);
  return result;
}

}  // namespace geognn
