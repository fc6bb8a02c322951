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

#include "geognn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "geognn/errors.hpp"
#include "geognn/optimizer.hpp"
#include "geognn/parallel.hpp"
#include "geognn/rng.hpp"

namespace geognn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleTag = 0x5eed0001;
constexpr std::uint64_t kEvalMaskTag = 0x5eed0002;
constexpr std::uint64_t kHeadInitTag = 0x5eed0003;

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

LearningRateFn learning_rates(const RunConfig& run) {
  return [body = run.lr_body, head = run.lr_head](const std::string& name) {
    return GeoGnn::is_head_parameter(name) ? head : body;
  };
}

AdamConfig adam_config(const RunConfig& run) {
  AdamConfig c;
  c.max_grad_norm = run.max_grad_norm;
  return c;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const PretrainLossValue& v) {
  return {{"total", v.total}, {"length", v.length}, {"angle", v.angle}, {"distance", v.distance},
          {"fingerprint", v.fingerprint}};
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path.string());
  out << line << '\n';
}

// Loss of one labelled sample: masked MSE (regression) or masked logistic
// loss (classification) over the tasks that carry a label. Returns nullopt
// when the sample has no label at all.
std::optional<Var> downstream_loss(Tape& tape, const ParamStore& store, const GeoGnn& model, const Sample& sample,
                                   const std::vector<std::optional<double>>& labels, TaskType type, Mode mode,
                                   std::uint64_t seed) {
  const std::size_t tasks = labels.size();
  Tensor target(1, tasks), mask(1, tasks);
  std::size_t present = 0;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (!labels[t]) continue;
    target[t] = *labels[t];
    mask[t] = 1.0;
    ++present;
  }
  if (present == 0) return std::nullopt;
  const GraphEmbedding emb = model.forward(tape, store, sample.graph, sample.encoded, mode, seed);
  const Var out = model.head_downstream(tape, store, emb.graph);
  if (type == TaskType::kClassification) return bce_with_logits(out, target, mask);
  const Var sq = mul(square(sub(out, tape.constant(target))), tape.constant(mask));
  return scale(sum(sq), 1.0 / static_cast<double>(present));
}

std::vector<std::optional<double>> labels_of(const LabeledSet& set, std::size_t i) {
  std::vector<std::optional<double>> out;
  out.reserve(set.targets.size());
  for (const auto& task : set.targets) out.push_back(task[i]);
  return out;
}

Tensor predict_store(const GeoGnn& model, const ParamStore& store, const std::vector<Sample>& samples,
                     std::size_t threads) {
  const std::size_t tasks = model.config().num_tasks;
  Tensor preds(samples.size(), tasks);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    Tape tape;
    const GraphEmbedding emb = model.forward(tape, store, samples[i].graph, samples[i].encoded, Mode::kEval);
    const Tensor& out = model.head_downstream(tape, store, emb.graph).value();
    for (std::size_t t = 0; t < tasks; ++t) preds(i, t) = out[t];
  });
  return preds;
}

void require_binary_labels(const LabeledSet& set, const std::vector<std::string>& names) {
  for (std::size_t t = 0; t < set.targets.size(); ++t) {
    for (const auto& v : set.targets[t]) {
      if (v && *v != 0.0 && *v != 1.0) {
        throw ConfigError("task '" + names[t] + "' has non-binary label " + std::to_string(*v) +
                          "; classification metrics need 0/1 labels");
      }
    }
  }
}

bool improves(double candidate, double best, Metric metric) {
  return lower_is_better(metric) ? candidate < best : candidate > best;
}

bool reaches(double value, double threshold, Metric metric) {
  return lower_is_better(metric) ? value <= threshold : value >= threshold;
}

}  // namespace

std::string to_string(TaskType t) { return t == TaskType::kRegression ? "regression" : "classification"; }

TaskType parse_task_type(const std::string& s) {
  if (s == "regression") return TaskType::kRegression;
  if (s == "classification") return TaskType::kClassification;
  throw ConfigError("unknown task type '" + s + "' (expected regression or classification)");
}

void validate(const RunConfig& run) {
  if (run.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(run.lr_body > 0.0) || !(run.lr_head > 0.0)) throw ConfigError("learning rates must be positive");
  if (run.max_grad_norm < 0.0) throw ConfigError("max_grad_norm must be non-negative");
  const bool classification_metric = run.metric == Metric::kRocAuc;
  if (classification_metric != (run.task_type == TaskType::kClassification)) {
    throw ConfigError("metric " + to_string(run.metric) + " does not apply to " + to_string(run.task_type) +
                      " tasks");
  }
}

json to_json(const RunConfig& run) {
  json j = {{"epochs", run.epochs},
            {"batch_size", run.batch_size},
            {"lr_body", run.lr_body},
            {"lr_head", run.lr_head},
            {"seed", run.seed},
            {"task_type", to_string(run.task_type)},
            {"metric", to_string(run.metric)},
            {"max_grad_norm", run.max_grad_norm},
            {"precision", run.storage == StorageType::kF64 ? "f64" : "f32"}};
  j["stop_at_train_metric"] = optional_json(run.stop_at_train_metric);
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig r) {
  r.epochs = j.value("epochs", r.epochs);
  r.batch_size = j.value("batch_size", r.batch_size);
  r.lr_body = j.value("lr_body", r.lr_body);
  r.lr_head = j.value("lr_head", r.lr_head);
  r.seed = j.value("seed", r.seed);
  r.threads = j.value("threads", r.threads);
  r.max_grad_norm = j.value("max_grad_norm", r.max_grad_norm);
  if (j.contains("task_type")) r.task_type = parse_task_type(j["task_type"].get<std::string>());
  if (j.contains("metric")) r.metric = parse_metric(j["metric"].get<std::string>());
  if (j.contains("precision")) {
    const auto p = j["precision"].get<std::string>();
    if (p == "f64") r.storage = StorageType::kF64;
    else if (p == "f32") r.storage = StorageType::kF32;
    else throw ConfigError("precision must be f32 or f64");
  }
  if (j.contains("stop_at_train_metric") && !j["stop_at_train_metric"].is_null()) {
    r.stop_at_train_metric = j["stop_at_train_metric"].get<double>();
  }
  return r;
}

DatasetSplit split_by_tag(std::vector<Molecule> molecules) {
  DatasetSplit s;
  for (auto& m : molecules) {
    switch (m.split.value_or(Split::kTrain)) {
      case Split::kTrain: s.train.push_back(std::move(m)); break;
      case Split::kValid: s.valid.push_back(std::move(m)); break;
      case Split::kTest: s.test.push_back(std::move(m)); break;
    }
  }
  return s;
}

std::vector<std::string> collect_task_names(const std::vector<Molecule>& molecules) {
  std::set<std::string> names;
  for (const auto& m : molecules)
    for (const auto& [name, value] : m.labels) names.insert(name);
  return {names.begin(), names.end()};
}

std::vector<Sample> make_samples(const std::vector<Molecule>& molecules, const FeatureConfig& features,
                                 std::size_t threads) {
  std::vector<Sample> samples(molecules.size());
  parallel_for(molecules.size(), threads, [&](std::size_t i) { samples[i] = make_sample(molecules[i], features); });
  return samples;
}

LabeledSet make_labeled_set(const std::vector<Molecule>& molecules, const std::vector<std::string>& task_names,
                            const FeatureConfig& features, std::size_t threads) {
  LabeledSet set;
  set.samples = make_samples(molecules, features, threads);
  set.targets.assign(task_names.size(), std::vector<std::optional<double>>(molecules.size()));
  for (std::size_t t = 0; t < task_names.size(); ++t) {
    for (std::size_t i = 0; i < molecules.size(); ++i) {
      auto it = molecules[i].labels.find(task_names[t]);
      if (it != molecules[i].labels.end()) set.targets[t][i] = it->second;
    }
  }
  return set;
}

Checkpoint initial_checkpoint(const ModelConfig& model, const FeatureConfig& features, std::uint64_t seed) {
  validate(features);
  Checkpoint ckpt;
  ckpt.model = model;
  ckpt.features = features;
  GeoGnn(model, feature_layout(features)).init_params(ckpt.params, seed);
  return ckpt;
}

PretrainLossValue pretrain_eval_loss(const std::vector<Sample>& samples, const ParamStore& store,
                                     const GeoGnn& model, const TaskSelection& tasks, std::uint64_t seed,
                                     std::size_t threads) {
  std::vector<const Sample*> ptrs;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ptrs.push_back(&samples[i]);
    seeds.push_back(derive_seed(derive_seed(seed, kEvalMaskTag), i));
  }
  return loss_pre(ptrs, seeds, store, model, tasks, Mode::kEval, nullptr, threads);
}

PretrainResult pretrain(const std::vector<Sample>& train, const std::vector<Sample>& eval, Checkpoint ckpt,
                        const PretrainOptions& options) {
  const RunConfig& run = options.run;
  if (run.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(run.lr_body > 0.0) || !(run.lr_head > 0.0)) throw ConfigError("learning rates must be positive");
  const TaskSelection& tasks = options.tasks;
  if (!(tasks.mask_ratio > 0.0 && tasks.mask_ratio <= 1.0)) throw ConfigError("mask ratio must be in (0, 1]");
  if (train.empty()) throw DataError("pretraining corpus is empty");
  if (tasks.fingerprint && ckpt.model.fingerprint_bits > 0) {
    for (const auto& s : train) {
      if (s.fingerprint && s.fingerprint->size() != ckpt.model.fingerprint_bits) {
        throw DataError("molecule '" + s.id + "': fingerprint has " + std::to_string(s.fingerprint->size()) +
                        " bits, model expects " + std::to_string(ckpt.model.fingerprint_bits));
      }
    }
  }
  const GeoGnn model(ckpt.model, feature_layout(ckpt.features));
  const LearningRateFn lr = learning_rates(run);
  const AdamConfig adam = adam_config(run);

  std::filesystem::path ckpt_path, log_path;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    ckpt_path = *options.out_dir / "checkpoint.ckpt";
    log_path = *options.out_dir / "pretrain_log.jsonl";
    if (ckpt.epoch == 0) {
      std::filesystem::remove(log_path);
      ckpt.meta["stage"] = "pretrain";
      ckpt.meta["seed"] = run.seed;
      ckpt.meta["tasks"] = to_json(tasks);
      save_checkpoint(ckpt_path, ckpt, run.storage);
    }
  }

  PretrainResult result;
  for (std::size_t epoch = ckpt.epoch + 1; epoch <= run.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(run.seed, epoch);
    const auto order = shuffled_order(train.size(), derive_seed(epoch_seed, kShuffleTag));
    PretrainEpoch log;
    log.epoch = epoch;
    try {
      for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
        const std::size_t stop = std::min(order.size(), start + run.batch_size);
        std::vector<const Sample*> batch;
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = start; i < stop; ++i) {
          batch.push_back(&train[order[i]]);
          seeds.push_back(derive_seed(epoch_seed, order[i]));
        }
        GradBuffer grads(ckpt.params.size());
        const PretrainLossValue v = loss_pre(batch, seeds, ckpt.params, model, tasks, Mode::kTrain, &grads,
                                             run.threads);
        if (!std::isfinite(v.total)) throw NumericalError("non-finite pretraining loss");
        adam_step(ckpt.params, grads, lr, ckpt.adam_step + 1, adam);
        ++ckpt.adam_step;
        if (!ckpt.params.all_finite()) throw NumericalError("parameters diverged");
        const double w = static_cast<double>(stop - start) / static_cast<double>(order.size());
        log.train.total += w * v.total;
        log.train.length += w * v.length;
        log.train.angle += w * v.angle;
        log.train.distance += w * v.distance;
        log.train.fingerprint += w * v.fingerprint;
      }
      if (!eval.empty()) log.eval = pretrain_eval_loss(eval, ckpt.params, model, tasks, run.seed, run.threads);
    } catch (const NumericalError& e) {
      std::string msg = "pretraining diverged in epoch " + std::to_string(epoch) + ": " + e.what();
      if (options.out_dir) {
        msg += "; last good checkpoint (epoch " + std::to_string(epoch - 1) + ") kept at " + ckpt_path.string();
      }
      throw NumericalError(msg);
    }
    ckpt.epoch = epoch;
    if (options.out_dir) {
      save_checkpoint(ckpt_path, ckpt, run.storage);
      json line = {{"epoch", epoch}, {"train", to_json(log.train)}};
      line["eval"] = log.eval ? to_json(*log.eval) : json(nullptr);
      append_line(log_path, line.dump());
    }
    if (options.on_epoch) options.on_epoch(log);
    result.history.push_back(log);
  }
  result.checkpoint = std::move(ckpt);
  return result;
}

std::size_t select_best_epoch(const std::vector<double>& values, Metric metric) {
  if (values.empty()) throw std::invalid_argument("select_best_epoch: no values");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (improves(values[i], values[best], metric)) best = i;
  return best;
}

void round_to_storage(ParamStore& store, StorageType storage) {
  if (storage == StorageType::kF64) return;
  for (auto& p : store) {
    for (auto& v : p.value.values()) v = static_cast<double>(static_cast<float>(v));
    for (auto& v : p.moment1.values()) v = static_cast<double>(static_cast<float>(v));
    for (auto& v : p.moment2.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

FinetuneResult finetune(const std::vector<Molecule>& train, const std::vector<Molecule>& valid,
                        const std::vector<Molecule>& test, const std::optional<Checkpoint>& body,
                        const ModelConfig& model_config, const FeatureConfig& features,
                        const FinetuneOptions& options) {
  const RunConfig& run = options.run;
  validate(run);
  if (train.empty()) throw DataError("finetuning needs at least one training molecule");

  FinetuneResult result;
  auto has_label = [&](const std::string& name) {
    return std::any_of(train.begin(), train.end(), [&](const Molecule& m) {
      auto it = m.labels.find(name);
      return it != m.labels.end() && it->second.has_value();
    });
  };
  std::vector<std::string> names;
  if (!options.tasks.empty()) {
    for (const auto& name : options.tasks) {
      if (!has_label(name)) throw DataError("missing labels for requested task '" + name + "'");
      names.push_back(name);
    }
  } else {
    for (const auto& name : collect_task_names(train)) {
      if (has_label(name)) names.push_back(name);
      else result.warnings.push_back("task '" + name + "' has no training labels and was excluded");
    }
  }
  if (names.empty()) throw DataError("no task has any training label");
  result.task_names = names;

  Checkpoint ckpt;
  ckpt.features = body ? body->features : features;
  ckpt.model = body ? body->model : model_config;
  ckpt.model.dropout = model_config.dropout;
  ckpt.model.num_tasks = names.size();
  validate(ckpt.features);
  const GeoGnn model(ckpt.model, feature_layout(ckpt.features));
  if (body) {
    for (const auto& p : body->params)
      if (!GeoGnn::is_downstream_parameter(p.name)) ckpt.params.add(p.name, p.value);
  } else {
    ModelConfig no_head = ckpt.model;
    no_head.num_tasks = 0;
    GeoGnn(no_head, model.layout()).init_params(ckpt.params, run.seed);
  }
  model.add_downstream_head(ckpt.params, names.size(), derive_seed(run.seed, kHeadInitTag));
  ckpt.params.reset_moments();
  ckpt.meta = {{"stage", "finetune"},
               {"tasks", names},
               {"task_type", to_string(run.task_type)},
               {"seed", run.seed},
               {"pretrained", body.has_value()}};

  const LabeledSet train_set = make_labeled_set(train, names, ckpt.features, run.threads);
  const LabeledSet valid_set = make_labeled_set(valid, names, ckpt.features, run.threads);
  const LabeledSet test_set = make_labeled_set(test, names, ckpt.features, run.threads);
  if (run.task_type == TaskType::kClassification) {
    require_binary_labels(train_set, names);
    require_binary_labels(valid_set, names);
    require_binary_labels(test_set, names);
  }

  std::set<std::string> seen_warnings;
  auto score = [&](const ParamStore& store, const LabeledSet& set, bool required) -> std::optional<double> {
    if (set.samples.empty()) return std::nullopt;
    const Tensor preds = predict_store(model, store, set.samples, run.threads);
    try {
      MetricResult r = evaluate_metric(run.metric, preds, set.targets, names);
      for (auto& w : r.warnings)
        if (seen_warnings.insert(w).second) result.warnings.push_back(w);
      return r.value;
    } catch (const DataError& e) {
      if (required) throw;
      if (seen_warnings.insert(e.what()).second) result.warnings.push_back(e.what());
      return std::nullopt;
    }
  };

  const LearningRateFn lr = learning_rates(run);
  const AdamConfig adam = adam_config(run);
  ParamStore best_params = ckpt.params;
  std::optional<double> best_value;
  bool select_on_valid = !valid.empty();

  for (std::size_t epoch = 1; epoch <= run.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(run.seed, epoch);
    const auto order = shuffled_order(train_set.samples.size(), derive_seed(epoch_seed, kShuffleTag));
    FinetuneEpoch log;
    log.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
      const std::size_t stop = std::min(order.size(), start + run.batch_size);
      const std::size_t n = stop - start;
      std::vector<std::optional<double>> losses(n);
      std::vector<GradBuffer> per_mol(n);
      parallel_for(n, run.threads, [&](std::size_t k) {
        const std::size_t i = order[start + k];
        Tape tape;
        const auto loss = downstream_loss(tape, ckpt.params, model, train_set.samples[i], labels_of(train_set, i),
                                          run.task_type, Mode::kTrain, derive_seed(epoch_seed, i));
        if (!loss) return;
        losses[k] = loss->value().item();
        tape.backward(*loss);
        per_mol[k] = tape.parameter_gradients(ckpt.params);
      });
      const auto labelled = static_cast<std::size_t>(std::count_if(losses.begin(), losses.end(),
                                                                   [](const auto& v) { return v.has_value(); }));
      if (labelled == 0) continue;
      GradBuffer grads(ckpt.params.size());
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (!losses[k]) continue;
        batch_loss += *losses[k] / static_cast<double>(labelled);
        accumulate(grads, per_mol[k], 1.0 / static_cast<double>(labelled));
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite finetuning loss in epoch " + std::to_string(epoch));
      }
      adam_step(ckpt.params, grads, lr, ckpt.adam_step + 1, adam);
      ++ckpt.adam_step;
      log.loss += batch_loss * static_cast<double>(n) / static_cast<double>(order.size());
    }
    ckpt.epoch = epoch;

    log.train = *score(ckpt.params, train_set, true);
    log.valid = score(ckpt.params, valid_set, false);
    log.test = score(ckpt.params, test_set, false);
    if (select_on_valid && !log.valid) {
      select_on_valid = false;
      best_value.reset();
      result.warnings.push_back("validation metric unavailable; selecting on the train metric");
    }
    const double selection = select_on_valid ? *log.valid : log.train;
    if (!best_value || improves(selection, *best_value, run.metric)) {
      best_value = selection;
      best_params = ckpt.params;
      result.selected_epoch = epoch;
      result.best.epoch = epoch;
      result.best.adam_step = ckpt.adam_step;
    }
    if (options.on_epoch) options.on_epoch(log);
    result.history.push_back(log);
    if (run.stop_at_train_metric && reaches(log.train, *run.stop_at_train_metric, run.metric)) break;
  }
  result.best.model = ckpt.model;
  result.best.features = ckpt.features;
  result.best.meta = ckpt.meta;
  result.best.params = std::move(best_params);
  round_to_storage(result.best.params, run.storage);
  result.test_metric = score(result.best.params, test_set, false);

  json epochs = json::array();
  for (const auto& h : result.history) {
    epochs.push_back({{"epoch", h.epoch},
                      {"loss", h.loss},
                      {"train", h.train},
                      {"valid", optional_json(h.valid)},
                      {"test", optional_json(h.test)}});
  }
  json report = {{"stage", "finetune"},
                 {"seed", run.seed},
                 {"metric", to_string(run.metric)},
                 {"task_type", to_string(run.task_type)},
                 {"tasks", names},
                 {"pretrained", body.has_value()},
                 {"config", {{"run", to_json(run)}, {"model", to_json(ckpt.model)}, {"features", to_json(ckpt.features)}}},
                 {"num_molecules", {{"train", train.size()}, {"valid", valid.size()}, {"test", test.size()}}},
                 {"epochs", epochs},
                 {"selected_epoch", result.selected_epoch},
                 {"selection_split", select_on_valid ? "valid" : "train"},
                 {"warnings", result.warnings}};
  report["test_metric"] = optional_json(result.test_metric);
  result.report = report;

  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    save_checkpoint(*options.out_dir / "best.ckpt", result.best, run.storage);
    write_file_atomic(*options.out_dir / "report.json", report.dump(2) + "\n");
  }
  return result;
}

Tensor predict(const Checkpoint& ckpt, const std::vector<Sample>& samples, std::size_t threads) {
  const GeoGnn model(ckpt.model, feature_layout(ckpt.features));
  return predict_store(model, ckpt.params, samples, threads);
}

EvaluateResult evaluate(const Checkpoint& ckpt, const std::vector<Molecule>& molecules, Metric metric,
                        std::size_t threads) {
  if (!ckpt.meta.contains("tasks") || !ckpt.meta.contains("task_type") || ckpt.model.num_tasks == 0) {
    throw ConfigError("checkpoint has no downstream head; finetune it first");
  }
  const auto names = ckpt.meta["tasks"].get<std::vector<std::string>>();
  const TaskType type = parse_task_type(ckpt.meta["task_type"].get<std::string>());
  if ((metric == Metric::kRocAuc) != (type == TaskType::kClassification)) {
    throw ConfigError("metric " + to_string(metric) + " does not apply to the checkpoint's " + to_string(type) +
                      " tasks");
  }
  if (molecules.empty()) throw DataError("no molecules to evaluate");
  const LabeledSet set = make_labeled_set(molecules, names, ckpt.features, threads);
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (std::none_of(set.targets[t].begin(), set.targets[t].end(), [](const auto& v) { return v.has_value(); })) {
      throw DataError("missing labels for task '" + names[t] + "'");
    }
  }
  if (type == TaskType::kClassification) require_binary_labels(set, names);

  EvaluateResult result;
  result.task_names = names;
  result.metric = evaluate_metric(metric, predict(ckpt, set.samples, threads), set.targets, names);
  json per_task = json::object();
  for (std::size_t t = 0; t < names.size(); ++t) {
    const double v = result.metric.per_task[t];
    per_task[names[t]] = std::isnan(v) ? json(nullptr) : json(v);
  }
  result.report = {{"metric", to_string(metric)},
                   {"value", result.metric.value},
                   {"per_task", per_task},
                   {"num_molecules", molecules.size()},
                   {"warnings", result.metric.warnings}};
  return result;
}

std::vector<std::vector<double>> embed(const Checkpoint& ckpt, const std::vector<Sample>& samples,
                                       std::size_t threads) {
  const GeoGnn model(ckpt.model, feature_layout(ckpt.features));
  std::vector<std::vector<double>> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    Tape tape;
    const GraphEmbedding emb = model.forward(tape, ckpt.params, samples[i].graph, samples[i].encoded, Mode::kEval);
    const auto values = emb.graph.value().values();
    out[i].assign(values.begin(), values.end());
  });
  return out;
}

}  // namespace geognn
