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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "geognn/checkpoint.hpp"
#include "geognn/errors.hpp"
#include "geognn/metrics.hpp"
#include "geognn/optimizer.hpp"
#include "geognn/rng.hpp"
#include "geognn/synthetic.hpp"
#include "geognn/trainer.hpp"
#include "test_util.hpp"

namespace geognn {
namespace {

namespace fs = std::filesystem;
using testing::small_model;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("geognn_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::optional<double>> opt(std::initializer_list<double> v) {
  return {v.begin(), v.end()};
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  ParamStore store;
  Rng rng(1);
  store.add_uniform("w", 3, 4, rng);
  const Tensor before = store[0].value;
  for (std::uint64_t t = 1; t <= 5; ++t) adam_step(store, store.zero_grads(), 0.01, t);
  EXPECT_EQ(store[0].value, before);
}

TEST(Adam, EmptySlotIsSkipped) {
  ParamStore store;
  store.add("a", Tensor::scalar(1.0));
  store.add("b", Tensor::scalar(1.0));
  GradBuffer g(2);
  g[0] = Tensor::scalar(0.5);
  adam_step(store, g, 0.1, 1);
  EXPECT_NE(store[0].value.item(), 1.0);
  EXPECT_EQ(store[1].value.item(), 1.0);
  EXPECT_EQ(store[1].moment1.item(), 0.0);
}

TEST(Adam, FirstStepClosedForm) {
  for (double g : {0.5, -2.0, 1e-3}) {
    ParamStore store;
    store.add("x", Tensor::scalar(1.0));
    GradBuffer grads{Tensor::scalar(g)};
    adam_step(store, grads, 0.1, 1);
    // m_hat = g and v_hat = g^2 after bias correction.
    const double expected = 1.0 - 0.1 * g / (std::abs(g) + 1e-8);
    EXPECT_NEAR(store[0].value.item(), expected, 1e-15);
    EXPECT_NEAR(store[0].value.item(), 1.0 - 0.1 * (g > 0 ? 1 : -1), 1e-5);
  }
}

TEST(Adam, QuadraticMatchesReferenceSimulation) {
  ParamStore store;
  store.add("x", Tensor::scalar(1.0));
  double x = 1.0, m = 0.0, v = 0.0;
  for (std::uint64_t t = 1; t <= 100; ++t) {
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double vh = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    GradBuffer grads{Tensor::scalar(2.0 * store[0].value.item())};
    adam_step(store, grads, 0.1, t);
  }
  EXPECT_LT(std::abs(x), 0.1);
  EXPECT_NEAR(store[0].value.item(), x, 1e-12);
}

TEST(Adam, NonFiniteGradientRejectedBeforeUpdate) {
  ParamStore store;
  store.add("x", Tensor::scalar(1.0));
  store.add("y", Tensor::scalar(1.0));
  GradBuffer grads{Tensor::scalar(1.0), Tensor::scalar(NAN)};
  EXPECT_THROW(adam_step(store, grads, 0.1, 1), NumericalError);
  EXPECT_EQ(store[0].value.item(), 1.0);
}

TEST(Adam, GradientClipping) {
  GradBuffer g{Tensor::row({3.0, 4.0})};
  EXPECT_DOUBLE_EQ(global_grad_norm(g), 5.0);
}

TEST(Metrics, RegressionFormulas) {
  const std::vector<double> zeros{0, 0};
  EXPECT_DOUBLE_EQ(metric_rmse(zeros, opt({3, 4})), std::sqrt(12.5));
  EXPECT_DOUBLE_EQ(metric_mae(zeros, opt({3, 4})), 3.5);
  const std::vector<double> same{1.5, -2};
  EXPECT_EQ(metric_rmse(same, opt({1.5, -2})), 0.0);
  const std::vector<double> one{2};
  EXPECT_EQ(metric_rmse(one, opt({0})), 2.0);
  EXPECT_EQ(metric_mae(one, opt({0})), 2.0);
  const std::vector<std::optional<double>> missing{std::nullopt, 4.0};
  EXPECT_DOUBLE_EQ(metric_rmse(zeros, missing), 4.0);
  const std::vector<std::optional<double>> none{std::nullopt, std::nullopt};
  EXPECT_THROW(metric_rmse(zeros, none), DataError);
}

TEST(Metrics, RegressionMatchesDirectFormulaOnRandomData) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> p(n);
    std::vector<std::optional<double>> t(n);
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.normal();
      const double y = rng.normal();
      t[i] = y;
      se += (p[i] - y) * (p[i] - y);
      ae += std::abs(p[i] - y);
    }
    EXPECT_NEAR(metric_rmse(p, t), std::sqrt(se / static_cast<double>(n)), 1e-12);
    EXPECT_NEAR(metric_mae(p, t), ae / static_cast<double>(n), 1e-12);
  }
}

TEST(Metrics, RocAucExamples) {
  const std::vector<double> s{0.9, 0.8, 0.3};
  EXPECT_EQ(*metric_rocauc(s, std::vector<int>{1, 1, 0}), 1.0);
  EXPECT_EQ(*metric_rocauc(s, std::vector<int>{1, 0, 1}), 0.5);
  const std::vector<double> tied(6, 0.4);
  EXPECT_EQ(*metric_rocauc(tied, std::vector<int>{1, 0, 1, 0, 0, 1}), 0.5);
  EXPECT_FALSE(metric_rocauc(s, std::vector<int>{1, 1, 1}).has_value());
}

TEST(Metrics, RocAucEqualsPairCounting) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = coarse ? static_cast<double>(rng.below(5)) : rng.uniform();
      labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    std::int64_t twice_wins = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg)++;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (!labels[i] || labels[j]) continue;
        twice_wins += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
      }
    const double expected = static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos * neg));
    EXPECT_EQ(*metric_rocauc(scores, labels), expected) << "trial " << trial;
  }
}

TEST(Metrics, MultiTaskAveragesScorableTasks) {
  Tensor preds = Tensor::from_rows({{0.9, 0.1}, {0.2, 0.3}, {0.8, 0.5}});
  std::vector<std::vector<std::optional<double>>> targets{opt({1, 0, 1}), opt({1, 1, 1})};
  const std::vector<std::string> names{"a", "b"};
  const MetricResult r = evaluate_metric(Metric::kRocAuc, preds, targets, names);
  EXPECT_EQ(r.value, 1.0);
  EXPECT_TRUE(std::isnan(r.per_task[1]));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("b"), std::string::npos);

  std::vector<std::vector<std::optional<double>>> single{opt({1, 1, 1}), opt({0, 0, 0})};
  EXPECT_THROW(evaluate_metric(Metric::kRocAuc, preds, single, names), DataError);

  const MetricResult mae = evaluate_metric(Metric::kMae, preds, {opt({1, 0, 1}), opt({0, 0, 0})}, names);
  EXPECT_NEAR(mae.value, 0.5 * ((0.1 + 0.2 + 0.2) / 3 + (0.1 + 0.3 + 0.5) / 3), 1e-15);
}

TEST(Selection, BestEpoch) {
  EXPECT_EQ(select_best_epoch({0.9, 0.7, 0.8}, Metric::kRmse), 1u);
  EXPECT_EQ(select_best_epoch({0.7, 0.9, 0.7}, Metric::kMae), 0u);
  EXPECT_EQ(select_best_epoch({0.6, 0.9, 0.9}, Metric::kRocAuc), 1u);
}

TEST(RunConfig, MetricMustFitTaskType) {
  RunConfig r;
  r.task_type = TaskType::kRegression;
  r.metric = Metric::kRocAuc;
  EXPECT_THROW(validate(r), ConfigError);
  r.task_type = TaskType::kClassification;
  EXPECT_NO_THROW(validate(r));
  r.metric = Metric::kRmse;
  EXPECT_THROW(validate(r), ConfigError);
  RunConfig zero;
  zero.batch_size = 0;
  EXPECT_THROW(validate(zero), ConfigError);
  const RunConfig back = run_config_from_json(to_json(RunConfig{}));
  EXPECT_EQ(to_json(back), to_json(RunConfig{}));
}

TEST(Dataset, SplitByTag) {
  auto mols = testing::random_molecules(5, 1, 2, 4);
  mols[1].split = Split::kValid;
  mols[2].split = Split::kTest;
  mols[3].split = Split::kTrain;
  const DatasetSplit s = split_by_tag(mols);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.valid.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

RunConfig quick_run(std::size_t epochs, std::uint64_t seed = 1) {
  RunConfig r;
  r.epochs = epochs;
  r.batch_size = 4;
  r.seed = seed;
  return r;
}

std::vector<Sample> samples_of(const std::vector<Molecule>& mols) { return make_samples(mols, FeatureConfig{}); }

TEST(Pretrain, ZeroEpochsKeepsInitialization) {
  const Checkpoint init = initial_checkpoint(small_model(), {}, 5);
  PretrainOptions o;
  o.run = quick_run(0);
  const PretrainResult r = pretrain(samples_of(testing::random_molecules(4, 2, 3, 6)), {}, init, o);
  EXPECT_TRUE(r.history.empty());
  ASSERT_EQ(r.checkpoint.params.size(), init.params.size());
  for (std::size_t i = 0; i < init.params.size(); ++i) EXPECT_EQ(r.checkpoint.params[i].value, init.params[i].value);
}

TEST(Pretrain, ResumeReplaysTheSameTrajectory) {
  const auto train = samples_of(testing::random_molecules(10, 3, 3, 7));
  const auto eval = samples_of(testing::random_molecules(3, 4, 3, 7));
  const Checkpoint init = initial_checkpoint(small_model(), {}, 6);
  PretrainOptions full;
  full.run = quick_run(3, 11);
  const PretrainResult straight = pretrain(train, eval, init, full);

  const fs::path dir = temp_dir("resume");
  PretrainOptions first = full;
  first.run.epochs = 2;
  first.out_dir = dir;
  pretrain(train, eval, init, first);
  const Checkpoint mid = load_checkpoint(dir / "checkpoint.ckpt");
  EXPECT_EQ(mid.epoch, 2u);
  const PretrainResult resumed = pretrain(train, eval, mid, full);
  ASSERT_EQ(resumed.history.size(), 1u);
  EXPECT_EQ(resumed.history[0].epoch, 3u);
  EXPECT_EQ(resumed.history[0].train.total, straight.history[2].train.total);
  EXPECT_EQ(resumed.history[0].eval->total, straight.history[2].eval->total);
  for (std::size_t i = 0; i < init.params.size(); ++i)
    EXPECT_EQ(resumed.checkpoint.params[i].value, straight.checkpoint.params[i].value);
  EXPECT_TRUE(fs::exists(dir / "pretrain_log.jsonl"));
}

TEST(Pretrain, DivergenceKeepsLastGoodCheckpoint) {
  const auto train = samples_of(testing::random_molecules(4, 5, 3, 6));
  const fs::path dir = temp_dir("diverge");
  PretrainOptions o;
  o.run = quick_run(5);
  o.run.batch_size = 4;
  o.run.lr_body = o.run.lr_head = 1e300;
  o.out_dir = dir;
  EXPECT_THROW(pretrain(train, {}, initial_checkpoint(small_model(), {}, 7), o), NumericalError);
  const Checkpoint kept = load_checkpoint(dir / "checkpoint.ckpt");
  EXPECT_TRUE(kept.params.all_finite());
  EXPECT_LT(kept.epoch, 5u);
}

std::vector<Molecule> labeled(std::size_t n, std::uint64_t seed) {
  auto mols = testing::random_molecules(n, seed, 3, 8);
  attach_geometry_label(mols, "y");
  for (std::size_t i = 0; i < mols.size(); ++i) mols[i].split = static_cast<Split>(i % 3);
  return mols;
}

TEST(Finetune, SelectsBestValidEpochAndReportsItsTestMetric) {
  const DatasetSplit s = split_by_tag(labeled(24, 8));
  FinetuneOptions o;
  o.run = quick_run(6);
  const FinetuneResult r = finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o);
  ASSERT_EQ(r.history.size(), 6u);
  std::vector<double> valid;
  for (const auto& e : r.history) valid.push_back(*e.valid);
  const std::size_t best = select_best_epoch(valid, Metric::kRmse);
  EXPECT_EQ(r.selected_epoch, best + 1);
  EXPECT_EQ(*r.test_metric, *r.history[best].test);
  EXPECT_EQ(r.report["selected_epoch"], best + 1);
  EXPECT_EQ(r.report["test_metric"].get<double>(), *r.test_metric);

  const EvaluateResult ev = evaluate(r.best, s.test, Metric::kRmse);
  EXPECT_EQ(ev.metric.value, *r.test_metric);
}

TEST(Finetune, PretrainedBodyIsCopiedAndHeadIsFresh) {
  const DatasetSplit s = split_by_tag(labeled(12, 9));
  Checkpoint body = initial_checkpoint(small_model(), {}, 10);
  FinetuneOptions o;
  o.run = quick_run(1);
  o.run.lr_body = o.run.lr_head = 1e-12;
  const FinetuneResult r = finetune(s.train, s.valid, s.test, body, small_model(), {}, o);
  for (const Parameter& p : body.params) {
    if (GeoGnn::is_head_parameter(p.name)) continue;
    EXPECT_LT(max_abs_diff(p.value, r.best.params.at(p.name).value), 1e-9) << p.name;
  }
  EXPECT_TRUE(r.best.params.contains("head.down.2.w"));
  EXPECT_EQ(r.best.meta["pretrained"], true);
}

TEST(Finetune, MissingLabels) {
  auto mols = labeled(12, 10);
  for (auto& m : mols) m.labels["empty"] = std::nullopt;
  const DatasetSplit s = split_by_tag(mols);
  FinetuneOptions o;
  o.run = quick_run(1);
  const FinetuneResult r = finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o);
  EXPECT_EQ(r.task_names, std::vector<std::string>{"y"});
  EXPECT_FALSE(r.warnings.empty());

  o.tasks = {"absent"};
  EXPECT_THROW(finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o), DataError);
}

TEST(Finetune, ClassificationNeedsBinaryLabels) {
  const DatasetSplit s = split_by_tag(labeled(12, 11));
  FinetuneOptions o;
  o.run = quick_run(1);
  o.run.task_type = TaskType::kClassification;
  o.run.metric = Metric::kRocAuc;
  EXPECT_THROW(finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o), ConfigError);
}

TEST(Finetune, ClassificationLearnsSeparableLabel) {
  auto mols = testing::random_molecules(30, 12, 3, 8);
  for (auto& m : mols) {
    const bool has_nitrogen =
        std::any_of(m.atoms.begin(), m.atoms.end(), [](const Atom& a) { return a.atomic_number == 7; });
    m.labels["n"] = has_nitrogen ? 1.0 : 0.0;
  }
  FinetuneOptions o;
  o.run = quick_run(60);
  o.run.task_type = TaskType::kClassification;
  o.run.metric = Metric::kRocAuc;
  o.run.lr_body = o.run.lr_head = 3e-3;
  o.run.stop_at_train_metric = 1.0;
  const FinetuneResult r = finetune(mols, {}, {}, std::nullopt, small_model(2, 16), {}, o);
  EXPECT_EQ(r.history.back().train, 1.0);
  EXPECT_EQ(evaluate(r.best, mols, Metric::kRocAuc).metric.value, r.history[r.selected_epoch - 1].train);
  EXPECT_THROW(evaluate(r.best, mols, Metric::kRmse), ConfigError);
}

TEST(Finetune, ReportIsReproducible) {
  const DatasetSplit s = split_by_tag(labeled(12, 13));
  FinetuneOptions o;
  o.run = quick_run(3);
  const FinetuneResult a = finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o);
  o.run.threads = 3;
  const FinetuneResult b = finetune(s.train, s.valid, s.test, std::nullopt, small_model(), {}, o);
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Embed, PermutedDuplicateGivesSameVector) {
  const Checkpoint ckpt = initial_checkpoint(ModelConfig{}, {}, 14);
  Rng rng(15);
  const auto mols = testing::random_molecules(5, 16, 3, 9);
  std::vector<Molecule> both = mols;
  for (const auto& m : mols) both.push_back(permute_atoms(m, random_permutation(m.num_atoms(), rng)));
  const auto vectors = embed(ckpt, samples_of(both));
  for (std::size_t i = 0; i < mols.size(); ++i)
    EXPECT_LT(testing::max_abs_diff(vectors[i], vectors[i + mols.size()]), 1e-9);
}

}  // namespace
}  // namespace geognn
