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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geognn/checkpoint.hpp"
#include "geognn/errors.hpp"
#include "geognn/mol_io.hpp"
#include "geognn/rng.hpp"
#include "geognn/synthetic.hpp"
#include "geognn/trainer.hpp"

namespace geognn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
  std::string config;
  std::vector<std::string> inputs;
  std::vector<std::string> eval_inputs;
  std::string out;
  std::uint64_t seed = 0;
  std::string precision = "f64";
  bool strict = false;
  std::size_t threads = 1;
  std::string tasks;
  double mask_ratio = 0.15;
  std::size_t epochs = 0;
  std::size_t batch = 0;
  double lr_body = 0.0;
  double lr_head = 0.0;
  std::string metric;
  std::string task_type;
  std::string checkpoint;
  std::string resume;
  std::string labels;
  std::string split = "all";
  std::size_t count = 100;
  std::string label_name;
  std::size_t fingerprint_bits = 0;
  std::string split_fractions;
  std::size_t min_atoms = 4;
  std::size_t max_atoms = 10;

  std::multimap<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    const auto [lo, hi] = opts.equal_range(name);
    return std::any_of(lo, hi, [](const auto& kv) { return kv.second->count() > 0; });
  }
};

struct Settings {
  ModelConfig model;
  FeatureConfig features;
  TaskSelection tasks;
  RunConfig run;
  bool features_from_config = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

Settings resolve_settings(const Args& a) {
  Settings s;
  if (!a.config.empty()) {
    const json j = read_json_file(a.config);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "model" && key != "features" && key != "pretrain" && key != "run") {
        throw ConfigError("unknown config section '" + key + "' (expected model, features, pretrain, run)");
      }
    }
    try {
      if (j.contains("model")) s.model = model_config_from_json(j["model"]);
      if (j.contains("features")) {
        s.features = feature_config_from_json(j["features"]);
        s.features_from_config = true;
      }
      if (j.contains("pretrain")) {
        s.tasks = task_selection_from_json(j["pretrain"]);
        if (j["pretrain"].contains("distance_bins")) s.model.distance_bins = j["pretrain"]["distance_bins"];
      }
      if (j.contains("run")) s.run = run_config_from_json(j["run"]);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid config value: ") + e.what());
    }
  }
  if (a.given("--seed")) s.run.seed = a.seed;
  if (a.given("--threads")) s.run.threads = std::max<std::size_t>(1, a.threads);
  if (a.given("--precision")) s.run.storage = a.precision == "f32" ? StorageType::kF32 : StorageType::kF64;
  if (a.given("--tasks")) s.tasks = parse_task_list(a.tasks, s.tasks);
  if (a.given("--mask-ratio")) s.tasks.mask_ratio = a.mask_ratio;
  if (a.given("--epochs")) s.run.epochs = a.epochs;
  if (a.given("--batch")) s.run.batch_size = a.batch;
  if (a.given("--lr-body")) s.run.lr_body = a.lr_body;
  if (a.given("--lr-head")) s.run.lr_head = a.lr_head;
  if (a.given("--task-type")) s.run.task_type = parse_task_type(a.task_type);
  if (a.given("--metric")) {
    s.run.metric = parse_metric(a.metric);
    if (!a.given("--task-type")) {
      s.run.task_type = s.run.metric == Metric::kRocAuc ? TaskType::kClassification : TaskType::kRegression;
    }
  } else if (a.given("--task-type")) {
    s.run.metric = s.run.task_type == TaskType::kClassification ? Metric::kRocAuc : Metric::kRmse;
  }
  validate(s.model);
  validate(s.features);
  return s;
}

std::vector<Molecule> load_inputs(const std::vector<std::string>& paths, bool strict) {
  std::vector<Molecule> all;
  for (const auto& p : paths) {
    ReadResult r = read_molecules(p, strict);
    for (const auto& e : r.errors) std::cerr << "warning: " << p << ": " << e.what() << " (record skipped)\n";
    for (auto& m : r.molecules) all.push_back(std::move(m));
  }
  return all;
}

// Drops molecules whose dual graph cannot be built (for example coincident
// bonded atoms) unless strict.
std::vector<Molecule> buildable(std::vector<Molecule> mols, const FeatureConfig& features, bool strict,
                                std::vector<Sample>* samples) {
  std::vector<Molecule> kept;
  for (auto& m : mols) {
    try {
      Sample s = make_sample(m, features);
      if (samples) samples->push_back(std::move(s));
      kept.push_back(std::move(m));
    } catch (const DataError& e) {
      if (strict) throw;
      std::cerr << "warning: molecule '" << m.id << "': " << e.what() << " (skipped)\n";
    }
  }
  return kept;
}

void check_checkpoint_features(const Settings& s, const Checkpoint& ckpt) {
  if (s.features_from_config) {
    require_compatible_manifest(feature_manifest(ckpt.features), feature_manifest(s.features));
  }
}

json histogram(const std::vector<std::size_t>& values) {
  std::map<std::size_t, std::size_t> h;
  for (auto v : values) ++h[v];
  json out = json::object();
  for (auto [k, n] : h) out[std::to_string(k)] = n;
  return {{"total", std::accumulate(values.begin(), values.end(), std::size_t{0})}, {"histogram", out}};
}

fs::path require_out(const Args& a) {
  if (a.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(a.out);
  return a.out;
}

int cmd_featurize(const Args& a) {
  const Settings s = resolve_settings(a);
  const fs::path out = require_out(a);
  std::vector<Sample> samples;
  const auto mols = buildable(load_inputs(a.inputs, a.strict), s.features, a.strict, &samples);
  save_feature_bundle(out / "features.gef", s.features, samples);
  std::vector<std::size_t> atoms, bonds, angles;
  for (const auto& smp : samples) {
    atoms.push_back(smp.graph.num_atoms);
    bonds.push_back(smp.graph.num_bonds());
    angles.push_back(smp.graph.num_angles());
  }
  const FeatureLayout layout = feature_layout(s.features);
  json summary = {{"molecules", samples.size()},
                  {"atoms", histogram(atoms)},
                  {"bonds", histogram(bonds)},
                  {"angles", histogram(angles)},
                  {"feature_widths",
                   {{"atom", layout.atom_width()}, {"bond", layout.bond_width()}, {"angle", layout.angle_width()}}},
                  {"manifest", feature_manifest(s.features)}};
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  std::cout << "featurized " << samples.size() << " molecules into " << (out / "features.gef").string() << "\n";
  return 0;
}

int cmd_pretrain(const Args& a) {
  Settings s = resolve_settings(a);
  const fs::path out = require_out(a);
  auto mols = load_inputs(a.inputs, a.strict);
  std::vector<Molecule> train_mols, eval_mols;
  for (auto& m : mols) {
    if (m.split && *m.split != Split::kTrain) eval_mols.push_back(std::move(m));
    else train_mols.push_back(std::move(m));
  }
  for (auto& m : load_inputs(a.eval_inputs, a.strict)) eval_mols.push_back(std::move(m));

  Checkpoint ckpt;
  if (!a.resume.empty()) {
    ckpt = load_checkpoint(a.resume);
    check_checkpoint_features(s, ckpt);
    s.features = ckpt.features;
  } else {
    if (s.tasks.fingerprint) {
      for (const auto& m : train_mols) {
        if (!m.fingerprint) continue;
        if (s.model.fingerprint_bits == 0) s.model.fingerprint_bits = m.fingerprint->size();
        if (m.fingerprint->size() != s.model.fingerprint_bits) {
          throw DataError("molecule '" + m.id + "': fingerprint width " + std::to_string(m.fingerprint->size()) +
                          " differs from " + std::to_string(s.model.fingerprint_bits));
        }
      }
    }
    ckpt = initial_checkpoint(s.model, s.features, s.run.seed);
  }
  std::vector<Sample> train, eval;
  buildable(std::move(train_mols), s.features, a.strict, &train);
  buildable(std::move(eval_mols), s.features, a.strict, &eval);

  PretrainOptions opts;
  opts.run = s.run;
  opts.tasks = s.tasks;
  opts.out_dir = out;
  const std::size_t total = s.run.epochs;
  opts.on_epoch = [total](const PretrainEpoch& e) {
    std::fprintf(stderr, "epoch %zu/%zu  loss %.6f  length %.6f  angle %.6f  distance %.6f  fingerprint %.6f",
                 e.epoch, total, e.train.total, e.train.length, e.train.angle, e.train.distance,
                 e.train.fingerprint);
    if (e.eval) std::fprintf(stderr, "  eval %.6f", e.eval->total);
    std::fprintf(stderr, "\n");
  };
  const PretrainResult r = pretrain(train, eval, std::move(ckpt), opts);
  std::cout << "pretrained " << r.history.size() << " epochs on " << train.size() << " molecules; checkpoint "
            << (out / "checkpoint.ckpt").string() << "\n";
  return 0;
}

int cmd_finetune(const Args& a) {
  const Settings s = resolve_settings(a);
  const fs::path out = require_out(a);
  std::optional<Checkpoint> body;
  if (!a.checkpoint.empty()) {
    body = load_checkpoint(a.checkpoint);
    check_checkpoint_features(s, *body);
  }
  const FeatureConfig features = body ? body->features : s.features;
  DatasetSplit split = split_by_tag(buildable(load_inputs(a.inputs, a.strict), features, a.strict, nullptr));

  FinetuneOptions opts;
  opts.run = s.run;
  opts.out_dir = out;
  opts.tasks = split_list(a.labels);
  const Metric metric = s.run.metric;
  opts.on_epoch = [metric](const FinetuneEpoch& e) {
    std::fprintf(stderr, "epoch %zu  loss %.6f  train %s %.6f", e.epoch, e.loss, to_string(metric).c_str(), e.train);
    if (e.valid) std::fprintf(stderr, "  valid %.6f", *e.valid);
    if (e.test) std::fprintf(stderr, "  test %.6f", *e.test);
    std::fprintf(stderr, "\n");
  };
  const FinetuneResult r = finetune(split.train, split.valid, split.test, body, s.model, features, opts);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "selected epoch " << r.selected_epoch;
  if (r.test_metric) std::cout << "; test " << to_string(metric) << " " << json(*r.test_metric).dump();
  std::cout << "\n";
  return 0;
}

std::vector<Molecule> filter_split(std::vector<Molecule> mols, const std::string& split) {
  if (split == "all") return mols;
  const auto want = parse_split(split);
  if (!want) throw ConfigError("--split must be train, valid, test or all");
  std::vector<Molecule> out;
  for (auto& m : mols)
    if (m.split.value_or(Split::kTrain) == *want) out.push_back(std::move(m));
  return out;
}

int cmd_evaluate(const Args& a) {
  const Settings s = resolve_settings(a);
  if (a.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  check_checkpoint_features(s, ckpt);
  Metric metric;
  if (a.given("--metric")) {
    metric = s.run.metric;
  } else {
    const std::string type = ckpt.meta.value("task_type", "regression");
    metric = type == "classification" ? Metric::kRocAuc : Metric::kRmse;
  }
  const auto mols =
      filter_split(buildable(load_inputs(a.inputs, a.strict), ckpt.features, a.strict, nullptr), a.split);
  EvaluateResult r = evaluate(ckpt, mols, metric, s.run.threads);
  r.report["split"] = a.split;
  for (const auto& w : r.metric.warnings) std::cerr << "warning: " << w << "\n";
  const std::string text = r.report.dump(2) + "\n";
  if (!a.out.empty()) write_file_atomic(require_out(a) / "evaluation.json", text);
  std::cout << text;
  return 0;
}

int cmd_embed(const Args& a) {
  const Settings s = resolve_settings(a);
  if (a.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const fs::path out = require_out(a);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  check_checkpoint_features(s, ckpt);
  std::vector<Sample> samples;
  buildable(load_inputs(a.inputs, a.strict), ckpt.features, a.strict, &samples);
  const auto vectors = embed(ckpt, samples, s.run.threads);
  std::string text;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    text += json{{"id", samples[i].id}, {"h_G", vectors[i]}}.dump();
    text += '\n';
  }
  write_file_atomic(out / "embeddings.jsonl", text);
  std::cout << "embedded " << samples.size() << " molecules into " << (out / "embeddings.jsonl").string() << "\n";
  return 0;
}

int cmd_generate(const Args& a) {
  if (a.out.empty()) throw ConfigError("--out is required");
  SyntheticOptions opts;
  opts.min_atoms = a.min_atoms;
  opts.max_atoms = a.max_atoms;
  opts.fingerprint_bits = a.fingerprint_bits;
  auto mols = generate_molecules(a.count, a.seed, opts);
  if (!a.label_name.empty()) attach_geometry_label(mols, a.label_name);
  if (!a.split_fractions.empty()) {
    const auto parts = split_list(a.split_fractions);
    if (parts.size() != 3) throw ConfigError("--splits needs three comma-separated fractions");
    double f[3];
    for (int i = 0; i < 3; ++i) f[i] = std::stod(parts[static_cast<std::size_t>(i)]);
    const double sum = f[0] + f[1] + f[2];
    if (!(sum > 0.0) || f[0] < 0 || f[1] < 0 || f[2] < 0) throw ConfigError("--splits fractions must be >= 0");
    Rng rng(derive_seed(a.seed, 0x5b));
    const auto perm = random_permutation(mols.size(), rng);
    const double n = static_cast<double>(mols.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * f[0] / sum));
    const auto n_valid = static_cast<std::size_t>(std::llround(n * f[1] / sum));
    for (std::size_t i = 0; i < mols.size(); ++i) {
      const std::size_t rank = perm[i];
      mols[i].split = rank < n_train ? Split::kTrain : rank < n_train + n_valid ? Split::kValid : Split::kTest;
    }
  }
  const fs::path out = a.out;
  const std::string text = format_for_path(out) == MoleculeFormat::kSdf ? write_sdf(mols) : write_jsonl(mols);
  write_file_atomic(out, text);
  std::cout << "wrote " << mols.size() << " molecules to " << out.string() << "\n";
  return 0;
}

void add_common(CLI::App* sub, Args& a) {
  a.opts.emplace("--config", sub->add_option("--config", a.config, "JSON config (sections: model, features, pretrain, run)")
      ->check(CLI::ExistingFile));
  a.opts.emplace("--seed", sub->add_option("--seed", a.seed, "Random seed"));
  a.opts.emplace("--threads", sub->add_option("--threads", a.threads, "Worker threads for per-molecule fan-out"));
  a.opts.emplace("--strict", sub->add_flag("--strict", a.strict, "Abort on the first malformed record"));
}

void add_inputs(CLI::App* sub, Args& a) {
  a.opts.emplace("--input", sub->add_option("--input", a.inputs, "Molecule files (.sdf or .jsonl)")
      ->required());
}

void add_training(CLI::App* sub, Args& a) {
  a.opts.emplace("--epochs", sub->add_option("--epochs", a.epochs, "Training epochs"));
  a.opts.emplace("--batch", sub->add_option("--batch", a.batch, "Minibatch size")->check(CLI::PositiveNumber));
  a.opts.emplace("--lr-body", sub->add_option("--lr-body", a.lr_body, "Learning rate of encoder and blocks"));
  a.opts.emplace("--lr-head", sub->add_option("--lr-head", a.lr_head, "Learning rate of prediction heads"));
  a.opts.emplace("--precision", sub->add_option("--precision", a.precision, "Checkpoint storage precision")
      ->check(CLI::IsMember({"f32", "f64"})));
}

void add_metric(CLI::App* sub, Args& a) {
  a.opts.emplace("--metric", sub->add_option("--metric", a.metric, "Evaluation metric")->check(CLI::IsMember({"rmse", "mae", "rocauc"})));
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Dual-graph geometry-aware molecular representation learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "geognn 0.1.0");
  Args a;

  auto* featurize = app.add_subcommand("featurize", "Build dual graphs and feature tensors");
  add_common(featurize, a);
  add_inputs(featurize, a);
  featurize->add_option("--out", a.out, "Output directory")->required();

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Self-supervised geometry pretraining");
  add_common(pretrain_cmd, a);
  add_inputs(pretrain_cmd, a);
  add_training(pretrain_cmd, a);
  pretrain_cmd->add_option("--out", a.out, "Output directory")->required();
  a.opts.emplace("--tasks", pretrain_cmd->add_option("--tasks", a.tasks, "Subset of length,angle,distance,fingerprint"));
  a.opts.emplace("--mask-ratio", pretrain_cmd->add_option("--mask-ratio", a.mask_ratio, "Fraction of atoms masked"));
  pretrain_cmd->add_option("--eval-input", a.eval_inputs, "Held-out molecules for the eval loss");
  pretrain_cmd->add_option("--resume", a.resume, "Continue from a pretraining checkpoint")->check(CLI::ExistingFile);

  auto* finetune_cmd = app.add_subcommand("finetune", "Train a downstream head and select the best epoch");
  add_common(finetune_cmd, a);
  add_inputs(finetune_cmd, a);
  add_training(finetune_cmd, a);
  add_metric(finetune_cmd, a);
  finetune_cmd->add_option("--out", a.out, "Output directory")->required();
  finetune_cmd->add_option("--checkpoint", a.checkpoint, "Pretrained checkpoint")->check(CLI::ExistingFile);
  a.opts.emplace("--task-type", finetune_cmd->add_option("--task-type", a.task_type, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"})));
  finetune_cmd->add_option("--labels", a.labels, "Comma-separated label names (default: all)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a finetuned checkpoint");
  add_common(evaluate_cmd, a);
  add_inputs(evaluate_cmd, a);
  add_metric(evaluate_cmd, a);
  evaluate_cmd->add_option("--checkpoint", a.checkpoint, "Finetuned checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--split", a.split, "Which split tag to score")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}));
  evaluate_cmd->add_option("--out", a.out, "Directory for evaluation.json");

  auto* embed_cmd = app.add_subcommand("embed", "Write graph embeddings as JSON lines");
  add_common(embed_cmd, a);
  add_inputs(embed_cmd, a);
  embed_cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", a.out, "Output directory")->required();

  auto* generate_cmd = app.add_subcommand("generate", "Write random C/N/O molecules with 3D coordinates");
  a.opts.emplace("--seed-gen", generate_cmd->add_option("--seed", a.seed, "Random seed"));
  generate_cmd->add_option("--count", a.count, "Number of molecules");
  generate_cmd->add_option("--out", a.out, "Output file (.sdf or .jsonl)")->required();
  generate_cmd->add_option("--label", a.label_name, "Attach a geometry-derived regression label");
  generate_cmd->add_option("--fingerprint-bits", a.fingerprint_bits, "Attach substructure fingerprints");
  generate_cmd->add_option("--splits", a.split_fractions, "train,valid,test fractions");
  generate_cmd->add_option("--min-atoms", a.min_atoms, "Smallest heavy-atom count");
  generate_cmd->add_option("--max-atoms", a.max_atoms, "Largest heavy-atom count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*featurize) return cmd_featurize(a);
    if (*pretrain_cmd) return cmd_pretrain(a);
    if (*finetune_cmd) return cmd_finetune(a);
    if (*evaluate_cmd) return cmd_evaluate(a);
    if (*embed_cmd) return cmd_embed(a);
    if (*generate_cmd) return cmd_generate(a);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace geognn::cli
