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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geognn/checkpoint.hpp"
#include "geognn/errors.hpp"
#include "geognn/trainer.hpp"
#include "test_util.hpp"

namespace geognn {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "geognn_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Checkpoint sample_checkpoint() {
  ModelConfig m = testing::small_model();
  m.num_tasks = 2;
  m.fingerprint_bits = 4;
  FeatureConfig f;
  f.gamma = 8.0;
  Checkpoint c = initial_checkpoint(m, f, 3);
  c.epoch = 7;
  c.adam_step = 21;
  c.params[0].moment1.fill(0.125);
  c.params[1].moment2.fill(1.0 / 3.0);
  c.meta = {{"tasks", {"a", "b"}}, {"task_type", "regression"}};
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint c = sample_checkpoint();
  const fs::path p = temp_file("exact.ckpt");
  save_checkpoint(p, c);
  const Checkpoint back = load_checkpoint(p);
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.features, c.features);
  EXPECT_EQ(back.epoch, 7u);
  EXPECT_EQ(back.adam_step, 21u);
  EXPECT_EQ(back.meta, c.meta);
  ASSERT_EQ(back.params.size(), c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    EXPECT_EQ(back.params[i].name, c.params[i].name);
    EXPECT_EQ(back.params[i].value, c.params[i].value);
    EXPECT_EQ(back.params[i].moment1, c.params[i].moment1);
    EXPECT_EQ(back.params[i].moment2, c.params[i].moment2);
  }
  save_checkpoint(temp_file("again.ckpt"), back);
  EXPECT_EQ(slurp(p), slurp(temp_file("again.ckpt")));
}

TEST(Checkpoint, SinglePrecisionStorageRounds) {
  const Checkpoint c = sample_checkpoint();
  const fs::path p = temp_file("single.ckpt");
  save_checkpoint(p, c, StorageType::kF32);
  const Checkpoint back = load_checkpoint(p);
  EXPECT_LT(fs::file_size(p), fs::file_size(temp_file("exact.ckpt")));
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const auto& a = c.params[i].value.values();
    const auto& b = back.params[i].value.values();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(b[k], static_cast<double>(static_cast<float>(a[k])));
  }
  ParamStore rounded = c.params;
  round_to_storage(rounded, StorageType::kF32);
  for (std::size_t i = 0; i < c.params.size(); ++i) EXPECT_EQ(rounded[i].value, back.params[i].value);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const fs::path good = temp_file("exact.ckpt");
  save_checkpoint(good, sample_checkpoint());
  const std::string bytes = slurp(good);

  const fs::path bad = temp_file("bad.ckpt");
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOPE" << bytes.substr(4);
  }
  EXPECT_THROW(load_checkpoint(bad), DataError);
  {
    std::ofstream out(bad, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  EXPECT_THROW(load_checkpoint(bad), DataError);
  EXPECT_THROW(load_checkpoint(temp_file("does_not_exist.ckpt")), DataError);
}

TEST(Checkpoint, ManifestMismatchListsDifferences) {
  FeatureConfig a, b;
  b.gamma = 5.0;
  b.length_grid.count = 40;
  EXPECT_NO_THROW(require_compatible_manifest(feature_manifest(a), feature_manifest(a)));
  try {
    require_compatible_manifest(feature_manifest(a), feature_manifest(b));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("gamma"), std::string::npos) << msg;
    EXPECT_NE(msg.find("length_grid"), std::string::npos) << msg;
  }
}

TEST(Checkpoint, ManifestDescribesLayout) {
  const nlohmann::json m = feature_manifest({});
  const FeatureLayout l = feature_layout({});
  EXPECT_EQ(m["atom"].size(), l.atom.size());
  EXPECT_EQ(m["bond"].size(), l.bond.size());
}

TEST(Checkpoint, ConfigJsonRoundTrip) {
  ModelConfig m;
  m.hidden = 7;
  m.sequential_update = true;
  EXPECT_EQ(model_config_from_json(to_json(m)), m);
  FeatureConfig f;
  f.angle_grid.stride = 0.2;
  EXPECT_EQ(feature_config_from_json(to_json(f)), f);
  TaskSelection t;
  t.fingerprint = false;
  t.mask_ratio = 0.3;
  EXPECT_EQ(task_selection_from_json(to_json(t)), t);
  ModelConfig partial = model_config_from_json({{"hidden", 4}});
  EXPECT_EQ(partial.hidden, 4u);
  EXPECT_EQ(partial.num_blocks, ModelConfig{}.num_blocks);
}

TEST(FeatureBundle, RoundTrip) {
  FeatureConfig f;
  f.gamma = 12.0;
  auto mols = testing::random_molecules(6, 4, 1, 7, 5);
  const auto samples = make_samples(mols, f);
  const fs::path p = temp_file("bundle.gef");
  save_feature_bundle(p, f, samples);
  FeatureConfig read;
  const auto back = load_feature_bundle(p, &read);
  EXPECT_EQ(read, f);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(back[i].id, samples[i].id);
    EXPECT_EQ(back[i].fingerprint, samples[i].fingerprint);
    EXPECT_EQ(back[i].encoded.atom_features, samples[i].encoded.atom_features);
    EXPECT_EQ(back[i].encoded.bond_features, samples[i].encoded.bond_features);
    EXPECT_EQ(back[i].encoded.angle_features, samples[i].encoded.angle_features);
    EXPECT_EQ(back[i].graph.lengths, samples[i].graph.lengths);
    EXPECT_EQ(back[i].graph.angle_values, samples[i].graph.angle_values);
    EXPECT_EQ(back[i].graph.distances, samples[i].graph.distances);
    EXPECT_EQ(back[i].graph.edge_src, samples[i].graph.edge_src);
    EXPECT_EQ(back[i].graph.angle_msg_dst, samples[i].graph.angle_msg_dst);
  }
  EXPECT_THROW(load_checkpoint(p), DataError);
}

}  // namespace
}  // namespace geognn
