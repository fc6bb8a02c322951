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

#include "geognn/dual_graph.hpp"
#include "geognn/errors.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/model.hpp"
#include "geognn/pretrain_tasks.hpp"
#include "geognn/rng.hpp"
#include "geognn/synthetic.hpp"
#include "test_util.hpp"

namespace geognn {
namespace {

using testing::load_fixture;
using testing::small_model;

struct Net {
  FeatureConfig features;
  GeoGnn model;
  ParamStore store;
  Net(ModelConfig config, std::uint64_t seed, FeatureConfig f = {})
      : features(f), model(config, feature_layout(f)) {
    model.init_params(store, seed);
  }

  Tensor atoms(const Molecule& m, Mode mode = Mode::kEval, std::uint64_t dropout_seed = 0) const {
    const Sample s = make_sample(m, features);
    Tape tape;
    return model.forward(tape, store, s.graph, s.encoded, mode, dropout_seed).atoms.value();
  }
  std::vector<double> graph(const Molecule& m) const {
    const Sample s = make_sample(m, features);
    Tape tape;
    const Tensor g = model.forward(tape, store, s.graph, s.encoded, Mode::kEval).graph.value();
    return {g.values().begin(), g.values().end()};
  }
};

TEST(Model, ShapesAndMeanReadout) {
  Net net(ModelConfig{}, 1);
  const Molecule m = load_fixture("methanamine.sdf");
  const Sample s = make_sample(m, net.features);
  Tape tape;
  const GraphEmbedding emb = net.model.forward(tape, net.store, s.graph, s.encoded, Mode::kEval);
  EXPECT_EQ(emb.atoms.value().rows(), m.num_atoms());
  EXPECT_EQ(emb.atoms.value().cols(), 32u);
  EXPECT_EQ(emb.bonds.value().rows(), m.num_bonds());
  ASSERT_EQ(emb.graph.value().cols(), 32u);
  for (std::size_t c = 0; c < 32; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.num_atoms(); ++r) mean += emb.atoms.value()(r, c);
    EXPECT_NEAR(emb.graph.value()(0, c), mean / static_cast<double>(m.num_atoms()), 1e-14);
  }
}

TEST(Model, DefaultParameterNamesAndCount) {
  Net net(ModelConfig{}, 1);
  EXPECT_TRUE(net.store.contains("encoder.atom.w"));
  EXPECT_TRUE(net.store.contains("block7.atom.norm.gamma"));
  EXPECT_FALSE(net.store.contains("block8.atom.norm.gamma"));
  EXPECT_FALSE(net.store.contains("head.down.0.w"));
  EXPECT_EQ(net.store.at("head.distance.1.w").value.cols(), 30u);
  EXPECT_TRUE(GeoGnn::is_head_parameter("head.length.0.w"));
  EXPECT_FALSE(GeoGnn::is_head_parameter("block0.bond.mlp0.w"));
  EXPECT_TRUE(GeoGnn::is_downstream_parameter("head.down.2.b"));
}

TEST(Model, InitializationIsUniformInFanIn) {
  Net net(ModelConfig{}, 3);
  for (const Parameter& p : net.store) {
    if (p.name.find("norm") != std::string::npos) continue;
    const std::string weight = p.name.substr(0, p.name.size() - 1) + "w";
    const std::size_t fan_in = net.store.at(weight).value.rows();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double v : p.value.values()) EXPECT_LE(std::abs(v), bound) << p.name;
  }
  Net again(ModelConfig{}, 3);
  for (std::size_t i = 0; i < net.store.size(); ++i) EXPECT_EQ(net.store[i].value, again.store[i].value);
}

TEST(Model, SingleAtomWithoutBonds) {
  Net net(small_model(), 2);
  Molecule m;
  m.atoms = {Atom{8}};
  m.coords = {{0, 0, 0}};
  const auto g = net.graph(m);
  EXPECT_EQ(g.size(), 8u);
  for (double v : g) EXPECT_TRUE(std::isfinite(v));
}

TEST(Model, EvalForwardIsDeterministicAndTrainUsesDropout) {
  Net net(small_model(), 4);
  const Molecule m = load_fixture("methanamine.sdf");
  EXPECT_EQ(net.atoms(m), net.atoms(m));
  EXPECT_EQ(net.atoms(m, Mode::kTrain, 5), net.atoms(m, Mode::kTrain, 5));
  EXPECT_NE(net.atoms(m, Mode::kTrain, 5), net.atoms(m, Mode::kTrain, 6));
  EXPECT_NE(net.atoms(m, Mode::kTrain, 5), net.atoms(m));
}

TEST(Model, PermutationEquivarianceAndInvariance) {
  Net net(ModelConfig{}, 5);
  Rng rng(6);
  for (const Molecule& m : testing::random_molecules(10, 40, 3, 10)) {
    const auto perm = random_permutation(m.num_atoms(), rng);
    const Molecule p = permute_atoms(m, perm);
    const Tensor a = net.atoms(m);
    const Tensor b = net.atoms(p);
    double worst = 0.0;
    for (std::size_t u = 0; u < m.num_atoms(); ++u)
      for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(u, c) - b(perm[u], c)));
    EXPECT_LT(worst, 1e-9);
    EXPECT_LT(testing::max_abs_diff(net.graph(m), net.graph(p)), 1e-9);
  }
}

TEST(Model, RigidMotionInvariance) {
  Net net(ModelConfig{}, 7);
  Rng rng(8);
  for (const Molecule& m : testing::random_molecules(10, 41, 3, 10)) {
    EXPECT_LT(testing::max_abs_diff(net.graph(m), net.graph(random_rigid_motion(m, rng))), 1e-9);
  }
}

TEST(Model, CisTransDiscrimination) {
  const Molecule cis = load_fixture("cis_dichloroethene.sdf");
  const Molecule trans = load_fixture("trans_dichloroethene.sdf");
  ASSERT_EQ(cis.atoms, trans.atoms);
  ASSERT_EQ(cis.bonds, trans.bonds);
  Net geo(ModelConfig{}, 9);
  EXPECT_GT(testing::max_abs_diff(geo.graph(cis), geo.graph(trans)), 1e-6);
  FeatureConfig ablated;
  ablated.geometry = false;
  Net flat(ModelConfig{}, 9, ablated);
  EXPECT_LT(testing::max_abs_diff(flat.graph(cis), flat.graph(trans)), 1e-12);
}

TEST(Model, HeadWidths) {
  ModelConfig c = small_model();
  c.num_tasks = 12;
  c.fingerprint_bits = 5;
  Net net(c, 10);
  const Sample s = make_sample(load_fixture("water.sdf"), net.features);
  Tape tape;
  const GraphEmbedding emb = net.model.forward(tape, net.store, s.graph, s.encoded, Mode::kEval);
  EXPECT_EQ(net.model.head_downstream(tape, net.store, emb.graph).value().cols(), 12u);
  EXPECT_EQ(net.model.head_fingerprint(tape, net.store, emb.graph).value().cols(), 5u);
  EXPECT_EQ(net.model.head_distance(tape, net.store, emb.atoms, emb.atoms).value().cols(), 30u);
  EXPECT_EQ(net.model.head_length(tape, net.store, emb.atoms, emb.atoms).value().cols(), 1u);
}

TEST(Model, ZeroWeightHeadsOutputTheirBias) {
  Net net(small_model(), 11);
  for (auto name : {"head.length.0.w", "head.length.1.w", "head.angle.1.w"}) net.store.at(name).value.fill(0.0);
  net.store.at("head.length.1.b").value.fill(0.75);
  net.store.at("head.angle.1.b").value.fill(-0.5);
  const Sample s = make_sample(load_fixture("water.sdf"), net.features);
  Tape tape;
  const GraphEmbedding emb = net.model.forward(tape, net.store, s.graph, s.encoded, Mode::kEval);
  const Tensor len = net.model.head_length(tape, net.store, emb.atoms, emb.atoms).value();
  for (double v : len.values()) EXPECT_EQ(v, 0.75);
  const Tensor ang = net.model.head_angle(tape, net.store, emb.atoms, emb.atoms, emb.atoms).value();
  for (double v : ang.values()) EXPECT_EQ(v, -0.5);
}

TEST(Model, LinearFingerprintHeadPassthrough) {
  ModelConfig c = small_model(1, 1);
  c.fingerprint_bits = 1;
  Net net(c, 12);
  net.store.at("head.fingerprint.w").value.fill(1.0);
  net.store.at("head.fingerprint.b").value.fill(0.0);
  Tape tape;
  Var h = tape.constant(Tensor::scalar(0.3125));
  EXPECT_EQ(net.model.head_fingerprint(tape, net.store, h).value().item(), 0.3125);
}

TEST(Model, MissingHeadsAreConfigErrors) {
  Net net(small_model(), 13);
  Tape tape;
  Var h = tape.constant(Tensor(1, 8));
  EXPECT_THROW(net.model.head_downstream(tape, net.store, h), ConfigError);
  EXPECT_THROW(net.model.head_fingerprint(tape, net.store, h), ConfigError);
}

TEST(Model, InvalidConfigRejected) {
  ModelConfig c;
  c.num_blocks = 0;
  EXPECT_THROW(validate(c), ConfigError);
  ModelConfig d;
  d.distance_bins = 1;
  EXPECT_THROW(validate(d), ConfigError);
}

TEST(Model, SequentialUpdateDiffersFromSimultaneous) {
  ModelConfig seq = small_model();
  seq.sequential_update = true;
  Net a(small_model(), 14);
  Net b(seq, 14);
  const Molecule m = load_fixture("methanamine.sdf");
  EXPECT_GT(testing::max_abs_diff(a.graph(m), b.graph(m)), 1e-9);
}

// Gradient of every parameter through the full model, all pretraining
// heads and the downstream head, in train mode with a fixed dropout seed.
void full_gradient_check(ModelConfig config, const Molecule& m, std::uint64_t seed) {
  config.num_tasks = 2;
  config.fingerprint_bits = 3;
  Net net(config, seed);
  Sample s = make_sample(m, net.features);
  s.fingerprint = std::vector<std::uint8_t>{1, 0, 1};
  TaskSelection tasks;
  tasks.mask_ratio = 0.4;
  const auto res = testing::check_param_gradients(net.store, [&](Tape& tape) {
    const PretrainTerms t = pretrain_terms(tape, net.store, net.model, s, tasks, seed, Mode::kTrain);
    const GraphEmbedding emb = net.model.forward(tape, net.store, s.graph, s.encoded, Mode::kTrain, seed + 1);
    return add(t.total, sum(square(net.model.head_downstream(tape, net.store, emb.graph))));
  });
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(Model, FullGradientMatchesFiniteDifferences) {
  full_gradient_check(small_model(), load_fixture("methanamine.sdf"), 15);
}

TEST(Model, SequentialGradientMatchesFiniteDifferences) {
  ModelConfig c = small_model();
  c.sequential_update = true;
  full_gradient_check(c, load_fixture("water.sdf"), 16);
}

}  // namespace
}  // namespace geognn
