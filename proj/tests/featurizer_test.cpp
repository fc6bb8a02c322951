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

#include <cmath>
#include <numbers>

#include "geognn/dual_graph.hpp"
#include "geognn/errors.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/rng.hpp"
#include "test_util.hpp"

namespace geognn {
namespace {

using testing::load_fixture;

const FeatureBlock& block(const std::vector<FeatureBlock>& blocks, const std::string& name) {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::out_of_range(name);
}

double block_sum(const Tensor& t, std::size_t row, const FeatureBlock& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < b.width; ++c) s += t(row, b.offset + c);
  return s;
}

TEST(Featurizer, LayoutWidths) {
  const FeatureLayout l = feature_layout({});
  EXPECT_EQ(l.atom_width(), 119u + 2 + 16 + 4 + 11 + 9 + 6);
  EXPECT_EQ(l.bond_width(), 7u + 4 + 2 + 51);
  EXPECT_EQ(l.angle_width(), 32u);
  EXPECT_EQ(block(l.atom, "atom_type").offset, 0u);
}

TEST(Featurizer, GridDefaults) {
  const FeatureConfig c;
  EXPECT_EQ(c.gamma, 10.0);
  EXPECT_DOUBLE_EQ(c.length_grid.center(50), 5.0);
  EXPECT_LE(c.angle_grid.center(31), std::numbers::pi);
  EXPECT_GT(c.angle_grid.center(31) + c.angle_grid.stride, std::numbers::pi);
}

TEST(Featurizer, RbfMatchesDirectEvaluation) {
  const FeatureConfig c;
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(0.0, 5.0);
    const auto e = rbf_expand(x, c.length_grid, 10.0);
    ASSERT_EQ(e.size(), 51u);
    for (std::size_t m = 0; m < e.size(); ++m) {
      const double mu = 0.1 * static_cast<double>(m);
      EXPECT_NEAR(e[m], std::exp(-10.0 * (x - mu) * (x - mu)), 1e-12);
      EXPECT_GT(e[m], 0.0);
      EXPECT_LE(e[m], 1.0);
    }
  }
}

TEST(Featurizer, RbfIsSmooth) {
  const FeatureConfig c;
  const double eps = 1e-6;
  const double range = 5.0;
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(0.0, 5.0);
    const auto a = rbf_expand(x, c.length_grid, c.gamma);
    const auto b = rbf_expand(x + eps, c.length_grid, c.gamma);
    EXPECT_LE(testing::max_abs_diff(a, b), 2 * c.gamma * eps * range);
  }
}

TEST(Featurizer, CarbonAtomRow) {
  Molecule m;
  m.atoms = {Atom{6}, Atom{6}, Atom{6}};
  m.coords = {{0, 0, 0}, {1.5, 0, 0}, {1.5, 1.5, 0}};
  m.bonds = {Bond{0, 1}, Bond{1, 2}};
  const FeatureConfig config;
  const EncodedGraph e = encode(build_dual_graph(m), m, config);
  const FeatureLayout l = feature_layout(config);
  EXPECT_EQ(e.atom_features(1, 6), 1.0);
  EXPECT_EQ(block_sum(e.atom_features, 1, block(l.atom, "atom_type")), 1.0);
  EXPECT_EQ(e.atom_features(1, block(l.atom, "degree").offset + 2), 1.0);
  EXPECT_EQ(e.atom_features(1, block(l.atom, "formal_charge").offset + kFormalChargeOffset), 1.0);
  EXPECT_EQ(e.atom_features.cols(), l.atom_width());
}

TEST(Featurizer, BondAtGridCenter) {
  Molecule m;
  m.atoms = {Atom{6}, Atom{6}};
  m.coords = {{0, 0, 0}, {1.5, 0, 0}};
  m.bonds = {Bond{0, 1}};
  const FeatureConfig config;
  const FeatureLayout l = feature_layout(config);
  const EncodedGraph e = encode(build_dual_graph(m), m, config);
  const FeatureBlock& type = block(l.bond, "bond_type");
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(e.bond_features(0, type.offset + c), c == 0 ? 1.0 : 0.0);
  const FeatureBlock& rbf = block(l.bond, "bond_length_rbf");
  EXPECT_EQ(e.bond_features(0, rbf.offset + 15), 1.0);
  for (std::size_t c = 0; c < rbf.width; ++c) EXPECT_LE(e.bond_features(0, rbf.offset + c), 1.0);
}

TEST(Featurizer, OneHotBlocksSumToOne) {
  const FeatureConfig config;
  const FeatureLayout l = feature_layout(config);
  auto mols = testing::random_molecules(40, 31, 1, 12);
  mols.push_back(load_fixture("water.sdf"));
  mols.push_back(load_fixture("methanamine.sdf"));
  for (const Molecule& m : mols) {
    const EncodedGraph e = encode(build_dual_graph(m), m, config);
    for (std::size_t r = 0; r < e.atom_features.rows(); ++r)
      for (const auto& b : l.atom) EXPECT_EQ(block_sum(e.atom_features, r, b), 1.0) << b.name;
    for (std::size_t r = 0; r < e.bond_features.rows(); ++r)
      for (const auto& b : l.bond)
        if (b.one_hot) EXPECT_EQ(block_sum(e.bond_features, r, b), 1.0) << b.name;
  }
}

TEST(Featurizer, ChargeAndDegreeClamp) {
  Molecule m;
  m.atoms = {Atom{6, 12}, Atom{6, -12}};
  m.coords = {{0, 0, 0}, {1.5, 0, 0}};
  const FeatureConfig config;
  const FeatureLayout l = feature_layout(config);
  const EncodedGraph e = encode(build_dual_graph(m), m, config);
  const auto& charge = block(l.atom, "formal_charge");
  EXPECT_EQ(e.atom_features(0, charge.offset + 15), 1.0);
  EXPECT_EQ(e.atom_features(1, charge.offset + 0), 1.0);
}

TEST(Featurizer, AngleRbfMatchesGeometry) {
  const Molecule water = load_fixture("water.sdf");
  const DualGraph g = build_dual_graph(water);
  const FeatureConfig config;
  const EncodedGraph e = encode(g, water, config);
  ASSERT_EQ(e.angle_features.rows(), 1u);
  for (std::size_t m = 0; m < 32; ++m) {
    const double d = g.angle_values[0] - 0.1 * static_cast<double>(m);
    EXPECT_NEAR(e.angle_features(0, m), std::exp(-10.0 * d * d), 1e-12);
  }
}

TEST(Featurizer, GeometryOffZeroesRbfBlocks) {
  const Molecule water = load_fixture("water.sdf");
  FeatureConfig config;
  config.geometry = false;
  const EncodedGraph e = encode(build_dual_graph(water), water, config);
  for (double v : e.angle_features.values()) EXPECT_EQ(v, 0.0);
  const auto& rbf = block(feature_layout(config).bond, "bond_length_rbf");
  for (std::size_t r = 0; r < e.bond_features.rows(); ++r) EXPECT_EQ(block_sum(e.bond_features, r, rbf), 0.0);
}

TEST(Featurizer, MaskContextZeroesSelectedRows) {
  const Molecule water = load_fixture("water.sdf");
  const DualGraph g = build_dual_graph(water);
  const EncodedGraph e = encode(g, water, {});
  Rng rng(3);
  const MaskedContext ctx = mask_context(g, e, 1.0, rng);
  for (double v : ctx.encoded.atom_features.values()) EXPECT_EQ(v, 0.0);
  for (double v : ctx.encoded.bond_features.values()) EXPECT_EQ(v, 0.0);
  for (double v : ctx.encoded.angle_features.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(ctx.encoded.atom_masked, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(ctx.encoded.bond_masked, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(ctx.encoded.angle_masked, (std::vector<std::uint8_t>{1}));
  EXPECT_EQ(ctx.targets.bond_lengths.size(), 2u);
  EXPECT_EQ(ctx.targets.angle_values.size(), 1u);
  EXPECT_EQ(e.atom_masked, (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(Featurizer, InvalidConfigRejected) {
  FeatureConfig c;
  c.gamma = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  FeatureConfig d;
  d.length_grid.count = 0;
  EXPECT_THROW(validate(d), ConfigError);
}

}  // namespace
}  // namespace geognn
