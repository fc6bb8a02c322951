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

#include "geognn/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geognn/errors.hpp"

namespace geognn {

namespace {

std::size_t total_width(const std::vector<FeatureBlock>& blocks) {
  return blocks.empty() ? 0 : blocks.back().offset + blocks.back().width;
}

void append(std::vector<FeatureBlock>& blocks, std::string name, std::size_t width, bool one_hot) {
  const std::size_t offset = total_width(blocks);
  blocks.push_back({std::move(name), offset, width, one_hot});
}

void set_one_hot(Tensor& t, std::size_t row, const FeatureBlock& block, std::size_t slot) {
  if (slot >= block.width) {
    throw DataError("feature '" + block.name + "' value " + std::to_string(slot) +
                    " outside vocabulary of size " + std::to_string(block.width));
  }
  t(row, block.offset + slot) = 1.0;
}

void set_rbf(Tensor& t, std::size_t row, const FeatureBlock& block, double x, const RbfGrid& grid,
             double gamma) {
  for (std::size_t m = 0; m < grid.count; ++m) {
    const double d = x - grid.center(m);
    t(row, block.offset + m) = std::exp(-gamma * d * d);
  }
}

}  // namespace

std::size_t FeatureLayout::atom_width() const { return total_width(atom); }
std::size_t FeatureLayout::bond_width() const { return total_width(bond); }
std::size_t FeatureLayout::angle_width() const { return total_width(angle); }

FeatureLayout feature_layout(const FeatureConfig& config) {
  FeatureLayout l;
  append(l.atom, "atom_type", kAtomTypeSlots, true);
  append(l.atom, "aromatic", kAromaticSlots, true);
  append(l.atom, "formal_charge", kFormalChargeSlots, true);
  append(l.atom, "chirality", kNumChirality, true);
  append(l.atom, "degree", kDegreeSlots, true);
  append(l.atom, "num_h", kNumHSlots, true);
  append(l.atom, "hybridization", kNumHybridization, true);
  append(l.bond, "bond_dir", kNumBondDir, true);
  append(l.bond, "bond_type", kNumBondType, true);
  append(l.bond, "in_ring", kInRingSlots, true);
  append(l.bond, "bond_length_rbf", config.length_grid.count, false);
  append(l.angle, "bond_angle_rbf", config.angle_grid.count, false);
  return l;
}

void validate(const FeatureConfig& config) {
  if (!(config.gamma > 0.0)) throw ConfigError("RBF gamma must be positive");
  for (const RbfGrid* g : {&config.length_grid, &config.angle_grid}) {
    if (g->count == 0 || !(g->stride > 0.0)) {
      throw ConfigError("RBF grid needs at least one center and a positive stride");
    }
  }
}

std::vector<double> rbf_expand(double x, const RbfGrid& grid, double gamma) {
  std::vector<double> e(grid.count);
  for (std::size_t m = 0; m < grid.count; ++m) {
    const double d = x - grid.center(m);
    e[m] = std::exp(-gamma * d * d);
  }
  return e;
}

EncodedGraph encode(const DualGraph& graph, const Molecule& mol, const FeatureConfig& config) {
  validate(config);
  if (graph.num_atoms != mol.num_atoms() || graph.num_bonds() != mol.num_bonds()) {
    throw std::invalid_argument("encode: graph was not built from this molecule");
  }
  const FeatureLayout layout = feature_layout(config);
  EncodedGraph enc;
  enc.atom_features = Tensor(graph.num_atoms, layout.atom_width());
  enc.bond_features = Tensor(graph.num_bonds(), layout.bond_width());
  enc.angle_features = Tensor(graph.num_angles(), layout.angle_width());
  enc.atom_masked.assign(graph.num_atoms, 0);
  enc.bond_masked.assign(graph.num_bonds(), 0);
  enc.angle_masked.assign(graph.num_angles(), 0);

  const auto degrees = graph.degrees();
  for (std::size_t u = 0; u < graph.num_atoms; ++u) {
    const Atom& a = mol.atoms[u];
    Tensor& t = enc.atom_features;
    set_one_hot(t, u, layout.atom[0], static_cast<std::size_t>(a.atomic_number));
    set_one_hot(t, u, layout.atom[1], a.aromatic ? 1 : 0);
    const int charge = std::clamp(a.formal_charge + kFormalChargeOffset, 0,
                                  static_cast<int>(kFormalChargeSlots) - 1);
    set_one_hot(t, u, layout.atom[2], static_cast<std::size_t>(charge));
    set_one_hot(t, u, layout.atom[3], static_cast<std::size_t>(a.chirality));
    set_one_hot(t, u, layout.atom[4], static_cast<std::size_t>(std::min<int>(degrees[u], kDegreeSlots - 1)));
    set_one_hot(t, u, layout.atom[5],
                static_cast<std::size_t>(std::clamp<int>(a.num_explicit_h, 0, kNumHSlots - 1)));
    set_one_hot(t, u, layout.atom[6], static_cast<std::size_t>(a.hybridization));
  }

  for (std::size_t e = 0; e < graph.num_bonds(); ++e) {
    const Bond& b = mol.bonds[e];
    Tensor& t = enc.bond_features;
    set_one_hot(t, e, layout.bond[0], static_cast<std::size_t>(b.dir));
    set_one_hot(t, e, layout.bond[1], static_cast<std::size_t>(b.type));
    set_one_hot(t, e, layout.bond[2], b.in_ring ? 1 : 0);
    if (config.geometry) set_rbf(t, e, layout.bond[3], graph.lengths[e], config.length_grid, config.gamma);
  }

  if (config.geometry) {
    for (std::size_t k = 0; k < graph.num_angles(); ++k)
      set_rbf(enc.angle_features, k, layout.angle[0], graph.angle_values[k], config.angle_grid, config.gamma);
  }
  return enc;
}

void apply_mask(EncodedGraph& encoded, const MaskSelection& selection) {
  auto clear = [](Tensor& t, std::vector<std::uint8_t>& flags, const std::vector<std::uint32_t>& rows) {
    for (auto r : rows) {
      for (auto& v : t.row_span(r)) v = 0.0;
      flags[r] = 1;
    }
  };
  clear(encoded.atom_features, encoded.atom_masked, selection.atoms);
  clear(encoded.bond_features, encoded.bond_masked, selection.bonds);
  clear(encoded.angle_features, encoded.angle_masked, selection.angles);
}

MaskedContext mask_context(const DualGraph& graph, const EncodedGraph& encoded, double ratio, Rng& rng) {
  MaskedContext ctx{encoded, select_mask(graph, ratio, rng)};
  apply_mask(ctx.encoded, ctx.targets);
  return ctx;
}

}  // namespace geognn
