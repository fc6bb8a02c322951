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
#include <string>
#include <vector>

#include "geognn/dual_graph.hpp"
#include "geognn/molecule.hpp"
#include "geognn/tensor.hpp"

namespace geognn {

class Rng;

// Evenly spaced RBF centers: start + i * stride for i in [0, count).
struct RbfGrid {
  double start = 0.0;
  double stride = 0.1;
  std::size_t count = 0;

  double center(std::size_t i) const { return start + static_cast<double>(i) * stride; }
  friend bool operator==(const RbfGrid&, const RbfGrid&) = default;
};

struct FeatureConfig {
  // Bond lengths: 0.0 to 5.0 Angstrom; angles: 0.0 to 3.1 rad.
  RbfGrid length_grid{0.0, 0.1, 51};
  RbfGrid angle_grid{0.0, 0.1, 32};
  double gamma = 10.0;
  // When false the RBF blocks are left at zero, so the encoding carries no
  // geometry at all.
  bool geometry = true;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Vocabulary sizes of the discrete features.
inline constexpr std::size_t kAtomTypeSlots = 119;
inline constexpr std::size_t kAromaticSlots = 2;
inline constexpr std::size_t kFormalChargeSlots = 16;
inline constexpr int kFormalChargeOffset = 8;
inline constexpr std::size_t kDegreeSlots = 11;
inline constexpr std::size_t kNumHSlots = 9;
inline constexpr std::size_t kInRingSlots = 2;

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
  bool one_hot = true;

  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;
};

// Column layout of the atom, bond and angle feature matrices.
struct FeatureLayout {
  std::vector<FeatureBlock> atom;
  std::vector<FeatureBlock> bond;
  std::vector<FeatureBlock> angle;

  std::size_t atom_width() const;
  std::size_t bond_width() const;
  std::size_t angle_width() const;
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

FeatureLayout feature_layout(const FeatureConfig& config);

void validate(const FeatureConfig& config);

// e_m(x) = exp(-gamma * (x - mu_m)^2) over the grid centers.
std::vector<double> rbf_expand(double x, const RbfGrid& grid, double gamma);

struct EncodedGraph {
  Tensor atom_features;   // [|V|, atom_width]
  Tensor bond_features;   // [|E|, bond_width]
  Tensor angle_features;  // [|A|, angle_width]
  std::vector<std::uint8_t> atom_masked;
  std::vector<std::uint8_t> bond_masked;
  std::vector<std::uint8_t> angle_masked;
};

EncodedGraph encode(const DualGraph& graph, const Molecule& mol, const FeatureConfig& config);

// Zeroes the feature rows of every selected entity and raises its mask flag.
void apply_mask(EncodedGraph& encoded, const MaskSelection& selection);

struct MaskedContext {
  EncodedGraph encoded;
  MaskSelection targets;
};

// Context masking: select atoms, hide the features of each atom, its bonds
// and the angles it centers, and return the hidden geometry as targets.
MaskedContext mask_context(const DualGraph& graph, const EncodedGraph& encoded, double ratio, Rng& rng);

}  // namespace geognn
