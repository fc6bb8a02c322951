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
#include <vector>

#include "geognn/molecule.hpp"
#include "geognn/tensor.hpp"

namespace geognn {

class Rng;

// A bond angle: the two bonds (center, end1) and (center, end2) meeting at
// `center`.
struct BondAngle {
  std::uint32_t center = 0;
  std::uint32_t end1 = 0;
  std::uint32_t end2 = 0;
  std::uint32_t bond1 = 0;
  std::uint32_t bond2 = 0;
};

// Atom-bond graph G = (V, E) and bond-angle graph H = (E, A) with their
// geometry. Bond i keeps the index it had in the molecule; its endpoints are
// stored with a < b.
struct DualGraph {
  std::size_t num_atoms = 0;
  std::vector<std::uint32_t> bond_a;
  std::vector<std::uint32_t> bond_b;
  std::vector<BondAngle> angles;

  std::vector<double> lengths;       // Angstrom, one per bond
  std::vector<double> angle_values;  // radians, one per angle
  Tensor distances;                  // [num_atoms, num_atoms], Angstrom

  // Directed atom-bond messages: for every bond both (a -> b) and (b -> a).
  std::vector<std::uint32_t> edge_src;
  std::vector<std::uint32_t> edge_dst;
  std::vector<std::uint32_t> edge_bond;

  // Directed bond-angle messages: for every angle both (bond1 -> bond2) and
  // (bond2 -> bond1).
  std::vector<std::uint32_t> angle_msg_src;
  std::vector<std::uint32_t> angle_msg_dst;
  std::vector<std::uint32_t> angle_msg_angle;

  std::size_t num_bonds() const { return bond_a.size(); }
  std::size_t num_angles() const { return angles.size(); }
  std::vector<int> degrees() const;
};

// Angle at p_center between the arms to p_end1 and p_end2, in [0, pi].
// Throws DataError for a zero-length arm.
double angle_between(const Vec3& p_end1, const Vec3& p_center, const Vec3& p_end2);

// Builds both graphs. Angles are enumerated per center atom in ascending
// order, pairing incident bonds in ascending bond index.
DualGraph build_dual_graph(const Molecule& mol);

// Rebuilds the directed message index arrays from bonds and angles.
void index_messages(DualGraph& graph);

// Atoms chosen for context masking and the geometry that was hidden.
struct MaskSelection {
  std::vector<std::uint32_t> atoms;   // sorted
  std::vector<std::uint32_t> bonds;   // sorted; bonds incident to a selected atom
  std::vector<std::uint32_t> angles;  // sorted; angles centered on a selected atom
  std::vector<double> bond_lengths;   // target per entry of `bonds`
  std::vector<double> angle_values;   // target per entry of `angles`
};

// Samples max(1, round(ratio * |V|)) atoms without replacement and collects
// their 1-hop bonds and the angles they center. Requires 0 < ratio <= 1.
MaskSelection select_mask(const DualGraph& graph, double ratio, Rng& rng);

}  // namespace geognn
