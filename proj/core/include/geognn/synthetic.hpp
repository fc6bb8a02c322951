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
#include <span>
#include <string>
#include <vector>

#include "geognn/molecule.hpp"

namespace geognn {

class Rng;

// Random heavy-atom skeletons over C, N and O with covalent bond lengths
// and bond angles in the usual ranges. Hydrogens are implicit and recorded
// in num_explicit_h.
struct SyntheticOptions {
  std::size_t min_atoms = 4;
  std::size_t max_atoms = 10;
  // Chance of seeding the skeleton with a 5- or 6-membered ring.
  double ring_probability = 0.4;
  double double_bond_probability = 0.15;
  // Substructure bits attached as the molecule's fingerprint; 0 for none.
  std::size_t fingerprint_bits = 0;
  // Gaussian noise (Angstrom) on bond lengths.
  double length_noise = 0.02;
};

Molecule generate_molecule(Rng& rng, const SyntheticOptions& options, std::string id);
std::vector<Molecule> generate_molecules(std::size_t count, std::uint64_t seed, const SyntheticOptions& options = {});

// Bit i flags a fixed substructure (element pairs, double bonds, ring
// sizes, branching); bits beyond the catalogue are hashed combinations.
std::vector<std::uint8_t> substructure_bits(const Molecule& mol, std::size_t bits);

// Mean bond length (Angstrom) and mean bond angle (radians).
double mean_bond_length(const Molecule& mol);
double mean_bond_angle(const Molecule& mol);

// Sets label `name` to a smooth function of mean bond length and mean bond
// angle, standardized to zero mean and unit variance over `molecules`.
void attach_geometry_label(std::vector<Molecule>& molecules, const std::string& name);

// Rotation by a uniformly random unit quaternion followed by a translation
// with components in [-10, 10).
Molecule random_rigid_motion(const Molecule& mol, Rng& rng);

// Atom i of the input becomes atom perm[i] of the output.
Molecule permute_atoms(const Molecule& mol, std::span<const std::uint32_t> perm);
std::vector<std::uint32_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace geognn
