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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geognn {

// Chirality tags, in one-hot slot order.
enum class Chirality : std::uint8_t { kUnspecified = 0, kCW, kCCW, kOther };
inline constexpr std::size_t kNumChirality = 4;

// Hybridization states, in one-hot slot order. kUnknown is an extra slot for
// atoms the steric-number heuristic cannot classify.
enum class Hybridization : std::uint8_t { kSP = 0, kSP2, kSP3, kSP3D, kSP3D2, kUnknown };
inline constexpr std::size_t kNumHybridization = 6;

enum class BondType : std::uint8_t { kSingle = 0, kDouble, kTriple, kAromatic };
inline constexpr std::size_t kNumBondType = 4;

// Bond stereo direction, in one-hot slot order.
enum class BondDir : std::uint8_t {
  kNone = 0,
  kBeginWedge,
  kBeginDash,
  kEndDownRight,
  kEndUpRight,
  kEitherDouble,
  kUnknown,
};
inline constexpr std::size_t kNumBondDir = 7;

enum class Split : std::uint8_t { kTrain = 0, kValid, kTest };

inline constexpr int kMaxAtomicNumber = 118;

struct Atom {
  int atomic_number = 6;
  int formal_charge = 0;
  Chirality chirality = Chirality::kUnspecified;
  int num_explicit_h = 0;
  bool aromatic = false;
  Hybridization hybridization = Hybridization::kUnknown;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  BondType type = BondType::kSingle;
  BondDir dir = BondDir::kNone;
  bool in_ring = false;

  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const;
};

struct Molecule {
  std::string id;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<Vec3> coords;
  // Task name -> label; nullopt marks a missing label.
  std::map<std::string, std::optional<double>> labels;
  std::optional<std::vector<std::uint8_t>> fingerprint;
  std::optional<Split> split;

  std::size_t num_atoms() const { return atoms.size(); }
  std::size_t num_bonds() const { return bonds.size(); }

  friend bool operator==(const Molecule&, const Molecule&) = default;
};

// Element symbols indexed by atomic number; index 0 is "*".
int atomic_number_from_symbol(std::string_view symbol);
std::string_view element_symbol(int atomic_number);

std::string_view to_string(Chirality c);
std::string_view to_string(Hybridization h);
std::string_view to_string(BondType t);
std::string_view to_string(BondDir d);
std::string_view to_string(Split s);
std::optional<Chirality> parse_chirality(std::string_view s);
std::optional<Hybridization> parse_hybridization(std::string_view s);
std::optional<BondType> parse_bond_type(std::string_view s);
std::optional<BondDir> parse_bond_dir(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

// Throws DataError describing the first violated structural invariant.
void validate(const Molecule& mol);

// Number of bonds incident to each atom.
std::vector<int> atom_degrees(const Molecule& mol);

// in_ring[i] is true iff bond i lies on a cycle, i.e. it is not a bridge of
// the undirected bond graph.
std::vector<bool> ring_membership(const Molecule& mol);

// Counts attached hydrogen atoms per atom.
std::vector<int> count_attached_hydrogens(const Molecule& mol);

// Steric-number estimate: degree plus lone pairs derived from the element's
// valence electron count, charge and total bond order. An approximation of
// what a full cheminformatics toolkit reports.
Hybridization estimate_hybridization(const Molecule& mol, std::size_t atom);

// Fills in_ring, aromatic, num_explicit_h and hybridization from the bond
// graph. Used after parsing files that do not carry these attributes.
void perceive_attributes(Molecule& mol);

}  // namespace geognn
