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

#include "geognn/molecule.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "geognn/errors.hpp"

namespace geognn {

namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber + 1> kSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

constexpr std::array<std::string_view, kNumChirality> kChirality = {"unspecified", "cw", "ccw",
                                                                    "other"};
constexpr std::array<std::string_view, kNumHybridization> kHybridization = {
    "sp", "sp2", "sp3", "sp3d", "sp3d2", "unknown"};
constexpr std::array<std::string_view, kNumBondType> kBondType = {"single", "double", "triple",
                                                                  "aromatic"};
constexpr std::array<std::string_view, kNumBondDir> kBondDir = {
    "none", "begin_wedge", "begin_dash", "end_downright", "end_upright", "either_double", "unknown"};
constexpr std::array<std::string_view, 3> kSplit = {"train", "valid", "test"};

template <class E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

// Valence electrons for s- and p-block elements; -1 for d/f-block.
int valence_electrons(int z) {
  if (z == 1) return 1;
  if (z == 2) return 2;
  constexpr std::array<std::pair<int, int>, 6> periods = {
      {{3, 10}, {11, 18}, {19, 36}, {37, 54}, {55, 86}, {87, 118}}};
  for (auto [first, noble] : periods) {
    if (z < first || z > noble) continue;
    if (z <= first + 1) return z - first + 1;
    if (z >= noble - 5) return z - (noble - 5) + 3;
    return -1;
  }
  return -1;
}

double bond_order(BondType t) {
  switch (t) {
    case BondType::kSingle: return 1.0;
    case BondType::kDouble: return 2.0;
    case BondType::kTriple: return 3.0;
    case BondType::kAromatic: return 1.5;
  }
  return 1.0;
}

// Usual valence of organic-subset elements; 0 elsewhere.
int default_valence(int z) {
  switch (z) {
    case 5: return 3;
    case 6: return 4;
    case 7: case 15: return 3;
    case 8: case 16: return 2;
    case 9: case 17: case 35: case 53: return 1;
    default: return 0;
  }
}

// Hydrogens implied by an unfilled usual valence.
int implicit_hydrogens(int z, int charge, double order_sum) {
  const int base = default_valence(z);
  if (base == 0) return 0;
  const bool gains = z == 7 || z == 8 || z == 15 || z == 16;
  const int target = gains ? base + charge : base - std::abs(charge);
  return std::max(0, static_cast<int>(std::floor(target - order_sum + 1e-9)));
}

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

int atomic_number_from_symbol(std::string_view symbol) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z)
    if (kSymbols[z] == symbol) return z;
  // Deuterium and tritium are hydrogen isotopes.
  if (symbol == "D" || symbol == "T") return 1;
  return 0;
}

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 0 || atomic_number > kMaxAtomicNumber) return "*";
  return kSymbols[atomic_number];
}

std::string_view to_string(Chirality c) { return kChirality[static_cast<std::size_t>(c)]; }
std::string_view to_string(Hybridization h) { return kHybridization[static_cast<std::size_t>(h)]; }
std::string_view to_string(BondType t) { return kBondType[static_cast<std::size_t>(t)]; }
std::string_view to_string(BondDir d) { return kBondDir[static_cast<std::size_t>(d)]; }
std::string_view to_string(Split s) { return kSplit[static_cast<std::size_t>(s)]; }

std::optional<Chirality> parse_chirality(std::string_view s) { return lookup<Chirality>(kChirality, s); }
std::optional<Hybridization> parse_hybridization(std::string_view s) {
  return lookup<Hybridization>(kHybridization, s);
}
std::optional<BondType> parse_bond_type(std::string_view s) { return lookup<BondType>(kBondType, s); }
std::optional<BondDir> parse_bond_dir(std::string_view s) { return lookup<BondDir>(kBondDir, s); }
std::optional<Split> parse_split(std::string_view s) { return lookup<Split>(kSplit, s); }

void validate(const Molecule& mol) {
  const std::string who = "molecule '" + mol.id + "': ";
  if (mol.coords.size() != mol.atoms.size()) {
    throw DataError(who + std::to_string(mol.coords.size()) + " coordinates for " +
                    std::to_string(mol.atoms.size()) + " atoms");
  }
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const Atom& a = mol.atoms[i];
    if (a.atomic_number < 1 || a.atomic_number > kMaxAtomicNumber) {
      throw DataError(who + "atom " + std::to_string(i) + " has atomic number " +
                      std::to_string(a.atomic_number));
    }
    if (a.num_explicit_h < 0) throw DataError(who + "negative hydrogen count on atom " + std::to_string(i));
    if (static_cast<std::size_t>(a.chirality) >= kNumChirality ||
        static_cast<std::size_t>(a.hybridization) >= kNumHybridization) {
      throw DataError(who + "atom " + std::to_string(i) + " has an out-of-vocabulary enum");
    }
    const Vec3& p = mol.coords[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DataError(who + "non-finite coordinate on atom " + std::to_string(i));
    }
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) {
    const Bond& b = mol.bonds[i];
    if (b.a >= mol.atoms.size() || b.b >= mol.atoms.size()) {
      throw DataError(who + "bond " + std::to_string(i) + ": atom index out of range");
    }
    if (b.a == b.b) throw DataError(who + "bond " + std::to_string(i) + " joins an atom to itself");
    if (static_cast<std::size_t>(b.type) >= kNumBondType || static_cast<std::size_t>(b.dir) >= kNumBondDir) {
      throw DataError(who + "bond " + std::to_string(i) + " has an out-of-vocabulary enum");
    }
    if (!seen.insert(std::minmax(b.a, b.b)).second) {
      throw DataError(who + "duplicate bond " + std::to_string(b.a) + "-" + std::to_string(b.b));
    }
  }
  if (mol.fingerprint) {
    for (auto bit : *mol.fingerprint)
      if (bit > 1) throw DataError(who + "fingerprint bit not in {0,1}");
  }
  for (const auto& [task, value] : mol.labels) {
    if (value && !std::isfinite(*value)) throw DataError(who + "non-finite label for " + task);
  }
}

std::vector<int> atom_degrees(const Molecule& mol) {
  std::vector<int> deg(mol.atoms.size(), 0);
  for (const Bond& b : mol.bonds) {
    ++deg[b.a];
    ++deg[b.b];
  }
  return deg;
}

std::vector<bool> ring_membership(const Molecule& mol) {
  const std::size_t n = mol.atoms.size();
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> adj(n);
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) {
    adj[mol.bonds[i].a].emplace_back(mol.bonds[i].b, i);
    adj[mol.bonds[i].b].emplace_back(mol.bonds[i].a, i);
  }
  // Iterative Tarjan bridge search. A bond is in a ring iff it is not a bridge.
  std::vector<bool> in_ring(mol.bonds.size(), true);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    std::uint32_t node;
    std::size_t parent_bond;
    std::size_t next;
  };
  constexpr std::size_t kNoBond = static_cast<std::size_t>(-1);
  for (std::uint32_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> stack{{root, kNoBond, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.node].size()) {
        auto [to, bond] = adj[f.node][f.next++];
        if (bond == f.parent_bond) continue;
        if (disc[to] == -1) {
          disc[to] = low[to] = timer++;
          stack.push_back({to, bond, 0});
        } else {
          low[f.node] = std::min(low[f.node], disc[to]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const std::uint32_t parent = stack.back().node;
          low[parent] = std::min(low[parent], low[done.node]);
          if (low[done.node] > disc[parent]) in_ring[done.parent_bond] = false;
        }
      }
    }
  }
  return in_ring;
}

std::vector<int> count_attached_hydrogens(const Molecule& mol) {
  std::vector<int> h(mol.atoms.size(), 0);
  for (const Bond& b : mol.bonds) {
    if (mol.atoms[b.b].atomic_number == 1) ++h[b.a];
    if (mol.atoms[b.a].atomic_number == 1) ++h[b.b];
  }
  return h;
}

Hybridization estimate_hybridization(const Molecule& mol, std::size_t atom) {
  const int valence = valence_electrons(mol.atoms[atom].atomic_number);
  if (valence < 0) return Hybridization::kUnknown;
  int degree = 0;
  double order_sum = 0.0;
  for (const Bond& b : mol.bonds) {
    if (b.a != atom && b.b != atom) continue;
    ++degree;
    order_sum += bond_order(b.type);
  }
  const int charge = mol.atoms[atom].formal_charge;
  const int implicit_h = implicit_hydrogens(mol.atoms[atom].atomic_number, charge, order_sum);
  const double free_electrons = valence - charge - order_sum - implicit_h;
  const int lone_pairs = free_electrons > 0.0 ? static_cast<int>(std::floor(free_electrons / 2.0)) : 0;
  switch (degree + implicit_h + lone_pairs) {
    case 2: return Hybridization::kSP;
    case 3: return Hybridization::kSP2;
    case 4: return Hybridization::kSP3;
    case 5: return Hybridization::kSP3D;
    case 6: return Hybridization::kSP3D2;
    default: return Hybridization::kUnknown;
  }
}

void perceive_attributes(Molecule& mol) {
  const auto ring = ring_membership(mol);
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) mol.bonds[i].in_ring = ring[i];
  const auto hs = count_attached_hydrogens(mol);
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    mol.atoms[i].num_explicit_h = hs[i];
    mol.atoms[i].aromatic = false;
  }
  for (const Bond& b : mol.bonds) {
    if (b.type == BondType::kAromatic) {
      mol.atoms[b.a].aromatic = true;
      mol.atoms[b.b].aromatic = true;
    }
  }
  for (std::size_t i = 0; i < mol.atoms.size(); ++i)
    mol.atoms[i].hybridization = estimate_hybridization(mol, i);
}

}  // namespace geognn
