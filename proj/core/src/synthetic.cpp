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

#include "geognn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "geognn/dual_graph.hpp"
#include "geognn/errors.hpp"
#include "geognn/rng.hpp"

namespace geognn {

namespace {

constexpr int kC = 6, kN = 7, kO = 8;

int max_valence(int z) { return z == kC ? 4 : z == kN ? 3 : 2; }

double order_of(BondType t) {
  switch (t) {
    case BondType::kSingle: return 1.0;
    case BondType::kDouble: return 2.0;
    case BondType::kTriple: return 3.0;
    case BondType::kAromatic: return 1.5;
  }
  return 1.0;
}

double base_length(int za, int zb, BondType type) {
  if (type == BondType::kAromatic) return 1.39;
  if (za > zb) std::swap(za, zb);
  const bool dbl = type == BondType::kDouble;
  if (za == kC && zb == kC) return dbl ? 1.34 : 1.53;
  if (za == kC && zb == kN) return dbl ? 1.28 : 1.47;
  if (za == kC && zb == kO) return dbl ? 1.21 : 1.43;
  if (za == kN && zb == kN) return dbl ? 1.25 : 1.45;
  if (za == kN && zb == kO) return dbl ? 1.21 : 1.40;
  return 1.48;
}

Vec3 unit(const Vec3& v) { return v * (1.0 / v.norm()); }

Vec3 random_direction(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (v.norm() > 1e-6) return unit(v);
  }
}

struct Builder {
  Molecule mol;
  std::vector<double> used;  // bond order sum per atom

  double free_valence(std::size_t a) const { return max_valence(mol.atoms[a].atomic_number) - used[a]; }

  std::size_t add_atom(int z, const Vec3& pos) {
    Atom atom;
    atom.atomic_number = z;
    mol.atoms.push_back(atom);
    mol.coords.push_back(pos);
    used.push_back(0.0);
    return mol.atoms.size() - 1;
  }

  void add_bond(std::size_t a, std::size_t b, BondType type) {
    Bond bond;
    bond.a = static_cast<std::uint32_t>(a);
    bond.b = static_cast<std::uint32_t>(b);
    bond.type = type;
    mol.bonds.push_back(bond);
    used[a] += order_of(type);
    used[b] += order_of(type);
  }

  std::vector<Vec3> arms(std::size_t a) const {
    std::vector<Vec3> out;
    for (const Bond& b : mol.bonds) {
      if (b.a == a) out.push_back(unit(mol.coords[b.b] - mol.coords[a]));
      if (b.b == a) out.push_back(unit(mol.coords[b.a] - mol.coords[a]));
    }
    return out;
  }
};

int random_element(Rng& rng) {
  const double u = rng.uniform();
  return u < 0.7 ? kC : u < 0.85 ? kN : kO;
}

void seed_ring(Builder& b, Rng& rng) {
  const std::size_t size = rng.uniform() < 0.5 ? 5 : 6;
  const bool aromatic = size == 6 && rng.uniform() < 0.5;
  const double side = aromatic ? 1.39 : 1.53;
  const double radius = side / (2.0 * std::sin(std::numbers::pi / static_cast<double>(size)));
  const std::size_t hetero = aromatic ? size : static_cast<std::size_t>(rng.below(2 * size));
  for (std::size_t i = 0; i < size; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size);
    const int z = i == hetero ? (rng.uniform() < 0.5 ? kN : kO) : kC;
    b.add_atom(z, {radius * std::cos(t), radius * std::sin(t), rng.uniform(-0.05, 0.05)});
  }
  for (std::size_t i = 0; i < size; ++i)
    b.add_bond(i, (i + 1) % size, aromatic ? BondType::kAromatic : BondType::kSingle);
}

bool grow(Builder& b, Rng& rng, const SyntheticOptions& options) {
  std::vector<std::size_t> open;
  for (std::size_t a = 0; a < b.mol.atoms.size(); ++a)
    if (b.free_valence(a) >= 1.0) open.push_back(a);
  if (open.empty()) return false;
  const std::size_t parent = open[rng.below(open.size())];
  int z = random_element(rng);
  BondType type = BondType::kSingle;
  const bool parent_aromatic = b.mol.atoms[parent].aromatic;
  if (!parent_aromatic && b.free_valence(parent) >= 2.0 && max_valence(z) >= 2 &&
      rng.uniform() < options.double_bond_probability) {
    type = BondType::kDouble;
  }
  const double length = base_length(b.mol.atoms[parent].atomic_number, z, type) +
                        options.length_noise * std::clamp(rng.normal(), -3.0, 3.0);
  const auto arms = b.arms(parent);
  const double lo = 100.0 * std::numbers::pi / 180.0;
  const double hi = 130.0 * std::numbers::pi / 180.0;
  for (int attempt = 0; attempt < 400; ++attempt) {
    const Vec3 dir = random_direction(rng);
    const bool angles_ok = std::all_of(arms.begin(), arms.end(), [&](const Vec3& arm) {
      const double ang = std::acos(std::clamp(arm.dot(dir), -1.0, 1.0));
      return ang >= lo && ang <= hi;
    });
    if (!angles_ok) continue;
    const Vec3 pos = b.mol.coords[parent] + dir * length;
    bool clash = false;
    for (std::size_t a = 0; a < b.mol.atoms.size() && !clash; ++a)
      clash = a != parent && (b.mol.coords[a] - pos).norm() < 2.0;
    if (clash) continue;
    const std::size_t child = b.add_atom(z, pos);
    b.add_bond(parent, child, type);
    return true;
  }
  return false;
}

}  // namespace

Molecule generate_molecule(Rng& rng, const SyntheticOptions& options, std::string id) {
  if (options.min_atoms < 1 || options.max_atoms < options.min_atoms) {
    throw ConfigError("synthetic molecules need 1 <= min_atoms <= max_atoms");
  }
  Builder b;
  b.mol.id = std::move(id);
  const std::size_t target =
      options.min_atoms + static_cast<std::size_t>(rng.below(options.max_atoms - options.min_atoms + 1));
  if (target >= 6 && rng.uniform() < options.ring_probability) {
    seed_ring(b, rng);
    for (const Bond& bond : b.mol.bonds) {
      if (bond.type == BondType::kAromatic) {
        b.mol.atoms[bond.a].aromatic = true;
        b.mol.atoms[bond.b].aromatic = true;
      }
    }
  } else {
    b.add_atom(random_element(rng), {0.0, 0.0, 0.0});
  }
  int failures = 0;
  while (b.mol.atoms.size() < target && failures < 20) {
    if (!grow(b, rng, options)) ++failures;
  }

  std::vector<double> free(b.mol.atoms.size());
  for (std::size_t a = 0; a < free.size(); ++a) free[a] = b.free_valence(a);
  Molecule mol = std::move(b.mol);
  const auto ring = ring_membership(mol);
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) mol.bonds[i].in_ring = ring[i];
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    bool unsaturated = mol.atoms[a].aromatic;
    for (const Bond& bond : mol.bonds)
      if ((bond.a == a || bond.b == a) && bond.type == BondType::kDouble) unsaturated = true;
    mol.atoms[a].hybridization = unsaturated ? Hybridization::kSP2 : Hybridization::kSP3;
    mol.atoms[a].num_explicit_h = std::max(0, static_cast<int>(std::floor(free[a])));
  }
  if (options.fingerprint_bits > 0) mol.fingerprint = substructure_bits(mol, options.fingerprint_bits);
  return mol;
}

std::vector<Molecule> generate_molecules(std::size_t count, std::uint64_t seed, const SyntheticOptions& options) {
  std::vector<Molecule> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(generate_molecule(rng, options, "syn" + std::to_string(i)));
  }
  return out;
}

std::vector<std::uint8_t> substructure_bits(const Molecule& mol, std::size_t bits) {
  constexpr std::size_t kCatalogue = 16;
  std::array<std::uint8_t, kCatalogue> base{};
  auto pair_bit = [](int za, int zb) -> int {
    if (za > zb) std::swap(za, zb);
    if (za == kC && zb == kC) return 0;
    if (za == kC && zb == kN) return 1;
    if (za == kC && zb == kO) return 2;
    if (za == kN && zb == kN) return 3;
    if (za == kN && zb == kO) return 4;
    if (za == kO && zb == kO) return 5;
    return -1;
  };
  std::size_t ring_bonds = 0;
  for (const Bond& b : mol.bonds) {
    const int za = mol.atoms[b.a].atomic_number, zb = mol.atoms[b.b].atomic_number;
    if (const int p = pair_bit(za, zb); p >= 0) base[p] = 1;
    if (b.type == BondType::kDouble) {
      base[6] = 1;
      if ((za == kC && zb == kO) || (za == kO && zb == kC)) base[7] = 1;
    }
    if (b.type == BondType::kAromatic) base[10] = 1;
    if (b.in_ring) ++ring_bonds;
  }
  base[8] = ring_bonds == 5;
  base[9] = ring_bonds == 6;
  const auto deg = atom_degrees(mol);
  base[11] = std::any_of(deg.begin(), deg.end(), [](int d) { return d >= 3; });
  base[15] = std::any_of(deg.begin(), deg.end(), [](int d) { return d >= 4; });
  for (const Atom& a : mol.atoms) {
    if (a.atomic_number == kN) base[12] = 1;
    if (a.atomic_number == kO) base[13] = 1;
  }
  base[14] = mol.atoms.size() >= 8;

  std::vector<std::uint8_t> out(bits);
  for (std::size_t i = 0; i < bits; ++i) {
    if (i < kCatalogue) {
      out[i] = base[i];
    } else {
      const std::uint64_t h = mix64(i);
      out[i] = base[h % kCatalogue] & base[(h >> 8) % kCatalogue];
    }
  }
  return out;
}

double mean_bond_length(const Molecule& mol) {
  if (mol.bonds.empty()) throw DataError("molecule '" + mol.id + "' has no bonds");
  double s = 0.0;
  for (const Bond& b : mol.bonds) s += (mol.coords[b.a] - mol.coords[b.b]).norm();
  return s / static_cast<double>(mol.bonds.size());
}

double mean_bond_angle(const Molecule& mol) {
  const DualGraph g = build_dual_graph(mol);
  if (g.angle_values.empty()) throw DataError("molecule '" + mol.id + "' has no bond angles");
  return std::accumulate(g.angle_values.begin(), g.angle_values.end(), 0.0) /
         static_cast<double>(g.angle_values.size());
}

void attach_geometry_label(std::vector<Molecule>& molecules, const std::string& name) {
  if (molecules.empty()) return;
  std::vector<double> raw;
  for (const auto& m : molecules) {
    const double zl = (mean_bond_length(m) - 1.45) / 0.05;
    const double za = (mean_bond_angle(m) - 1.95) / 0.08;
    raw.push_back(zl + za + 0.25 * zl * za);
  }
  const double n = static_cast<double>(raw.size());
  const double mu = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
  double var = 0.0;
  for (double r : raw) var += (r - mu) * (r - mu);
  const double sd = std::sqrt(var / n);
  for (std::size_t i = 0; i < molecules.size(); ++i)
    molecules[i].labels[name] = sd > 0.0 ? (raw[i] - mu) / sd : 0.0;
}

Molecule random_rigid_motion(const Molecule& mol, Rng& rng) {
  double q[4];
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : q) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& v : q) v /= norm;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const double r[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
                          {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
                          {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
  const Vec3 t{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
  Molecule out = mol;
  for (Vec3& p : out.coords) {
    const Vec3 v = p;
    p = Vec3{r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z, r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
             r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z} +
        t;
  }
  return out;
}

Molecule permute_atoms(const Molecule& mol, std::span<const std::uint32_t> perm) {
  if (perm.size() != mol.atoms.size()) throw std::invalid_argument("permutation size mismatch");
  Molecule out = mol;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.atoms[perm[i]] = mol.atoms[i];
    out.coords[perm[i]] = mol.coords[i];
  }
  for (Bond& b : out.bonds) {
    b.a = perm[b.a];
    b.b = perm[b.b];
  }
  return out;
}

std::vector<std::uint32_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

}  // namespace geognn
