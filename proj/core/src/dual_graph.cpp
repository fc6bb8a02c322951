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

#include "geognn/dual_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geognn/errors.hpp"
#include "geognn/rng.hpp"

namespace geognn {

std::vector<int> DualGraph::degrees() const {
  std::vector<int> deg(num_atoms, 0);
  for (std::size_t i = 0; i < bond_a.size(); ++i) {
    ++deg[bond_a[i]];
    ++deg[bond_b[i]];
  }
  return deg;
}

double angle_between(const Vec3& p_end1, const Vec3& p_center, const Vec3& p_end2) {
  const Vec3 u = p_end1 - p_center;
  const Vec3 v = p_end2 - p_center;
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw DataError("degenerate bond angle: zero-length arm");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

DualGraph build_dual_graph(const Molecule& mol) {
  validate(mol);
  DualGraph g;
  const std::size_t n = mol.num_atoms();
  g.num_atoms = n;

  std::vector<std::vector<std::uint32_t>> incident(n);
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) {
    const auto [a, b] = std::minmax(mol.bonds[i].a, mol.bonds[i].b);
    g.bond_a.push_back(a);
    g.bond_b.push_back(b);
    const double len = (mol.coords[a] - mol.coords[b]).norm();
    if (!(len > 0.0)) {
      throw DataError("molecule '" + mol.id + "': bonded atoms " + std::to_string(a) + " and " +
                      std::to_string(b) + " coincide");
    }
    g.lengths.push_back(len);
    incident[a].push_back(static_cast<std::uint32_t>(i));
    incident[b].push_back(static_cast<std::uint32_t>(i));
  }

  auto other_end = [&](std::uint32_t bond, std::uint32_t atom) {
    return g.bond_a[bond] == atom ? g.bond_b[bond] : g.bond_a[bond];
  };
  for (std::uint32_t u = 0; u < n; ++u) {
    const auto& inc = incident[u];
    for (std::size_t i = 0; i < inc.size(); ++i) {
      for (std::size_t j = i + 1; j < inc.size(); ++j) {
        BondAngle ang;
        ang.center = u;
        ang.bond1 = inc[i];
        ang.bond2 = inc[j];
        ang.end1 = other_end(inc[i], u);
        ang.end2 = other_end(inc[j], u);
        g.angle_values.push_back(angle_between(mol.coords[ang.end1], mol.coords[u], mol.coords[ang.end2]));
        g.angles.push_back(ang);
      }
    }
  }

  g.distances = Tensor(n, n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double d = (mol.coords[u] - mol.coords[v]).norm();
      g.distances(u, v) = d;
      g.distances(v, u) = d;
    }
  }

  index_messages(g);
  return g;
}

void index_messages(DualGraph& g) {
  g.edge_src.clear();
  g.edge_dst.clear();
  g.edge_bond.clear();
  g.angle_msg_src.clear();
  g.angle_msg_dst.clear();
  g.angle_msg_angle.clear();
  for (std::uint32_t i = 0; i < g.num_bonds(); ++i) {
    g.edge_src.push_back(g.bond_a[i]);
    g.edge_dst.push_back(g.bond_b[i]);
    g.edge_bond.push_back(i);
    g.edge_src.push_back(g.bond_b[i]);
    g.edge_dst.push_back(g.bond_a[i]);
    g.edge_bond.push_back(i);
  }
  for (std::uint32_t k = 0; k < g.num_angles(); ++k) {
    const BondAngle& a = g.angles[k];
    g.angle_msg_src.push_back(a.bond2);
    g.angle_msg_dst.push_back(a.bond1);
    g.angle_msg_angle.push_back(k);
    g.angle_msg_src.push_back(a.bond1);
    g.angle_msg_dst.push_back(a.bond2);
    g.angle_msg_angle.push_back(k);
  }
}

MaskSelection select_mask(const DualGraph& graph, double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("mask ratio must be in (0, 1]");
  MaskSelection sel;
  const std::size_t n = graph.num_atoms;
  if (n == 0) return sel;
  std::size_t k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  sel.atoms.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(sel.atoms.begin(), sel.atoms.end());

  std::vector<bool> chosen(n, false);
  for (auto a : sel.atoms) chosen[a] = true;
  for (std::uint32_t b = 0; b < graph.num_bonds(); ++b) {
    if (chosen[graph.bond_a[b]] || chosen[graph.bond_b[b]]) {
      sel.bonds.push_back(b);
      sel.bond_lengths.push_back(graph.lengths[b]);
    }
  }
  for (std::uint32_t a = 0; a < graph.num_angles(); ++a) {
    if (chosen[graph.angles[a].center]) {
      sel.angles.push_back(a);
      sel.angle_values.push_back(graph.angle_values[a]);
    }
  }
  return sel;
}

}  // namespace geognn
