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

#include "geognn/model.hpp"

#include <cmath>
#include <vector>

#include "geognn/errors.hpp"
#include "geognn/rng.hpp"

namespace geognn {

namespace {

Var param(Tape& tape, const ParamStore& store, const std::string& name) {
  return tape.parameter(store, store.index_of(name));
}

Var dense(Tape& tape, const ParamStore& store, const std::string& prefix, Var x) {
  return linear(x, param(tape, store, prefix + ".w"), param(tape, store, prefix + ".b"));
}

void add_dense(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  store.add_uniform(prefix + ".w", in, out, rng);
  // Bias drawn with the same fan-in bound as the weights.
  Tensor b(1, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : b.values()) v = rng.uniform(-bound, bound);
  store.add(prefix + ".b", std::move(b));
}

// Appends the mask indicator column to a feature matrix.
Tensor with_mask_column(const Tensor& features, const std::vector<std::uint8_t>& flags) {
  Tensor out(features.rows(), features.cols() + 1);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) out(r, c) = features(r, c);
    out(r, features.cols()) = flags[r] ? 1.0 : 0.0;
  }
  return out;
}

std::string block_prefix(std::size_t k) { return "block" + std::to_string(k); }

}  // namespace

void validate(const ModelConfig& c) {
  if (c.num_blocks < 1) throw ConfigError("model needs at least one block");
  if (c.hidden < 1) throw ConfigError("hidden width must be positive");
  if (c.distance_bins < 2) throw ConfigError("distance vocabulary needs at least two bins");
  if (c.geometry_head_hidden < 1 || c.downstream_hidden < 1) throw ConfigError("head widths must be positive");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

GeoGnn::GeoGnn(ModelConfig config, FeatureLayout layout) : config_(config), layout_(std::move(layout)) {
  validate(config_);
}

bool GeoGnn::is_head_parameter(const std::string& name) { return name.starts_with("head."); }

bool GeoGnn::is_downstream_parameter(const std::string& name) { return name.starts_with("head.down."); }

void GeoGnn::init_params(ParamStore& store, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0x1a17));
  const std::size_t h = config_.hidden;
  add_dense(store, "encoder.atom", layout_.atom_width() + 1, h, rng);
  add_dense(store, "encoder.bond", layout_.bond_width() + 1, h, rng);
  for (std::size_t k = 0; k < config_.num_blocks; ++k) {
    const std::string p = block_prefix(k);
    add_dense(store, p + ".angle_proj", layout_.angle_width() + 1, h, rng);
    for (const char* path : {".bond", ".atom"}) {
      add_dense(store, p + path + ".mlp0", h, h, rng);
      add_dense(store, p + path + ".mlp1", h, h, rng);
      store.add(p + path + ".norm.gamma", Tensor(1, h, 1.0));
      store.add(p + path + ".norm.beta", Tensor(1, h, 0.0));
    }
  }
  const std::size_t gh = config_.geometry_head_hidden;
  add_dense(store, "head.length.0", 2 * h, gh, rng);
  add_dense(store, "head.length.1", gh, 1, rng);
  add_dense(store, "head.angle.0", 3 * h, gh, rng);
  add_dense(store, "head.angle.1", gh, 1, rng);
  add_dense(store, "head.distance.0", 2 * h, gh, rng);
  add_dense(store, "head.distance.1", gh, config_.distance_bins, rng);
  if (config_.fingerprint_bits > 0) add_fingerprint_head(store, config_.fingerprint_bits, seed);
  if (config_.num_tasks > 0) add_downstream_head(store, config_.num_tasks, seed);
}

void GeoGnn::add_downstream_head(ParamStore& store, std::size_t num_tasks, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0xd0));
  const std::size_t h = config_.hidden, dh = config_.downstream_hidden;
  add_dense(store, "head.down.0", h, dh, rng);
  add_dense(store, "head.down.1", dh, dh, rng);
  add_dense(store, "head.down.2", dh, num_tasks, rng);
}

void GeoGnn::add_fingerprint_head(ParamStore& store, std::size_t bits, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0xf9));
  add_dense(store, "head.fingerprint", config_.hidden, bits, rng);
}

GraphEmbedding GeoGnn::forward(Tape& tape, const ParamStore& store, const DualGraph& graph,
                               const EncodedGraph& encoded, Mode mode, std::uint64_t dropout_seed) const {
  const std::size_t n_atoms = graph.num_atoms;
  const std::size_t n_bonds = graph.num_bonds();
  if (n_atoms == 0) throw DataError("cannot embed a molecule without atoms");
  if (encoded.atom_features.rows() != n_atoms || encoded.bond_features.rows() != n_bonds ||
      encoded.angle_features.rows() != graph.num_angles()) {
    throw std::invalid_argument("forward: encoded features do not match the graph");
  }
  if (encoded.atom_features.cols() != layout_.atom_width() ||
      encoded.bond_features.cols() != layout_.bond_width() ||
      encoded.angle_features.cols() != layout_.angle_width()) {
    throw ConfigError("forward: feature widths do not match the model's feature layout");
  }
  const bool training = mode == Mode::kTrain;

  const Var x_atom = tape.constant(with_mask_column(encoded.atom_features, encoded.atom_masked));
  const Var x_bond = tape.constant(with_mask_column(encoded.bond_features, encoded.bond_masked));
  const Var x_angle = tape.constant(with_mask_column(encoded.angle_features, encoded.angle_masked));

  Var h_atom = dense(tape, store, "encoder.atom", x_atom);
  Var h_bond = dense(tape, store, "encoder.bond", x_bond);

  // MLP -> layer norm -> graph-size norm -> residual -> dropout.
  auto combine = [&](Var agg, const std::string& prefix, Var residual, std::size_t count, std::uint64_t seed) {
    Var z = dense(tape, store, prefix + ".mlp1", relu(dense(tape, store, prefix + ".mlp0", agg)));
    z = layer_norm(z, param(tape, store, prefix + ".norm.gamma"), param(tape, store, prefix + ".norm.beta"));
    if (count > 0) z = scale(z, 1.0 / std::sqrt(static_cast<double>(count)));
    z = add(z, residual);
    return dropout(z, config_.dropout, seed, training);
  };

  for (std::size_t k = 0; k < config_.num_blocks; ++k) {
    const std::string p = block_prefix(k);
    try {
      const Var angle_emb = dense(tape, store, p + ".angle_proj", x_angle);
      // Bond-angle graph: each angle carries h_dst + h_src + angle embedding
      // into both of its bonds.
      const Var bond_msg = add(add(gather_rows(h_bond, graph.angle_msg_dst), gather_rows(h_bond, graph.angle_msg_src)),
                               gather_rows(angle_emb, graph.angle_msg_angle));
      const Var bond_agg = segment_sum(bond_msg, graph.angle_msg_dst, n_bonds);
      const Var new_bond = combine(bond_agg, p + ".bond", h_bond, n_bonds, derive_seed(dropout_seed, 2 * k));

      const Var bond_state = config_.sequential_update ? new_bond : h_bond;
      const Var atom_msg = add(add(gather_rows(h_atom, graph.edge_dst), gather_rows(h_atom, graph.edge_src)),
                               gather_rows(bond_state, graph.edge_bond));
      const Var atom_agg = segment_sum(atom_msg, graph.edge_dst, n_atoms);
      const Var new_atom = combine(atom_agg, p + ".atom", h_atom, n_atoms, derive_seed(dropout_seed, 2 * k + 1));

      h_atom = new_atom;
      h_bond = new_bond;
    } catch (const NumericalError& e) {
      throw NumericalError("block " + std::to_string(k) + ": " + e.what());
    }
  }
  return GraphEmbedding{h_atom, h_bond, mean_rows(h_atom)};
}

Var GeoGnn::head_length(Tape& tape, const ParamStore& store, Var h_u, Var h_v) const {
  const Var hidden = relu(dense(tape, store, "head.length.0", concat_cols({h_u, h_v})));
  return dense(tape, store, "head.length.1", hidden);
}

Var GeoGnn::head_angle(Tape& tape, const ParamStore& store, Var h_end1, Var h_center, Var h_end2) const {
  const Var hidden = relu(dense(tape, store, "head.angle.0", concat_cols({h_end1, h_center, h_end2})));
  return dense(tape, store, "head.angle.1", hidden);
}

Var GeoGnn::head_distance(Tape& tape, const ParamStore& store, Var h_u, Var h_v) const {
  const Var hidden = relu(dense(tape, store, "head.distance.0", concat_cols({h_u, h_v})));
  return dense(tape, store, "head.distance.1", hidden);
}

Var GeoGnn::head_fingerprint(Tape& tape, const ParamStore& store, Var h_graph) const {
  if (!store.contains("head.fingerprint.w")) throw ConfigError("model has no fingerprint head");
  return dense(tape, store, "head.fingerprint", h_graph);
}

Var GeoGnn::head_downstream(Tape& tape, const ParamStore& store, Var h_graph) const {
  if (!store.contains("head.down.0.w")) throw ConfigError("model has no downstream head");
  Var z = relu(dense(tape, store, "head.down.0", h_graph));
  z = relu(dense(tape, store, "head.down.1", z));
  return dense(tape, store, "head.down.2", z);
}

}  // namespace geognn
