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

#include "geognn/autodiff.hpp"
#include "geognn/dual_graph.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/params.hpp"

namespace geognn {

struct ModelConfig {
  std::size_t num_blocks = 8;
  std::size_t hidden = 32;
  double dropout = 0.2;
  std::size_t distance_bins = 30;
  // Hidden width of the length/angle/distance heads (2-layer MLPs).
  std::size_t geometry_head_hidden = 256;
  // Hidden width of the downstream head (3-layer MLP).
  std::size_t downstream_hidden = 128;
  // Outputs of the downstream head; 0 leaves it out.
  std::size_t num_tasks = 0;
  // Width of the fingerprint head; 0 leaves it out.
  std::size_t fingerprint_bits = 0;
  // false: bond and atom updates of block k both read block k-1 states.
  // true: the atom update reads the bond states produced in block k.
  bool sequential_update = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);

enum class Mode { kTrain, kEval };

// Final atom/bond representations and the mean-pooled graph vector.
struct GraphEmbedding {
  Var atoms;  // [|V|, hidden]
  Var bonds;  // [|E|, hidden]
  Var graph;  // [1, hidden]
};

// Dual-graph network. Stateless apart from its configuration; parameters
// live in a ParamStore so several tapes can share one read-only snapshot.
class GeoGnn {
 public:
  GeoGnn(ModelConfig config, FeatureLayout layout);

  const ModelConfig& config() const { return config_; }
  const FeatureLayout& layout() const { return layout_; }

  // Adds encoder, block and pretraining-head parameters, plus the
  // fingerprint and downstream heads when their widths are non-zero.
  void init_params(ParamStore& store, std::uint64_t seed) const;
  void add_downstream_head(ParamStore& store, std::size_t num_tasks, std::uint64_t seed) const;
  void add_fingerprint_head(ParamStore& store, std::size_t bits, std::uint64_t seed) const;

  // `dropout_seed` feeds the dropout masks in train mode; ignored in eval.
  GraphEmbedding forward(Tape& tape, const ParamStore& store, const DualGraph& graph,
                         const EncodedGraph& encoded, Mode mode, std::uint64_t dropout_seed = 0) const;

  // 2-layer MLP on concat(h_u, h_v) -> [n, 1].
  Var head_length(Tape& tape, const ParamStore& store, Var h_u, Var h_v) const;
  // 2-layer MLP on concat(h_end1, h_center, h_end2) -> [n, 1].
  Var head_angle(Tape& tape, const ParamStore& store, Var h_end1, Var h_center, Var h_end2) const;
  // 2-layer MLP on concat(h_u, h_v) -> [n, distance_bins] logits.
  Var head_distance(Tape& tape, const ParamStore& store, Var h_u, Var h_v) const;
  // Linear map of h_G -> [1, bits] logits.
  Var head_fingerprint(Tape& tape, const ParamStore& store, Var h_graph) const;
  // 3-layer MLP of h_G -> [1, num_tasks].
  Var head_downstream(Tape& tape, const ParamStore& store, Var h_graph) const;

  static bool is_head_parameter(const std::string& name);
  static bool is_downstream_parameter(const std::string& name);

 private:
  ModelConfig config_;
  FeatureLayout layout_;
};

}  // namespace geognn
