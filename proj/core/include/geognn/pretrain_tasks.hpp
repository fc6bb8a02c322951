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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geognn/autodiff.hpp"
#include "geognn/dual_graph.hpp"
#include "geognn/featurizer.hpp"
#include "geognn/model.hpp"

namespace geognn {

// Which self-supervised objectives contribute to the pretraining loss.
struct TaskSelection {
  bool length = true;
  bool angle = true;
  bool distance = true;
  bool fingerprint = true;
  double mask_ratio = 0.15;
  double fingerprint_weight = 1.0;
  // 0 uses every ordered atom pair; otherwise a seeded sample of this many
  // pairs per molecule.
  std::size_t max_distance_pairs = 0;

  friend bool operator==(const TaskSelection&, const TaskSelection&) = default;
};

// Parses "length,angle,distance,fingerprint" (any subset, any order).
TaskSelection parse_task_list(const std::string& list, TaskSelection base = {});
std::string task_list_string(const TaskSelection& tasks);

// Uniform 1 Angstrom bins over [0, C); d >= C - 1 lands in the last bin.
std::size_t bin_distance(double d, std::size_t num_bins);
std::vector<double> bin_distance_one_hot(double d, std::size_t num_bins);

// Mean squared error of the length head over masked bonds; 0 if none.
Var loss_length(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                const DualGraph& graph, const MaskSelection& targets);
// Mean squared error of the angle head over masked angles; 0 if none.
Var loss_angle(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
               const DualGraph& graph, const MaskSelection& targets);
// Mean over ordered atom pairs (diagonal included) of the cross-entropy
// between bin(d_uv) and the distance head's softmax. 0 when |V| < 2.
// `pairs`, when given, restricts the sum to those (u, v) pairs.
Var loss_distance(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                  const DualGraph& graph,
                  std::optional<std::span<const std::pair<std::uint32_t, std::uint32_t>>> pairs = std::nullopt);
// Mean binary cross-entropy with logits over fingerprint bits; 0 for B = 0.
Var loss_fingerprint(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                     std::span<const std::uint8_t> bits);

// Featurized molecule ready for the network.
struct Sample {
  std::string id;
  DualGraph graph;
  EncodedGraph encoded;
  std::optional<std::vector<std::uint8_t>> fingerprint;
};

Sample make_sample(const Molecule& mol, const FeatureConfig& features);

struct PretrainTerms {
  Var total;
  Var length;
  Var angle;
  Var distance;
  Var fingerprint;
};

// Masks the molecule with a stream seeded by `seed`, runs one forward pass,
// and sums the enabled objectives with unit weights (fingerprint scaled by
// its weight and only when the sample carries bits).
PretrainTerms pretrain_terms(Tape& tape, const ParamStore& store, const GeoGnn& model, const Sample& sample,
                             const TaskSelection& tasks, std::uint64_t seed, Mode mode);

struct PretrainLossValue {
  double total = 0.0;
  double length = 0.0;
  double angle = 0.0;
  double distance = 0.0;
  double fingerprint = 0.0;
};

// Mean of the per-molecule pretraining loss over a batch, with gradients
// accumulated into `grads` (shaped like `store`) when non-null. Molecule i
// masks and drops out with seeds[i]; gradients are reduced in batch order.
PretrainLossValue loss_pre(std::span<const Sample* const> batch, std::span<const std::uint64_t> seeds,
                           const ParamStore& store, const GeoGnn& model, const TaskSelection& tasks, Mode mode,
                           GradBuffer* grads, std::size_t threads = 1);

}  // namespace geognn
