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

#include "geognn/pretrain_tasks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "geognn/errors.hpp"
#include "geognn/parallel.hpp"
#include "geognn/rng.hpp"

namespace geognn {

namespace {

Var zero(Tape& tape) { return tape.constant(Tensor::scalar(0.0)); }

Tensor column(const std::vector<double>& v) { return Tensor(v.size(), 1, v); }

}  // namespace

TaskSelection parse_task_list(const std::string& list, TaskSelection base) {
  base.length = base.angle = base.distance = base.fingerprint = false;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "length") base.length = true;
    else if (item == "angle") base.angle = true;
    else if (item == "distance") base.distance = true;
    else if (item == "fingerprint") base.fingerprint = true;
    else if (!item.empty()) throw ConfigError("unknown pretraining task '" + item + "'");
  }
  return base;
}

std::string task_list_string(const TaskSelection& t) {
  std::string out;
  auto put = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  put(t.length, "length");
  put(t.angle, "angle");
  put(t.distance, "distance");
  put(t.fingerprint, "fingerprint");
  return out;
}

std::size_t bin_distance(double d, std::size_t num_bins) {
  if (!(d >= 0.0)) throw std::invalid_argument("bin_distance: negative or NaN distance");
  if (num_bins == 0) throw std::invalid_argument("bin_distance: no bins");
  const double last = static_cast<double>(num_bins - 1);
  return d >= last ? num_bins - 1 : static_cast<std::size_t>(std::floor(d));
}

std::vector<double> bin_distance_one_hot(double d, std::size_t num_bins) {
  std::vector<double> v(num_bins, 0.0);
  v[bin_distance(d, num_bins)] = 1.0;
  return v;
}

Var loss_length(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                const DualGraph& graph, const MaskSelection& targets) {
  if (targets.bonds.empty()) return zero(tape);
  std::vector<std::uint32_t> us, vs;
  for (auto b : targets.bonds) {
    us.push_back(graph.bond_a[b]);
    vs.push_back(graph.bond_b[b]);
  }
  const Var pred = model.head_length(tape, store, gather_rows(emb.atoms, us), gather_rows(emb.atoms, vs));
  return mean(square(sub(pred, tape.constant(column(targets.bond_lengths)))));
}

Var loss_angle(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
               const DualGraph& graph, const MaskSelection& targets) {
  if (targets.angles.empty()) return zero(tape);
  std::vector<std::uint32_t> e1, c, e2;
  for (auto a : targets.angles) {
    e1.push_back(graph.angles[a].end1);
    c.push_back(graph.angles[a].center);
    e2.push_back(graph.angles[a].end2);
  }
  const Var pred = model.head_angle(tape, store, gather_rows(emb.atoms, e1), gather_rows(emb.atoms, c),
                                    gather_rows(emb.atoms, e2));
  return mean(square(sub(pred, tape.constant(column(targets.angle_values)))));
}

Var loss_distance(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                  const DualGraph& graph,
                  std::optional<std::span<const std::pair<std::uint32_t, std::uint32_t>>> pairs) {
  const std::size_t n = graph.num_atoms;
  if (n < 2) return zero(tape);
  std::vector<std::uint32_t> us, vs;
  if (pairs) {
    for (auto [u, v] : *pairs) {
      us.push_back(u);
      vs.push_back(v);
    }
  } else {
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t v = 0; v < n; ++v) {
        us.push_back(u);
        vs.push_back(v);
      }
    }
  }
  if (us.empty()) return zero(tape);
  const std::size_t bins = model.config().distance_bins;
  Tensor target(us.size(), bins);
  for (std::size_t i = 0; i < us.size(); ++i) target(i, bin_distance(graph.distances(us[i], vs[i]), bins)) = 1.0;
  const Var logits = model.head_distance(tape, store, gather_rows(emb.atoms, us), gather_rows(emb.atoms, vs));
  return softmax_cross_entropy(logits, target);
}

Var loss_fingerprint(Tape& tape, const ParamStore& store, const GeoGnn& model, const GraphEmbedding& emb,
                     std::span<const std::uint8_t> bits) {
  if (bits.empty()) return zero(tape);
  const Var logits = model.head_fingerprint(tape, store, emb.graph);
  if (logits.cols() != bits.size()) {
    throw DataError("fingerprint width " + std::to_string(bits.size()) + " does not match head width " +
                    std::to_string(logits.cols()));
  }
  Tensor targets(1, bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) targets[i] = bits[i];
  return bce_with_logits(logits, targets, Tensor(1, bits.size(), 1.0));
}

Sample make_sample(const Molecule& mol, const FeatureConfig& features) {
  Sample s;
  s.id = mol.id;
  s.graph = build_dual_graph(mol);
  s.encoded = encode(s.graph, mol, features);
  s.fingerprint = mol.fingerprint;
  return s;
}

PretrainTerms pretrain_terms(Tape& tape, const ParamStore& store, const GeoGnn& model, const Sample& sample,
                             const TaskSelection& tasks, std::uint64_t seed, Mode mode) {
  Rng mask_rng(derive_seed(seed, 1));
  MaskedContext ctx = mask_context(sample.graph, sample.encoded, tasks.mask_ratio, mask_rng);
  const GraphEmbedding emb =
      model.forward(tape, store, sample.graph, ctx.encoded, mode, derive_seed(seed, 2));

  PretrainTerms t;
  t.length = tasks.length ? loss_length(tape, store, model, emb, sample.graph, ctx.targets) : zero(tape);
  t.angle = tasks.angle ? loss_angle(tape, store, model, emb, sample.graph, ctx.targets) : zero(tape);
  if (tasks.distance) {
    const std::size_t n = sample.graph.num_atoms;
    if (tasks.max_distance_pairs > 0 && n * n > tasks.max_distance_pairs) {
      Rng pair_rng(derive_seed(seed, 3));
      std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
      for (std::size_t i = 0; i < tasks.max_distance_pairs; ++i) {
        pairs.emplace_back(static_cast<std::uint32_t>(pair_rng.below(n)),
                           static_cast<std::uint32_t>(pair_rng.below(n)));
      }
      t.distance = loss_distance(tape, store, model, emb, sample.graph,
                                 std::span<const std::pair<std::uint32_t, std::uint32_t>>(pairs));
    } else {
      t.distance = loss_distance(tape, store, model, emb, sample.graph);
    }
  } else {
    t.distance = zero(tape);
  }
  const bool use_fp = tasks.fingerprint && sample.fingerprint && !sample.fingerprint->empty() &&
                      model.config().fingerprint_bits > 0;
  t.fingerprint = use_fp ? loss_fingerprint(tape, store, model, emb, *sample.fingerprint) : zero(tape);
  t.total = add(add(add(t.length, t.angle), t.distance), scale(t.fingerprint, tasks.fingerprint_weight));
  return t;
}

PretrainLossValue loss_pre(std::span<const Sample* const> batch, std::span<const std::uint64_t> seeds,
                           const ParamStore& store, const GeoGnn& model, const TaskSelection& tasks, Mode mode,
                           GradBuffer* grads, std::size_t threads) {
  if (batch.empty()) throw std::invalid_argument("loss_pre: empty batch");
  if (seeds.size() != batch.size()) throw std::invalid_argument("loss_pre: one seed per molecule required");
  std::vector<PretrainLossValue> values(batch.size());
  std::vector<GradBuffer> per_mol(grads ? batch.size() : 0);
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Tape tape;
    const PretrainTerms t = pretrain_terms(tape, store, model, *batch[i], tasks, seeds[i], mode);
    values[i] = {t.total.value().item(), t.length.value().item(), t.angle.value().item(),
                 t.distance.value().item(), t.fingerprint.value().item()};
    if (grads) {
      tape.backward(t.total);
      per_mol[i] = tape.parameter_gradients(store);
    }
  });
  const double inv = 1.0 / static_cast<double>(batch.size());
  PretrainLossValue mean_value;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    mean_value.total += values[i].total * inv;
    mean_value.length += values[i].length * inv;
    mean_value.angle += values[i].angle * inv;
    mean_value.distance += values[i].distance * inv;
    mean_value.fingerprint += values[i].fingerprint * inv;
    if (grads) accumulate(*grads, per_mol[i], inv);
  }
  return mean_value;
}

}  // namespace geognn
