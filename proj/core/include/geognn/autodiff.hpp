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
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "geognn/tensor.hpp"

namespace geognn {

class Tape;
class ParamStore;

// Per-parameter gradient slots, indexed like the ParamStore that produced
// them. Unused parameters keep an empty tensor.
using GradBuffer = std::vector<Tensor>;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Reverse-mode tape. Ops are appended in evaluation order, so the node list
// is already topologically sorted and backward() is a single reverse sweep.
// A tape is single-threaded; use one tape per molecule for fan-out.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Differentiable input owned by the tape (used by gradient checks).
  Var leaf(Tensor value);
  // Binds parameter `index` of `store`. The store must outlive the tape.
  // Repeated calls return the same node.
  Var parameter(const ParamStore& store, std::size_t index);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() target w.r.t. `v`; zeros if `v` did not
  // contribute.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse.
  void backward(Var loss);

  // Gradients of every bound parameter, shaped like `store`.
  GradBuffer parameter_gradients(const ParamStore& store) const;

  std::size_t size() const { return nodes_.size(); }

  // Internal: used by op implementations.
  Var push(Tensor value, std::string_view op, std::vector<std::size_t> inputs, BackwardFn fn);
  Tensor& grad_slot(std::size_t id);
  const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }
  bool needs(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::optional<std::size_t> param_index;
  };

  const Tensor& node_value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }

  std::vector<Node> nodes_;
  std::vector<std::optional<std::size_t>> param_nodes_;
  const ParamStore* bound_store_ = nullptr;
};

// Products and elementwise ops. Elementwise binary ops accept either
// identical shapes or a 1x1 scalar on one side.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var scale(Var x, Real factor);

// x: [n, d] plus bias: [1, d] broadcast over rows.
Var add_bias(Var x, Var bias);
// x * w + b.
Var linear(Var x, Var w, Var b);

// Row i of the result is the sum of rows j with segment_ids[j] == i,
// accumulated in ascending j. Empty segments are zero rows.
Var segment_sum(Var values, std::span<const std::uint32_t> segment_ids, std::size_t num_segments);
// Row i of the result is row indices[i] of x.
Var gather_rows(Var x, std::span<const std::uint32_t> indices);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);

// Per-row normalization with learned scale and shift ([1, d] each).
Var layer_norm(Var x, Var gamma, Var beta, Real eps = 1e-5);
// Inverted dropout. Mask bit i is a pure function of (seed, i). Identity
// when `training` is false or rate is zero.
Var dropout(Var x, Real rate, std::uint64_t seed, bool training);

Var sum(Var x);
Var mean(Var x);
// [n, d] -> [1, d]; n must be positive.
Var mean_rows(Var x);

// Mean over rows of -sum_c target[r, c] * log softmax(logits[r, :])_c.
Var softmax_cross_entropy(Var logits, const Tensor& target);
// Mean over entries with mask != 0 of the logistic loss. Returns a 0 constant
// when nothing is selected.
Var bce_with_logits(Var logits, const Tensor& targets, const Tensor& mask);

}  // namespace geognn
