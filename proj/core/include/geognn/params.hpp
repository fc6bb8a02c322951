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
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geognn/autodiff.hpp"
#include "geognn/tensor.hpp"

namespace geognn {

class Rng;

struct Parameter {
  std::string name;
  Tensor value;
  // Adam first and second moments; same shape as value.
  Tensor moment1;
  Tensor moment2;
};

// Named, ordered collection of trainable tensors. Insertion order is the
// canonical order for checkpoints and gradient reduction.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value);
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) where fan_in = rows.
  std::size_t add_uniform(std::string name, std::size_t rows, std::size_t cols, Rng& rng);

  std::size_t size() const { return params_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(std::string_view name) { return params_[index_of(name)]; }
  const Parameter& at(std::string_view name) const { return params_[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t num_scalars() const;
  bool all_finite() const;
  void reset_moments();

  // Zero-initialised gradient buffer shaped like this store.
  GradBuffer zero_grads() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// dst += src, elementwise over matching slots; empty src slots are skipped.
void accumulate(GradBuffer& dst, const GradBuffer& src, Real weight = 1.0);

}  // namespace geognn
