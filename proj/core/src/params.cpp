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

#include "geognn/params.hpp"

#include <cmath>
#include <stdexcept>

#include "geognn/rng.hpp"

namespace geognn {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  const std::size_t idx = params_.size();
  index_.emplace(name, idx);
  Parameter p;
  p.name = std::move(name);
  p.moment1 = Tensor(value.rows(), value.cols());
  p.moment2 = Tensor(value.rows(), value.cols());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  return idx;
}

std::size_t ParamStore::add_uniform(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(rows));
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return add(std::move(name), std::move(t));
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + std::string(name));
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto& p : params_)
    if (!p.value.all_finite()) return false;
  return true;
}

void ParamStore::reset_moments() {
  for (auto& p : params_) {
    p.moment1.fill(0.0);
    p.moment2.fill(0.0);
  }
}

GradBuffer ParamStore::zero_grads() const {
  GradBuffer g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

void accumulate(GradBuffer& dst, const GradBuffer& src, Real weight) {
  if (dst.size() != src.size()) throw std::invalid_argument("gradient buffer size mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty()) continue;
    if (dst[i].empty()) dst[i] = Tensor(src[i].rows(), src[i].cols());
    if (!dst[i].same_shape(src[i])) throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t j = 0; j < src[i].size(); ++j) dst[i][j] += weight * src[i][j];
  }
}

}  // namespace geognn
