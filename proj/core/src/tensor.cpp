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

#include "geognn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "geognn/rng.hpp"

namespace geognn {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string());
  }
}

Tensor Tensor::row(std::initializer_list<Real> values) {
  return Tensor(1, values.size(), std::vector<Real>(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<Real> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(n, m, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Real Tensor::item() const {
  if (data_.size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_string());
  return data_[0];
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + ", " + std::to_string(cols_) + "]";
}

void gemm_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    Real* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = pa[i * k + p];
      if (av == 0.0) continue;
      const Real* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void gemm_at_b_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const Real* brow = pb + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const Real av = pa[p * n + i];
      if (av == 0.0) continue;
      Real* orow = po + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void gemm_a_bt_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const Real* arow = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const Real* brow = pb + j * k;
      Real s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      po[i * m + j] += s;
    }
  }
}

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  Real m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace geognn
