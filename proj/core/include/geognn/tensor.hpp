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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace geognn {

using Real = double;

// Dense row-major matrix. Every value in the engine is rank 2: vectors are
// 1 x n rows and scalars are 1 x 1. Zero rows are allowed.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Real fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data);

  static Tensor scalar(Real v) { return Tensor(1, 1, v); }
  static Tensor row(std::initializer_list<Real> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  std::span<Real> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Real item() const;
  void fill(Real v);
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// out += a * b, with a: [n, k], b: [k, m], out: [n, m].
void gemm_accumulate(const Tensor& a, const Tensor& b, Tensor& out);
// out += a^T * b, with a: [k, n], b: [k, m], out: [n, m].
void gemm_at_b_accumulate(const Tensor& a, const Tensor& b, Tensor& out);
// out += a * b^T, with a: [n, k], b: [m, k], out: [n, m].
void gemm_a_bt_accumulate(const Tensor& a, const Tensor& b, Tensor& out);

Real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace geognn
