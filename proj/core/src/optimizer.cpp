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

#include "geognn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "geognn/errors.hpp"

namespace geognn {

double global_grad_norm(const GradBuffer& grads) {
  double s = 0.0;
  for (const Tensor& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * g[i];
  return std::sqrt(s);
}

void adam_step(ParamStore& store, const GradBuffer& grads, const LearningRateFn& lr, std::uint64_t t,
               const AdamConfig& config) {
  if (t < 1) throw std::invalid_argument("adam_step: step counter starts at 1");
  if (grads.size() != store.size()) throw std::invalid_argument("adam_step: gradient buffer size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) continue;
    if (!grads[i].same_shape(store[i].value)) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + store[i].name);
    }
    if (!grads[i].all_finite()) throw NumericalError("non-finite gradient for " + store[i].name);
  }
  double clip = 1.0;
  if (config.max_grad_norm > 0.0) {
    const double norm = global_grad_norm(grads);
    if (norm > config.max_grad_norm) clip = config.max_grad_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) continue;
    Parameter& p = store[i];
    const double rate = lr(p.name);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = grads[i][j] * clip;
      p.moment1[j] = config.beta1 * p.moment1[j] + (1.0 - config.beta1) * g;
      p.moment2[j] = config.beta2 * p.moment2[j] + (1.0 - config.beta2) * g * g;
      const double m_hat = p.moment1[j] / bc1;
      const double v_hat = p.moment2[j] / bc2;
      p.value[j] -= rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace geognn
