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

#include <cstdint>
#include <functional>
#include <string>

#include "geognn/params.hpp"

namespace geognn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; 0 disables clipping.
  double max_grad_norm = 0.0;
};

// Learning rate for a parameter, chosen by name.
using LearningRateFn = std::function<double(const std::string& name)>;

// One bias-corrected Adam update with step counter `t` (>= 1). Parameters
// whose gradient slot is empty did not take part in the loss and are left
// untouched, moments included. Throws NumericalError on non-finite
// gradients before modifying anything.
void adam_step(ParamStore& store, const GradBuffer& grads, const LearningRateFn& lr, std::uint64_t t,
               const AdamConfig& config = {});

inline void adam_step(ParamStore& store, const GradBuffer& grads, double lr, std::uint64_t t,
                      const AdamConfig& config = {}) {
  adam_step(store, grads, [lr](const std::string&) { return lr; }, t, config);
}

double global_grad_norm(const GradBuffer& grads);

}  // namespace geognn
