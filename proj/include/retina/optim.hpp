/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retina/rng.hpp"
#include "retina/tensor.hpp"

namespace retina::nn {

struct SgdConfig {
  double learning_rate = 0.1;
  double decay_factor = 5.0;
  int decay_period_epochs = 50;

  /// Throws DataError unless learning_rate > 0, decay_factor > 1 and
  /// decay_period_epochs >= 1.
  void validate() const;
};

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

/// p <- p - lr * grad(p). Every parameter must carry a gradient.
void sgd_step(const NamedParams& params, double learning_rate);
void zero_grads(const NamedParams& params);
/// Scales every gradient, e.g. 1/batch after accumulating a mini-batch.
void scale_grads(const NamedParams& params, double factor);

/// Glorot uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)). Values are
/// rounded to float32 so a freshly initialised model survives a checkpoint
/// round trip bit-exactly.
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace retina::nn
