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

#include "retina/optim.hpp"

#include <cmath>

#include "retina/error.hpp"

namespace retina::nn {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DataError("sgd: learning_rate must be positive");
  if (!(decay_factor > 1.0)) throw DataError("sgd: decay_factor must be greater than 1");
  if (decay_period_epochs < 1) throw DataError("sgd: decay_period_epochs must be at least 1");
}

void sgd_step(const NamedParams& params, double learning_rate) {
  for (const auto& [name, p] : params) {
    if (!p->has_grad()) throw Error("sgd_step: parameter '" + name + "' has no gradient");
  }
  for (const auto& [name, p] : params) {
    auto values = p->data();
    auto grad = p->grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= learning_rate * grad[i];
  }
}

void zero_grads(const NamedParams& params) {
  for (const auto& entry : params) entry.second->zero_grad();
}

void scale_grads(const NamedParams& params, double factor) {
  for (const auto& [name, p] : params) {
    for (double& g : p->grad()) g *= factor;
  }
}

Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
  return t;
}

}  // namespace retina::nn
