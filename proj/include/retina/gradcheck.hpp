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

#include <functional>
#include <string>
#include <vector>

#include "retina/optim.hpp"

namespace retina::nn {

struct BlockCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = false;
  /// Set when probing hit a non-finite loss.
  std::string failure;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;

  bool passed() const;
  double max_rel_error() const;
  std::string summary() const;
};

/// Relative error used by the checker: |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

/// Compares the gradients already stored on each parameter with central
/// differences (f(p + eps) - f(p - eps)) / (2 eps) of loss_fn, which must be
/// deterministic and read the parameters in place. Parameter values are
/// restored after probing.
GradCheckReport finite_difference_check(const std::function<double()>& loss_fn, const NamedParams& params,
                                        double eps, double tol);

}  // namespace retina::nn
