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

#include "retina/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "retina/error.hpp"

namespace retina::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.passed; });
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  for (const auto& b : blocks) {
    out << (b.passed ? "ok   " : "FAIL ") << b.name << " max_rel_error=" << b.max_rel_error << " at "
        << b.worst_index;
    if (!b.failure.empty()) out << " (" << b.failure << ")";
    out << "\n";
  }
  return out.str();
}

GradCheckReport finite_difference_check(const std::function<double()>& loss_fn, const NamedParams& params,
                                        double eps, double tol) {
  if (!(eps > 0.0)) throw Error("finite_difference_check: eps must be positive");
  GradCheckReport report;
  for (const auto& [name, p] : params) {
    BlockCheck block;
    block.name = name;
    const auto grad = p->grad();
    auto values = p->data();
    for (std::size_t i = 0; i < values.size() && block.failure.empty(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss_fn();
      values[i] = saved - eps;
      const double down = loss_fn();
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(grad[i])) {
        block.failure = "non-finite value while probing element " + std::to_string(i);
        block.worst_index = i;
        block.max_rel_error = INFINITY;
        break;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(grad[i], numeric);
      if (err > block.max_rel_error) {
        block.max_rel_error = err;
        block.worst_index = i;
      }
    }
    block.passed = block.failure.empty() && block.max_rel_error < tol;
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace retina::nn
