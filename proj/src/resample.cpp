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

#include "retina/resample.hpp"

#include <cmath>

#include "retina/error.hpp"

namespace retina {

std::vector<double> resize_bilinear(std::span<const double> plane, std::size_t h, std::size_t w, std::size_t H,
                                    std::size_t W) {
  if (h == 0 || w == 0 || H == 0 || W == 0) throw ShapeError("resize_bilinear: empty extent");
  if (plane.size() != h * w) throw ShapeError("resize_bilinear: plane size does not match extents");
  std::vector<double> out(H * W);
  const double sy = H > 1 ? static_cast<double>(h - 1) / static_cast<double>(H - 1) : 0.0;
  const double sx = W > 1 ? static_cast<double>(w - 1) / static_cast<double>(W - 1) : 0.0;
  for (std::size_t Y = 0; Y < H; ++Y) {
    const double fy = static_cast<double>(Y) * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(std::floor(fy)), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t X = 0; X < W; ++X) {
      const double fx = static_cast<double>(X) * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(std::floor(fx)), w - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = plane[y0 * w + x0] * (1.0 - tx) + plane[y0 * w + x1] * tx;
      const double bottom = plane[y1 * w + x0] * (1.0 - tx) + plane[y1 * w + x1] * tx;
      out[Y * W + X] = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

}  // namespace retina
