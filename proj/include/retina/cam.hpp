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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "retina/image.hpp"
#include "retina/tensor.hpp"

namespace retina {

/// Class activation map, h x w row-major.
struct Heatmap {
  enum class Range { Raw, Normalized };

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  Range range = Range::Raw;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  double mean() const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

/// M_c(x, y) = sum_k W[c, k] f_k(x, y) over the final feature maps.
Heatmap compute_cam(const nn::Tensor& feature_maps, const nn::Tensor& classifier_weights, int class_id);

/// (v - min) / (max - min); a constant map becomes all 0.5.
Heatmap normalize_heatmap(const Heatmap& raw);

/// Align-corners bilinear upsampling; shrinking is rejected.
Heatmap upsample_bilinear(const Heatmap& map, std::size_t height, std::size_t width);

/// Blue (0) -> green (0.5) -> red (1), linear between the breakpoints.
/// Version 1 of the colormap; golden files depend on it.
std::array<double, 3> heat_color(double t);

/// (1 - alpha) * gray(image) + alpha * heat_color(heat), rounded per channel.
/// The result is always RGB.
RetinalImage overlay(const RetinalImage& image, const Heatmap& heat, double alpha);

/// Normalized map as an 8-bit grayscale image.
RetinalImage heatmap_image(const Heatmap& map);

/// "<height> <width> raw|normalized" then one line of values per row.
std::string heatmap_to_text(const Heatmap& map);
Heatmap heatmap_from_text(std::string_view text);

}  // namespace retina
