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

#include "retina/cam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "retina/error.hpp"
#include "retina/resample.hpp"

namespace retina {

double Heatmap::mean() const {
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

Heatmap compute_cam(const nn::Tensor& feature_maps, const nn::Tensor& classifier_weights, int class_id) {
  if (feature_maps.rank() != 3) throw ShapeError("compute_cam: feature maps must be K x h x w");
  if (classifier_weights.rank() != 2 || classifier_weights.dim(1) != feature_maps.dim(0)) {
    throw ShapeError("compute_cam: classifier weights " + nn::shape_string(classifier_weights.shape()) +
                     " do not match feature maps " + nn::shape_string(feature_maps.shape()));
  }
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= classifier_weights.dim(0)) {
    throw Error("compute_cam: class " + std::to_string(class_id) + " outside [0, " +
                std::to_string(classifier_weights.dim(0)) + ")");
  }
  const std::size_t K = feature_maps.dim(0), area = feature_maps.dim(1) * feature_maps.dim(2);
  Heatmap map{feature_maps.dim(1), feature_maps.dim(2), std::vector<double>(area, 0.0), Heatmap::Range::Raw};
  for (std::size_t k = 0; k < K; ++k) {
    const double w = classifier_weights.at(static_cast<std::size_t>(class_id), k);
    for (std::size_t i = 0; i < area; ++i) map.values[i] += w * feature_maps[k * area + i];
  }
  return map;
}

Heatmap normalize_heatmap(const Heatmap& raw) {
  Heatmap out = raw;
  out.range = Heatmap::Range::Normalized;
  const auto [lo, hi] = std::minmax_element(raw.values.begin(), raw.values.end());
  const double span = *hi - *lo;
  for (double& v : out.values) v = span > 0.0 ? (v - *lo) / span : 0.5;
  return out;
}

Heatmap upsample_bilinear(const Heatmap& map, std::size_t height, std::size_t width) {
  if (height < map.height || width < map.width) {
    throw ShapeError("upsample_bilinear: cannot shrink " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                     " to " + std::to_string(height) + "x" + std::to_string(width));
  }
  Heatmap out{height, width, resize_bilinear(map.values, map.height, map.width, height, width), map.range};
  if (map.range == Heatmap::Range::Normalized) {
    for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

std::array<double, 3> heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (t <= 0.5) {
    const double s = t / 0.5;
    return {0.0, 255.0 * s, 255.0 * (1.0 - s)};
  }
  const double s = (t - 0.5) / 0.5;
  return {255.0 * s, 255.0 * (1.0 - s), 0.0};
}

RetinalImage overlay(const RetinalImage& image, const Heatmap& heat, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("overlay: alpha must be in [0, 1]");
  if (heat.height != static_cast<std::size_t>(image.height) || heat.width != static_cast<std::size_t>(image.width)) {
    throw ShapeError("overlay: heatmap " + std::to_string(heat.height) + "x" + std::to_string(heat.width) +
                     " does not match image " + std::to_string(image.height) + "x" + std::to_string(image.width));
  }
  const RetinalImage gray = to_grayscale(image);
  RetinalImage out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto color = heat_color(heat.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
      const double g = gray.at(x, y, 0);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - alpha) * g + alpha * color[c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

RetinalImage heatmap_image(const Heatmap& map) {
  const Heatmap norm = map.range == Heatmap::Range::Normalized ? map : normalize_heatmap(map);
  RetinalImage out(static_cast<int>(map.width), static_cast<int>(map.height), 1);
  for (std::size_t i = 0; i < norm.values.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(norm.values[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

std::string heatmap_to_text(const Heatmap& map) {
  std::string out = std::to_string(map.height) + " " + std::to_string(map.width) + " " +
                    (map.range == Heatmap::Range::Raw ? "raw" : "normalized") + "\n";
  char buf[32];
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", map.at(y, x));
      if (x) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Heatmap heatmap_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  Heatmap map;
  std::string range;
  if (!(in >> map.height >> map.width >> range) || map.height == 0 || map.width == 0) {
    throw DataError("heatmap text: malformed header");
  }
  if (range == "raw") {
    map.range = Heatmap::Range::Raw;
  } else if (range == "normalized") {
    map.range = Heatmap::Range::Normalized;
  } else {
    throw DataError("heatmap text: unknown range '" + range + "'");
  }
  map.values.resize(map.height * map.width);
  for (double& v : map.values) {
    if (!(in >> v)) throw DataError("heatmap text: too few values");
  }
  return map;
}

}  // namespace retina
