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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace retina {

enum class Modality { FA, CFP };

std::string to_string(Modality m);
Modality parse_modality(std::string_view text);

/// 8-bit image, interleaved channels, row-major. FA is single-channel
/// grayscale, CFP is RGB.
struct RetinalImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  Modality modality = Modality::FA;
  std::vector<std::uint8_t> pixels;

  RetinalImage() = default;
  RetinalImage(int w, int h, int c);

  std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  /// Throws DataError when the buffer length or the channel/modality pairing
  /// is inconsistent.
  void validate() const;

  friend bool operator==(const RetinalImage&, const RetinalImage&) = default;
};

/// Decodes binary PGM (P5), PPM (P6) or 8-bit non-interlaced grayscale/RGB
/// PNG. Modality follows the channel count.
RetinalImage decode_image(std::string_view bytes);
RetinalImage load_image(const std::filesystem::path& path);

std::string encode_pnm(const RetinalImage& image);
std::string encode_png(const RetinalImage& image);
/// Chooses the encoding from the extension (.pgm/.ppm/.png).
void save_image(const std::filesystem::path& path, const RetinalImage& image);

/// ITU-R 601 luma, rounded to nearest.
RetinalImage to_grayscale(const RetinalImage& image);

}  // namespace retina
