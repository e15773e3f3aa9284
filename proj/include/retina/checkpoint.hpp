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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "retina/tensor.hpp"

namespace retina {

/// Named parameters plus free-form metadata.
///
/// On disk: "RSCK", u16 version, u32 header length, a UTF-8 header with one
/// line per entry ("param <name> <d0,d1,...> <offset>" or
/// "meta <key> <json string>"), then the parameters as little-endian IEEE
/// float32 in header order. Offsets count float32 elements from the start of
/// the payload. Saving is lossy by design: fp64 values are rounded to the
/// nearest float32.
class ModelCheckpoint {
 public:
  static constexpr std::uint16_t kVersion = 1;

  std::map<std::string, nn::Tensor> params;
  std::map<std::string, std::string> meta;

  nn::Tensor& param(const std::string& name);
  const nn::Tensor& param(const std::string& name) const;
  bool has_param(const std::string& name) const { return params.count(name) > 0; }
  const std::string& meta_value(const std::string& key) const;

  /// Pointers into params whose names start with prefix, in name order.
  std::vector<std::pair<std::string, nn::Tensor*>> with_prefix(std::string_view prefix);
  /// Copies every parameter and metadata entry of other; names must not clash.
  void merge(const ModelCheckpoint& other);
  /// Rounds every value to float32 precision, i.e. what a save/load cycle yields.
  void quantize();

  std::string serialize() const;
  static ModelCheckpoint deserialize(std::string_view bytes);

  /// Write-then-rename, so a failed save never leaves a partial file.
  void save(const std::filesystem::path& path) const;
  static ModelCheckpoint load(const std::filesystem::path& path);

  /// Same parameter names, shapes and values, and the same metadata.
  friend bool operator==(const ModelCheckpoint& a, const ModelCheckpoint& b) {
    return a.params == b.params && a.meta == b.meta;
  }
};

/// Writes bytes to path through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace retina
