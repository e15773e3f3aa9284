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
#include <vector>

#include "retina/image.hpp"
#include "retina/manifest.hpp"

namespace retina {

/// Procedural stand-in for a retinal dataset: each class has its own lesion
/// position and stripe frequency, its own keyword pool, and captions built
/// from a class template that mentions the record's keywords.
struct SyntheticConfig {
  int classes = 4;
  int records = 200;
  /// Distinct keyword phrases across all classes; each class gets an equal
  /// share, at least 2.
  int keyword_vocab = 16;
  int keywords_per_record = 2;
  int image_size = 40;
  /// Share of records rendered as single-channel FA; the rest are RGB CFP.
  double fa_fraction = 0.25;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<RetinalImage> images;  // parallel to manifest.records
};

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& config);

/// Writes manifest.json and images/<id>.pgm|ppm under dir.
DatasetManifest write_synthetic_dataset(const SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace retina
