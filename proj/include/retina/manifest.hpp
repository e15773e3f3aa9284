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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retina/image.hpp"

namespace retina {

enum class Split { Unassigned, Train, Val, Test };

std::string to_string(Split s);
Split parse_split(std::string_view text);

/// One retinal image with its disease name, keyword phrases and clinical
/// description.
struct CaseRecord {
  std::string id;
  std::string image_path;
  Modality modality = Modality::CFP;
  std::string disease;
  std::vector<std::string> keywords;
  std::string description;
  Split split = Split::Unassigned;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct DatasetManifest {
  std::vector<CaseRecord> records;
  /// Unique disease names, sorted; a record's class id is its index here.
  std::vector<std::string> classes;
  /// Directory relative image paths are resolved against.
  std::filesystem::path base_dir;

  int class_id(const std::string& disease) const;
  std::filesystem::path image_file(const CaseRecord& record) const;
  std::vector<const CaseRecord*> in_split(Split split) const;
  /// Rebuilds the class list from the records.
  void refresh_classes();

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.records == b.records && a.classes == b.classes;
  }
};

/// Parses the JSON array form. `keywords` may be an array of phrases or a
/// single comma-separated string; phrases are trimmed and lowercased.
/// Errors name the offending record index.
DatasetManifest parse_manifest_text(std::string_view json_text, std::filesystem::path base_dir = {});
DatasetManifest parse_manifest(const std::filesystem::path& path);

/// Pretty JSON. Image paths are rewritten relative to the directory of the
/// file being written when `target_dir` is given.
std::string serialize_manifest(const DatasetManifest& manifest,
                               const std::optional<std::filesystem::path>& target_dir = std::nullopt);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Shuffles with the seeded generator; the first floor(N r_train) records go
/// to train, the next floor(N r_val) to val, the remainder to test. With
/// preserve_existing, already assigned records are left alone and only the
/// unassigned ones are split.
DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> ratios, std::uint64_t seed,
                              bool preserve_existing = false);
/// Same shuffle, explicit train/val/test sizes that must sum to the number
/// of records being split.
DatasetManifest split_dataset_counts(DatasetManifest manifest, std::array<std::size_t, 3> counts,
                                     std::uint64_t seed, bool preserve_existing = false);

/// Partition sizes produced by split_dataset for n records.
std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> ratios);

enum class LabelField { Keywords, Description };

/// word count -> number of records. Keyword counts add the tokens of all of
/// a record's phrases.
std::map<std::size_t, std::size_t> word_length_histogram(const DatasetManifest& manifest, LabelField field);

}  // namespace retina
