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

#include "retina/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "retina/checkpoint.hpp"
#include "retina/error.hpp"
#include "retina/rng.hpp"
#include "retina/text.hpp"

namespace retina {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  if (text.empty()) return Split::Unassigned;
  throw DataError("unknown split '" + std::string(text) + "'");
}

int DatasetManifest::class_id(const std::string& disease) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), disease);
  if (it == classes.end() || *it != disease) throw DataError("disease '" + disease + "' is not in the class list");
  return static_cast<int>(it - classes.begin());
}

std::filesystem::path DatasetManifest::image_file(const CaseRecord& record) const {
  std::filesystem::path p(record.image_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<const CaseRecord*> DatasetManifest::in_split(Split split) const {
  std::vector<const CaseRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

void DatasetManifest::refresh_classes() {
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.disease);
  classes.assign(names.begin(), names.end());
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError("manifest record " + std::to_string(index) + ": missing field '" + key + "'");
  if (!it->is_string()) throw DataError("manifest record " + std::to_string(index) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

DatasetManifest parse_manifest_text(std::string_view json_text, std::filesystem::path base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("manifest must be a JSON array of records");
  DatasetManifest manifest;
  manifest.base_dir = std::move(base_dir);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    const std::string where = "manifest record " + std::to_string(i);
    if (!obj.is_object()) throw DataError(where + ": not an object");
    CaseRecord r;
    r.id = required_string(obj, "id", i);
    r.image_path = required_string(obj, "image_path", i);
    r.disease = required_string(obj, "disease", i);
    r.description = required_string(obj, "description", i);
    if (r.id.empty()) throw DataError(where + ": empty id");
    if (r.disease.empty()) throw DataError(where + ": empty disease");
    if (r.description.empty()) throw DataError(where + ": empty description");
    try {
      r.modality = parse_modality(required_string(obj, "modality", i));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    auto kw = obj.find("keywords");
    if (kw == obj.end()) throw DataError(where + ": missing field 'keywords'");
    if (kw->is_string()) {
      r.keywords = split_keywords(kw->get<std::string>());
    } else if (kw->is_array()) {
      for (const auto& item : *kw) {
        if (!item.is_string()) throw DataError(where + ": keywords must be strings");
        for (auto& phrase : split_keywords(item.get<std::string>())) r.keywords.push_back(std::move(phrase));
      }
    } else {
      throw DataError(where + ": keywords must be an array or a string");
    }
    if (auto sp = obj.find("split"); sp != obj.end() && !sp->is_null()) {
      if (!sp->is_string()) throw DataError(where + ": split must be a string");
      try {
        r.split = parse_split(sp->get<std::string>());
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }
    if (!seen.insert(r.id).second) throw DataError(where + ": duplicate id '" + r.id + "'");
    manifest.records.push_back(std::move(r));
  }
  manifest.refresh_classes();
  return manifest;
}

DatasetManifest parse_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest_text(read_file(path), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_manifest(const DatasetManifest& manifest, const std::optional<std::filesystem::path>& target_dir) {
  json doc = json::array();
  for (const auto& r : manifest.records) {
    std::string image_path = r.image_path;
    if (target_dir && !std::filesystem::path(r.image_path).is_absolute()) {
      const auto from = std::filesystem::weakly_canonical(std::filesystem::absolute(manifest.image_file(r)));
      const auto to = std::filesystem::weakly_canonical(std::filesystem::absolute(*target_dir));
      image_path = from.lexically_relative(to).generic_string();
    }
    json obj = {{"id", r.id},
                {"image_path", image_path},
                {"modality", to_string(r.modality)},
                {"disease", r.disease},
                {"keywords", r.keywords},
                {"description", r.description}};
    if (r.split != Split::Unassigned) obj["split"] = to_string(r.split);
    doc.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  write_file_atomic(path, serialize_manifest(manifest, dir));
}

std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> ratios) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw DataError("split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw DataError("split ratios must sum to 1");
  const auto train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[0]));
  const auto val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1]));
  return {train, val, n - train - val};
}

namespace {

DatasetManifest assign(DatasetManifest manifest, std::array<std::size_t, 3> counts, std::uint64_t seed,
                       bool preserve_existing) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (!preserve_existing || manifest.records[i].split == Split::Unassigned) pool.push_back(i);
  }
  if (counts[0] + counts[1] + counts[2] != pool.size()) {
    throw DataError("split counts sum to " + std::to_string(counts[0] + counts[1] + counts[2]) + " but " +
                    std::to_string(pool.size()) + " records are being split");
  }
  Rng rng(seed);
  rng.shuffle(pool);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    Split s = k < counts[0] ? Split::Train : (k < counts[0] + counts[1] ? Split::Val : Split::Test);
    manifest.records[pool[k]].split = s;
  }
  return manifest;
}

std::size_t pool_size(const DatasetManifest& manifest, bool preserve_existing) {
  if (!preserve_existing) return manifest.records.size();
  return static_cast<std::size_t>(std::count_if(manifest.records.begin(), manifest.records.end(),
                                                [](const CaseRecord& r) { return r.split == Split::Unassigned; }));
}

}  // namespace

DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> ratios, std::uint64_t seed,
                              bool preserve_existing) {
  const auto counts = split_sizes(pool_size(manifest, preserve_existing), ratios);
  return assign(std::move(manifest), counts, seed, preserve_existing);
}

DatasetManifest split_dataset_counts(DatasetManifest manifest, std::array<std::size_t, 3> counts, std::uint64_t seed,
                                     bool preserve_existing) {
  return assign(std::move(manifest), counts, seed, preserve_existing);
}

std::map<std::size_t, std::size_t> word_length_histogram(const DatasetManifest& manifest, LabelField field) {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& r : manifest.records) {
    std::size_t words = 0;
    if (field == LabelField::Description) {
      words = tokenize(r.description).size();
    } else {
      for (const auto& k : r.keywords) words += tokenize(k).size();
    }
    ++hist[words];
  }
  return hist;
}

}  // namespace retina
