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

#include "retina/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {
namespace {

const char* const kDiseases[] = {
    "optic neuritis",        "macular dystrophy",     "albinotic spots in macula",
    "stargardt cone-rod dystrophy", "central serous chorioretinopathy", "diabetic retinopathy",
    "retinitis pigmentosa",  "branch retinal vein occlusion",
};

const char* const kFindings[] = {
    "drusen",           "macular edema",     "hard exudates",      "cotton wool spots",
    "microaneurysms",   "disc swelling",     "pigment clumping",   "neovascularization",
    "retinal hemorrhage", "vessel tortuosity", "geographic atrophy", "yellow flecks",
    "hyperfluorescence", "hypofluorescence", "dye leakage",        "window defect",
    "disc pallor",      "optic cupping",     "chorioretinal scar", "subretinal fluid",
    "bone spicules",    "cherry red spot",   "vascular sheathing", "epiretinal membrane",
};

const char* const kAges[] = {"25", "40", "55", "70"};
const char* const kGenders[] = {"male", "female"};

std::string disease_name(int c) {
  constexpr int n = static_cast<int>(std::size(kDiseases));
  if (c < n) return kDiseases[c];
  return "retinal disease " + std::to_string(c + 1);
}

std::string finding_name(int k) {
  constexpr int n = static_cast<int>(std::size(kFindings));
  if (k < n) return kFindings[k];
  return "finding " + std::to_string(k + 1);
}

RetinalImage render(int cls, int classes, int size, bool fa, Rng& rng) {
  const double s = size;
  const double cx = s / 2.0, cy = s / 2.0, radius = 0.48 * s;
  const double angle = 2.0 * std::numbers::pi * cls / classes;
  const double bx = cx + 0.25 * s * std::cos(angle) + rng.uniform(-0.04, 0.04) * s;
  const double by = cy + 0.25 * s * std::sin(angle) + rng.uniform(-0.04, 0.04) * s;
  const double sigma = 0.08 * s;
  const double amp = rng.uniform(120.0, 160.0);
  const double freq = 1.0 + cls % 3;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  RetinalImage img(size, size, fa ? 1 : 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double r = std::sqrt(dx * dx + dy * dy);
      double v = 0.0;
      if (r < radius) {
        v = 50.0 + 40.0 * (1.0 - r / radius);
        v += 18.0 * std::sin(2.0 * std::numbers::pi * freq * (x + 0.5) / s + phase);
        const double bdx = x + 0.5 - bx, bdy = y + 0.5 - by;
        v += amp * std::exp(-(bdx * bdx + bdy * bdy) / (2.0 * sigma * sigma));
        v += rng.uniform(-12.0, 12.0);
      }
      v = std::clamp(v, 0.0, 255.0);
      if (fa) {
        img.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(v));
      } else {
        img.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(v));
        img.at(x, y, 1) = static_cast<std::uint8_t>(std::lround(0.55 * v));
        img.at(x, y, 2) = static_cast<std::uint8_t>(std::lround(0.25 * v));
      }
    }
  }
  return img;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (classes < 2) throw DataError("synthetic: need at least 2 classes");
  if (records < classes) throw DataError("synthetic: need at least one record per class");
  if (keyword_vocab < 1) throw DataError("synthetic: keyword_vocab must be positive");
  if (keywords_per_record < 0) throw DataError("synthetic: keywords_per_record must be >= 0");
  if (image_size < 8) throw DataError("synthetic: image_size must be at least 8");
  if (!(fa_fraction >= 0.0 && fa_fraction <= 1.0)) throw DataError("synthetic: fa_fraction must be in [0, 1]");
}

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& config) {
  config.validate();
  const int pool = std::max({2, config.keyword_vocab / config.classes, config.keywords_per_record});
  Rng rng(config.seed);
  SyntheticDataset out;
  const int width = static_cast<int>(std::to_string(config.records).size());
  for (int i = 0; i < config.records; ++i) {
    const int cls = i % config.classes;
    const bool fa = rng.uniform() < config.fa_fraction;

    std::vector<int> picks(pool);
    for (int k = 0; k < pool; ++k) picks[k] = cls * pool + k;
    rng.shuffle(picks);
    picks.resize(config.keywords_per_record);
    std::vector<int> ordered = picks;
    std::sort(ordered.begin(), ordered.end());

    CaseRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "case%0*d", width, i + 1);
    r.id = id;
    r.modality = fa ? Modality::FA : Modality::CFP;
    r.image_path = "images/" + r.id + (fa ? ".pgm" : ".ppm");
    r.disease = disease_name(cls);
    for (int k : picks) r.keywords.push_back(finding_name(k));

    std::string text = "A " + std::string(kAges[rng.below(std::size(kAges))]) + " year old " +
                       kGenders[rng.below(std::size(kGenders))] + " patient with " + r.disease + ".";
    if (!ordered.empty()) {
      text += " Findings include ";
      for (std::size_t k = 0; k < ordered.size(); ++k) {
        if (k) text += k + 1 == ordered.size() ? " and " : ", ";
        text += finding_name(ordered[k]);
      }
      text += ".";
    }
    r.description = text;

    out.images.push_back(render(cls, config.classes, config.image_size, fa, rng));
    out.manifest.records.push_back(std::move(r));
  }
  out.manifest.refresh_classes();
  return out;
}

DatasetManifest write_synthetic_dataset(const SyntheticConfig& config, const std::filesystem::path& dir) {
  SyntheticDataset data = generate_synthetic_dataset(config);
  data.manifest.base_dir = dir;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    save_image(dir / data.manifest.records[i].image_path, data.images[i]);
  }
  save_manifest(data.manifest, dir / "manifest.json");
  return data.manifest;
}

}  // namespace retina
