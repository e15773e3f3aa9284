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

#include <optional>
#include <string>
#include <vector>

#include "retina/manifest.hpp"
#include "retina/text.hpp"

namespace retina {

struct DiseaseScore {
  std::string disease;
  double probability = 0.0;

  friend bool operator==(const DiseaseScore&, const DiseaseScore&) = default;
};

/// One row of the table-based report.
struct MedicalReport {
  std::string case_id;
  std::string image_path;  // relative to the report file
  std::string cam_path;
  std::vector<DiseaseScore> predictions;  // best first
  std::vector<std::string> keywords;
  std::string description;
  std::optional<std::string> true_disease;
  std::optional<std::string> true_description;

  friend bool operator==(const MedicalReport&, const MedicalReport&) = default;
};

/// Space-joined, first letter capitalised, trailing period added if absent.
std::string detokenize(const Tokens& tokens);

/// Ground truth is taken from the record when it names a disease. Throws if
/// prediction is empty or not sorted by probability.
MedicalReport build_report(const CaseRecord& record, const std::vector<DiseaseScore>& prediction,
                           const Tokens& caption, const std::string& image_path, const std::string& cam_path);

enum class GroupBy { None, Disease };
GroupBy parse_group_by(const std::string& text);

/// "54.23%" style: probability * 100 with two decimals.
std::string format_percent(double probability);

/// Static HTML table, one row per case. Depends only on its inputs.
std::string render_html(const std::vector<MedicalReport>& reports, GroupBy group_by = GroupBy::None);
/// Case / Prediction / Keywords / Description lines, then Ground truth when known.
std::string render_text(const MedicalReport& report);

}  // namespace retina
