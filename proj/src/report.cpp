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

#include "retina/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "retina/error.hpp"

namespace retina {

namespace {

const char* const kEmptyCell = "\xE2\x80\x94";  // em dash

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string keyword_cell(const std::vector<std::string>& keywords) {
  return keywords.empty() ? kEmptyCell : join(keywords, ", ");
}

std::string prediction_line(const std::vector<DiseaseScore>& predictions) {
  std::vector<std::string> parts;
  for (const auto& p : predictions) parts.push_back(p.disease + " (" + format_percent(p.probability) + ")");
  return join(parts, ", ");
}

const char* const kStyle =
    "table{border-collapse:collapse;font-family:sans-serif;font-size:14px}"
    "th,td{border:1px solid #999;padding:6px;vertical-align:top;text-align:left}"
    "th{background:#eee}img{width:160px;image-rendering:pixelated}ol{margin:0;padding-left:18px}";

}  // namespace

std::string detokenize(const Tokens& tokens) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) text += (i ? " " : "") + tokens[i];
  if (text.empty()) return text;
  text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  if (text.back() != '.') text += '.';
  return text;
}

MedicalReport build_report(const CaseRecord& record, const std::vector<DiseaseScore>& prediction,
                           const Tokens& caption, const std::string& image_path, const std::string& cam_path) {
  if (prediction.empty()) throw Error("report for " + record.id + ": empty prediction");
  for (std::size_t i = 1; i < prediction.size(); ++i) {
    if (prediction[i].probability > prediction[i - 1].probability) {
      throw Error("report for " + record.id + ": predictions not sorted by probability");
    }
  }
  MedicalReport r;
  r.case_id = record.id;
  r.image_path = image_path;
  r.cam_path = cam_path;
  r.predictions = prediction;
  r.keywords = record.keywords;
  r.description = detokenize(caption);
  if (!record.disease.empty()) {
    r.true_disease = record.disease;
    r.true_description = record.description;
  }
  return r;
}

GroupBy parse_group_by(const std::string& text) {
  if (text == "none") return GroupBy::None;
  if (text == "disease") return GroupBy::Disease;
  throw Error("unknown grouping '" + text + "' (expected none or disease)");
}

std::string format_percent(double probability) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", probability * 100.0);
  return buf;
}

std::string render_html(const std::vector<MedicalReport>& reports, GroupBy group_by) {
  std::vector<const MedicalReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  if (group_by == GroupBy::Disease) {
    std::stable_sort(rows.begin(), rows.end(), [](const MedicalReport* a, const MedicalReport* b) {
      const std::string& da = a->predictions.empty() ? std::string() : a->predictions.front().disease;
      const std::string& db = b->predictions.empty() ? std::string() : b->predictions.front().disease;
      return da != db ? da < db : a->case_id < b->case_id;
    });
  }
  const bool truth = std::any_of(reports.begin(), reports.end(), [](const MedicalReport& r) {
    return r.true_disease.has_value();
  });

  std::string html;
  html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  html += "<title>Retinal image report</title>\n<style>";
  html += kStyle;
  html += "</style>\n</head>\n<body>\n<h1>Retinal image report</h1>\n<table>\n<tr>";
  html += "<th>Case</th><th>Image</th><th>CAM</th><th>Predicted disease</th><th>Keywords</th><th>Description</th>";
  if (truth) html += "<th>Ground truth</th>";
  html += "</tr>\n";
  for (const MedicalReport* r : rows) {
    html += "<tr><td>" + escape(r->case_id) + "</td>";
    html += "<td><img src=\"" + escape(r->image_path) + "\" alt=\"retinal image\"></td>";
    html += "<td><img src=\"" + escape(r->cam_path) + "\" alt=\"class activation map\"></td>";
    html += "<td><ol>";
    for (const auto& p : r->predictions) {
      html += "<li>" + escape(p.disease) + " " + format_percent(p.probability) + "</li>";
    }
    html += "</ol></td>";
    html += "<td>" + escape(keyword_cell(r->keywords)) + "</td>";
    html += "<td>" + escape(r->description) + "</td>";
    if (truth) {
      html += "<td>";
      if (r->true_disease) {
        html += "<b>" + escape(*r->true_disease) + "</b>";
        if (r->true_description && !r->true_description->empty()) html += "<br>" + escape(*r->true_description);
      } else {
        html += kEmptyCell;
      }
      html += "</td>";
    }
    html += "</tr>\n";
  }
  html += "</table>\n</body>\n</html>\n";
  return html;
}

std::string render_text(const MedicalReport& report) {
  std::string out;
  out += "Case: " + report.case_id + "\n";
  out += "Prediction: " + prediction_line(report.predictions) + "\n";
  out += "Keywords: " + keyword_cell(report.keywords) + "\n";
  out += "Description: " + report.description + "\n";
  if (report.true_disease) {
    out += "Ground truth: " + *report.true_disease;
    if (report.true_description && !report.true_description->empty()) out += " | " + *report.true_description;
    out += "\n";
  }
  return out;
}

}  // namespace retina
