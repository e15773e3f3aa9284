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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "retina/error.hpp"

namespace retina {
namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::string(RETINA_GOLDEN_DIR) + "/" + name, std::ios::binary);
  EXPECT_TRUE(in) << "missing golden file " << name;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CaseRecord record(const std::string& id, const std::string& disease, std::vector<std::string> keywords) {
  CaseRecord r;
  r.id = id;
  r.disease = disease;
  r.keywords = std::move(keywords);
  r.description = "A 40 year old female patient with " + disease + ".";
  return r;
}

std::vector<MedicalReport> fixture() {
  return {
      build_report(record("case07", "optic neuritis", {"disc edema", "blurred margin"}),
                   {{"optic neuritis", 0.5423}, {"macular dystrophy", 0.3}, {"stargardt cone-rod dystrophy", 0.1577}},
                   {"optic", "neuritis", "with", "disc", "edema"}, "assets/case07.png", "assets/case07_cam.png"),
      build_report(record("case02", "macular dystrophy", {}), {{"albinotic spots in macula", 0.61}, {"<other>", 0.39}},
                   {"bull's", "eye", "maculopathy"}, "assets/case02.png", "assets/case02_cam.png"),
      build_report(record("case03", "", {"drusen"}), {{"albinotic spots in macula", 0.9}}, {},
                   "assets/case03.png", "assets/case03_cam.png"),
  };
}

TEST(Detokenize, Rules) {
  EXPECT_EQ(detokenize({"optic", "neuritis"}), "Optic neuritis.");
  EXPECT_EQ(detokenize({"done."}), "Done.");
  EXPECT_EQ(detokenize({}), "");
}

TEST(BuildReport, FieldsAndContract) {
  const MedicalReport r = build_report(record("c1", "optic neuritis", {"a"}), {{"x", 0.7}, {"y", 0.3}},
                                       {"optic", "neuritis"}, "img.png", "cam.png");
  EXPECT_EQ(r.description, "Optic neuritis.");
  EXPECT_EQ(r.true_disease, "optic neuritis");
  EXPECT_EQ(r.cam_path, "cam.png");
  EXPECT_THROW(build_report(record("c1", "d", {}), {}, {}, "", ""), Error);
  EXPECT_THROW(build_report(record("c1", "d", {}), {{"x", 0.3}, {"y", 0.7}}, {}, "", ""), Error);
  EXPECT_FALSE(build_report(record("c1", "", {}), {{"x", 1.0}}, {}, "", "").true_disease.has_value());
}

TEST(RenderText, LinesAndPercent) {
  EXPECT_EQ(format_percent(0.5423), "54.23%");
  EXPECT_EQ(format_percent(1.0), "100.00%");
  const MedicalReport minimal =
      build_report(record("c9", "", {}), {{"optic neuritis", 0.5423}}, {"optic", "neuritis"}, "", "");
  EXPECT_EQ(render_text(minimal),
            "Case: c9\nPrediction: optic neuritis (54.23%)\nKeywords: \xE2\x80\x94\nDescription: Optic neuritis.\n");
  std::string all;
  for (const auto& r : fixture()) all += render_text(r) + "\n";
  EXPECT_EQ(all, golden("report.txt"));
}

TEST(RenderHtml, EmptyHasHeaderOnly) {
  const std::string html = render_html({});
  EXPECT_NE(html.find("<th>Case</th>"), std::string::npos);
  EXPECT_EQ(html.find("<td>"), std::string::npos);
  EXPECT_EQ(html.find("Ground truth"), std::string::npos);
}

TEST(RenderHtml, GroupByDiseaseOrdersRows) {
  const std::string html = render_html(fixture(), GroupBy::Disease);
  const auto p02 = html.find("<td>case02</td>"), p03 = html.find("<td>case03</td>"), p07 = html.find("<td>case07</td>");
  ASSERT_NE(p07, std::string::npos);
  EXPECT_LT(p02, p03);  // same disease, ordered by id
  EXPECT_LT(p03, p07);
  const std::string plain = render_html(fixture());
  EXPECT_LT(plain.find("<td>case07</td>"), plain.find("<td>case02</td>"));
}

TEST(RenderHtml, MatchesGoldenAndIsStable) {
  const std::string html = render_html(fixture(), GroupBy::Disease);
  EXPECT_EQ(html, render_html(fixture(), GroupBy::Disease));
  EXPECT_EQ(html, golden("report.html"));
  EXPECT_NE(html.find("&lt;other&gt;"), std::string::npos);
  EXPECT_NE(html.find("Bull&#39;s eye"), std::string::npos);
}

}  // namespace
}  // namespace retina
