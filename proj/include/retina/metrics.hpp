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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "retina/text.hpp"

namespace retina {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, int>;

/// Contiguous n-grams with multiplicity; empty when tokens.size() < n.
NgramCounts ngram_counts(const Tokens& tokens, int n);

struct BleuScores {
  std::vector<double> bleu;  // bleu[n - 1] is BLEU-n
  double average = 0.0;
};

/// Corpus-level, unsmoothed, single-reference BLEU-1..up_to_n.
BleuScores bleu_corpus(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                       int up_to_n = 4);

/// ROUGE-L F-score: (1 + b^2) R P / (R + b^2 P) over the longest common
/// subsequence. Either side empty gives 0.
double rouge_l(const Tokens& candidate, const Tokens& reference, double beta = 1.2);
double rouge_l_corpus(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                      double beta = 1.2);

struct CiderScores {
  std::vector<double> per_item;
  double mean = 0.0;
};

/// CIDEr (no length penalty) with n = 1..4, IDF ln(N / df) over the
/// references, scaled by 10.
CiderScores cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

/// Fraction of records whose truth is among the first k ranked classes.
double precision_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& truth, int k);

struct RankedRecord {
  int truth = 0;
  std::vector<int> ranking;
};

/// One record per non-empty line: truth id, then class ids best first.
std::vector<RankedRecord> parse_rankings(std::string_view text);

struct MetricReport {
  std::array<double, 4> bleu{};
  double bleu_avg = 0.0;
  double cider = 0.0;
  double rouge = 0.0;
  std::map<int, double> prec_at;

  bool has_captions = false;
};

/// BLEU-1..4, CIDEr and ROUGE-L over aligned candidate/reference texts,
/// tokenized with tokenize().
MetricReport caption_metrics(const std::vector<std::string>& candidates, const std::vector<std::string>& references);
/// Adds Prec@k for every k in ks.
void add_precision(MetricReport& report, const std::vector<RankedRecord>& records, const std::vector<int>& ks);

void to_json(nlohmann::json& j, const MetricReport& r);

}  // namespace retina
