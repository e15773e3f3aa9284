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

#include "retina/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "retina/error.hpp"

namespace retina {

namespace {

void check_aligned(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                   const char* what) {
  if (candidates.size() != references.size()) {
    throw Error(std::string(what) + ": " + std::to_string(candidates.size()) + " candidates but " +
                std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) throw Error(std::string(what) + ": empty corpus");
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

NgramCounts ngram_counts(const Tokens& tokens, int n) {
  if (n < 1) throw Error("ngram_counts: n must be >= 1");
  NgramCounts counts;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return counts;
}

BleuScores bleu_corpus(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references, int up_to_n) {
  check_aligned(candidates, references, "bleu");
  if (up_to_n < 1) throw Error("bleu: up_to_n must be >= 1");
  const auto N = static_cast<std::size_t>(up_to_n);
  std::vector<double> matched(N, 0.0), total(N, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= N; ++n) {
      const NgramCounts cand = ngram_counts(candidates[i], static_cast<int>(n));
      const NgramCounts ref = ngram_counts(references[i], static_cast<int>(n));
      for (const auto& [gram, count] : cand) {
        total[n - 1] += count;
        const auto it = ref.find(gram);
        if (it != ref.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  const double bp = cand_len == 0.0 ? 0.0 : (cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len));
  BleuScores out;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < N; ++n) {
    const double p = total[n] > 0.0 ? matched[n] / total[n] : 0.0;
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    out.bleu.push_back(zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n + 1)));
  }
  double sum = 0.0;
  for (double b : out.bleu) sum += b;
  out.average = sum / static_cast<double>(N);
  return out;
}

double rouge_l(const Tokens& candidate, const Tokens& reference, double beta) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double r = lcs / static_cast<double>(reference.size());
  const double p = lcs / static_cast<double>(candidate.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * r * p / (r + b2 * p);
}

double rouge_l_corpus(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references, double beta) {
  check_aligned(candidates, references, "rouge");
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge_l(candidates[i], references[i], beta);
  return sum / static_cast<double>(candidates.size());
}

CiderScores cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  check_aligned(candidates, references, "cider");
  if (candidates.size() < 2) {
    throw Error("cider: need at least 2 items; document frequencies over a single reference make every IDF zero");
  }
  constexpr int kMaxN = 4;
  const double log_n = std::log(static_cast<double>(references.size()));
  std::array<std::map<Ngram, int>, kMaxN> df;
  std::vector<std::array<NgramCounts, kMaxN>> ref_counts(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    for (int n = 1; n <= kMaxN; ++n) {
      ref_counts[i][n - 1] = ngram_counts(references[i], n);
      for (const auto& entry : ref_counts[i][n - 1]) ++df[n - 1][entry.first];
    }
  }
  auto idf = [&](int n, const Ngram& g) {
    const auto it = df[n - 1].find(g);
    const int d = it == df[n - 1].end() ? 1 : it->second;
    return log_n - std::log(static_cast<double>(d));
  };

  CiderScores out;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double item = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
      const NgramCounts cand = ngram_counts(candidates[i], n);
      const NgramCounts& ref = ref_counts[i][n - 1];
      double dot = 0.0, cand_sq = 0.0, ref_sq = 0.0;
      for (const auto& [g, c] : cand) {
        const double w = c * idf(n, g);
        cand_sq += w * w;
        const auto it = ref.find(g);
        if (it != ref.end()) dot += w * it->second * idf(n, g);
      }
      for (const auto& [g, c] : ref) {
        const double w = c * idf(n, g);
        ref_sq += w * w;
      }
      if (cand_sq > 0.0 && ref_sq > 0.0) item += dot / (std::sqrt(cand_sq) * std::sqrt(ref_sq));
    }
    item = 10.0 * item / kMaxN;
    out.per_item.push_back(item);
    sum += item;
  }
  out.mean = sum / static_cast<double>(candidates.size());
  return out;
}

double precision_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& truth, int k) {
  if (rankings.empty()) throw Error("precision_at_k: no records");
  if (rankings.size() != truth.size()) throw Error("precision_at_k: rankings and truth differ in length");
  if (k < 1) throw Error("precision_at_k: k must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (rankings[i].size() < static_cast<std::size_t>(k)) {
      throw Error("precision_at_k: record " + std::to_string(i) + " ranks only " +
                  std::to_string(rankings[i].size()) + " classes, need " + std::to_string(k));
    }
    const auto end = rankings[i].begin() + k;
    hits += std::find(rankings[i].begin(), end, truth[i]) != end;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

std::vector<RankedRecord> parse_rankings(std::string_view text) {
  std::vector<RankedRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<int> ids;
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        ids.push_back(std::stoi(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError("rankings line " + std::to_string(line_no) + ": '" + field + "' is not a class id");
      }
    }
    if (ids.empty()) continue;
    if (ids.size() < 2) throw DataError("rankings line " + std::to_string(line_no) + ": no ranked classes");
    out.push_back({ids.front(), std::vector<int>(ids.begin() + 1, ids.end())});
  }
  return out;
}

MetricReport caption_metrics(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  std::vector<Tokens> cand, ref;
  for (const auto& c : candidates) cand.push_back(tokenize(c));
  for (const auto& r : references) ref.push_back(tokenize(r));
  MetricReport report;
  const BleuScores bleu = bleu_corpus(cand, ref, 4);
  std::copy(bleu.bleu.begin(), bleu.bleu.end(), report.bleu.begin());
  report.bleu_avg = bleu.average;
  report.rouge = rouge_l_corpus(cand, ref);
  report.cider = cider(cand, ref).mean;
  report.has_captions = true;
  return report;
}

void add_precision(MetricReport& report, const std::vector<RankedRecord>& records, const std::vector<int>& ks) {
  std::vector<std::vector<int>> rankings;
  std::vector<int> truth;
  for (const auto& r : records) {
    rankings.push_back(r.ranking);
    truth.push_back(r.truth);
  }
  for (int k : ks) report.prec_at[k] = precision_at_k(rankings, truth, k);
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = nlohmann::json::object();
  if (r.has_captions) {
    for (int n = 0; n < 4; ++n) j["bleu_" + std::to_string(n + 1)] = r.bleu[static_cast<std::size_t>(n)];
    j["bleu_avg"] = r.bleu_avg;
    j["cider"] = r.cider;
    j["rouge"] = r.rouge;
  }
  if (!r.prec_at.empty()) {
    nlohmann::json prec = nlohmann::json::object();
    for (const auto& [k, v] : r.prec_at) prec[std::to_string(k)] = v;
    j["prec_at"] = prec;
  }
}

}  // namespace retina
