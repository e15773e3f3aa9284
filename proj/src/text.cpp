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

#include "retina/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "retina/checkpoint.hpp"
#include "retina/error.hpp"

namespace retina {
namespace {

constexpr std::string_view kStripChars = ".,;:!?()\"";
constexpr std::string_view kVocabMagic = "#retina-vocab v1";
const char* const kReservedTokens[] = {"<pad>", "<start>", "<end>", "<unk>"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string_view trim(std::string_view s, std::string_view chars) {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(chars);
  return s.substr(b, e - b + 1);
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::istringstream words{std::string(text)};
  std::string word;
  while (words >> word) {
    auto stripped = trim(word, kStripChars);
    if (!stripped.empty()) out.push_back(lower(stripped));
  }
  return out;
}

std::string normalize_keyword(std::string_view phrase) { return lower(trim(phrase, " \t\r\n")); }

std::vector<std::string> split_keywords(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto phrase = normalize_keyword(text.substr(start, end - start));
    if (!phrase.empty()) out.push_back(std::move(phrase));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) add(t);
}

void Vocabulary::add(std::string token) {
  const int id = static_cast<int>(tokens_.size());
  if (!index_.emplace(token, id).second) throw DataError("vocabulary: duplicate token '" + token + "'");
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<Tokens>& corpus, int min_frequency) {
  if (min_frequency < 1) throw DataError("vocabulary: min_frequency must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++counts[t];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  vocab.min_frequency_ = min_frequency;
  for (auto& [token, count] : ranked) {
    if (count < min_frequency) break;
    if (vocab.index_.count(token)) continue;  // a literal "<unk>" in the corpus
    vocab.add(token);
  }
  return vocab;
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw DataError("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tokens_[index];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::vector<int> Vocabulary::encode_target(const Tokens& tokens) const {
  std::vector<int> out{kStart};
  for (const auto& t : tokens) out.push_back(index(t));
  out.push_back(kEnd);
  return out;
}

Tokens Vocabulary::decode(const std::vector<int>& indices) const {
  Tokens out;
  for (int i : indices) {
    if (i == kEnd) break;
    if (i == kPad || i == kStart) continue;
    out.push_back(token(i));
  }
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out = std::string(kVocabMagic) + " min_frequency=" + std::to_string(min_frequency_) + "\n";
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind(kVocabMagic, 0) != 0) {
    throw DataError("vocabulary file must start with '" + std::string(kVocabMagic) + "'");
  }
  Vocabulary vocab;
  const auto eq = line.find("min_frequency=");
  if (eq != std::string::npos) vocab.min_frequency_ = std::stoi(line.substr(eq + 14));
  for (int i = 0; i < kReserved; ++i) {
    if (!std::getline(in, line) || line != kReservedTokens[i]) {
      throw DataError("vocabulary line " + std::to_string(i + 2) + " must be " + kReservedTokens[i]);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) throw DataError("vocabulary has an empty token line");
    vocab.add(line);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace retina
