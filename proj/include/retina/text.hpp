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

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace retina {

using Tokens = std::vector<std::string>;

/// Lowercases, splits on whitespace and strips the characters .,;:!?()" from
/// both ends of each token. Empty tokens are dropped; inner punctuation such
/// as in "20/40" is kept.
Tokens tokenize(std::string_view text);

/// Trimmed, lowercased keyword phrase.
std::string normalize_keyword(std::string_view phrase);
/// Comma-separated phrases, normalized; empty phrases are dropped.
std::vector<std::string> split_keywords(std::string_view text);

/// Token <-> index map with four reserved entries. Indices of real tokens
/// follow (count desc, token asc) over the building corpus.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  /// Tokens seen at least min_frequency times get an index; others map to
  /// UNK. An empty corpus yields the reserved entries only.
  static Vocabulary build(const std::vector<Tokens>& corpus, int min_frequency = 1);

  std::size_t size() const { return tokens_.size(); }
  int min_frequency() const { return min_frequency_; }
  int index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int index) const;

  std::vector<int> encode(const Tokens& tokens) const;
  /// START + encode(tokens) + END.
  std::vector<int> encode_target(const Tokens& tokens) const;
  /// Drops reserved indices other than UNK; stops at END.
  Tokens decode(const std::vector<int>& indices) const;

  /// "#retina-vocab v1 min_frequency=N", then one token per line with the
  /// four reserved tokens first.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.min_frequency_ == b.min_frequency_;
  }

 private:
  void add(std::string token);

  int min_frequency_ = 1;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace retina
