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

// Plain-loop reimplementation of the caption decoder used as an oracle. It
// reads raw parameter tensors and shares no code with the library's ops.

#include <cmath>
#include <string>
#include <vector>

#include "retina/checkpoint.hpp"
#include "retina/generator.hpp"
#include "retina/rng.hpp"
#include "retina/text.hpp"

namespace retina::testing {

struct OracleState {
  std::vector<double> h, c;
};

inline double oracle_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline OracleState oracle_lstm(const ModelCheckpoint& ck, const std::vector<double>& x, const OracleState& s) {
  const auto& wih = ck.param("decoder.lstm.w_ih");
  const auto& whh = ck.param("decoder.lstm.w_hh");
  const auto& b = ck.param("decoder.lstm.bias");
  const std::size_t H = whh.dim(1), D = wih.dim(1);
  std::vector<double> z(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double acc = b[r];
    for (std::size_t k = 0; k < D; ++k) acc += wih[r * D + k] * x[k];
    for (std::size_t k = 0; k < H; ++k) acc += whh[r * H + k] * s.h[k];
    z[r] = acc;
  }
  OracleState out{std::vector<double>(H), std::vector<double>(H)};
  for (std::size_t j = 0; j < H; ++j) {
    const double i = oracle_sigmoid(z[j]);
    const double f = oracle_sigmoid(z[H + j]);
    const double g = std::tanh(z[2 * H + j]);
    const double o = oracle_sigmoid(z[3 * H + j]);
    out.c[j] = f * s.c[j] + i * g;
    out.h[j] = o * std::tanh(out.c[j]);
  }
  return out;
}

inline std::vector<double> oracle_log_probs(const ModelCheckpoint& ck, const std::vector<double>& h) {
  const auto& w = ck.param("decoder.out.weight");
  const auto& b = ck.param("decoder.out.bias");
  const std::size_t V = w.dim(0), H = w.dim(1);
  std::vector<double> z(V);
  double mx = -1e300;
  for (std::size_t v = 0; v < V; ++v) {
    z[v] = b[v];
    for (std::size_t k = 0; k < H; ++k) z[v] += w[v * H + k] * h[k];
    mx = std::max(mx, z[v]);
  }
  double total = 0.0;
  for (double zv : z) total += std::exp(zv - mx);
  for (double& zv : z) zv = zv - mx - std::log(total);
  return z;
}

inline std::vector<double> oracle_embedding(const ModelCheckpoint& ck, int token) {
  const auto& e = ck.param("decoder.embed.weight");
  const std::size_t D = e.dim(1);
  return {e.data().begin() + static_cast<std::ptrdiff_t>(token * D),
          e.data().begin() + static_cast<std::ptrdiff_t>((token + 1) * D)};
}

/// Log-probability of emitting `tokens` (without START) after priming with `fused`.
inline double oracle_sequence_log_prob(const ModelCheckpoint& ck, const std::vector<double>& fused,
                                       const std::vector<int>& tokens) {
  const std::size_t H = ck.param("decoder.lstm.w_hh").dim(1);
  OracleState s{std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)};
  s = oracle_lstm(ck, fused, s);
  int prev = Vocabulary::kStart;
  double total = 0.0;
  for (int t : tokens) {
    s = oracle_lstm(ck, oracle_embedding(ck, prev), s);
    total += oracle_log_probs(ck, s.h)[static_cast<std::size_t>(t)];
    prev = t;
  }
  return total;
}

/// Every complete sequence: ends in END, or reaches max_len without END.
inline std::vector<std::vector<int>> enumerate_sequences(int vocab, int max_len) {
  std::vector<std::vector<int>> out, frontier{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : frontier) {
      for (int v = 0; v < vocab; ++v) {
        auto seq = prefix;
        seq.push_back(v);
        if (v == Vocabulary::kEnd || len == max_len) {
          out.push_back(std::move(seq));
        } else {
          next.push_back(std::move(seq));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

/// A decoder over `extra` words plus the reserved tokens, with weights drawn
/// from [-scale, scale] so output distributions are far from uniform.
inline ModelCheckpoint random_decoder(std::uint64_t seed, int extra, int embed = 4, int hidden = 5,
                                      std::size_t feature_dim = 3, double scale = 1.5) {
  Tokens words;
  for (int i = 0; i < extra; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary captions = Vocabulary::build({words});
  const Vocabulary keywords = Vocabulary::build({{"a", "b", "c"}});
  DecoderConfig cfg;
  cfg.embed_dim = embed;
  cfg.hidden_dim = hidden;
  ModelCheckpoint ck = init_decoder(cfg, feature_dim, captions, keywords, seed);
  Rng rng(Rng::mix(seed, 77));
  for (auto& [name, t] : ck.params) {
    for (double& v : t.data()) v = rng.uniform(-scale, scale);
  }
  return ck;
}

}  // namespace retina::testing

