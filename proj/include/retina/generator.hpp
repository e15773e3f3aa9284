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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "retina/checkpoint.hpp"
#include "retina/params.hpp"
#include "retina/tape.hpp"
#include "retina/text.hpp"

namespace retina {

/// Keyword-conditioned LSTM caption decoder.
///
/// The image feature (projected to embed_dim) and the bag-of-words keyword
/// embedding are averaged into one fused vector, which is fed to the LSTM as
/// its first input. Gold (training) or generated (inference) token
/// embeddings follow, starting with START. With keyword_mode off the
/// projected image feature is used directly.
///
/// Parameters: decoder.img_proj.*, decoder.embed.weight, decoder.lstm.*,
/// decoder.out.*, and kw_proj.* when keyword_mode is on.
struct DecoderConfig {
  int embed_dim = 32;
  int hidden_dim = 64;
  bool keyword_mode = true;

  void validate() const;
  friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);

ModelCheckpoint init_decoder(const DecoderConfig& config, std::size_t feature_dim, const Vocabulary& captions,
                             const Vocabulary& keywords, std::uint64_t seed);
DecoderConfig decoder_config(const ModelCheckpoint& ckpt);
Vocabulary decoder_vocabulary(const ModelCheckpoint& ckpt);
Vocabulary decoder_keyword_vocabulary(const ModelCheckpoint& ckpt);

/// Multi-hot over the keyword vocabulary; unknown phrases set the UNK slot.
/// Order-independent by construction.
nn::Tensor keyword_multi_hot(const std::vector<std::string>& keywords, const Vocabulary& kw_vocab);

nn::Var embed_keywords(nn::Tape& tape, const nn::Tensor& multi_hot, const ParamBinder& params);
nn::Var project_image(nn::Tape& tape, nn::Var pooled, const ParamBinder& params);
/// Elementwise average; dimensions must agree.
nn::Var fuse_features(nn::Var image_feature, nn::Var keyword_feature);
nn::Tensor fuse_features(const nn::Tensor& image_feature, const nn::Tensor& keyword_feature);

/// Decoder input for one record: fused feature, or the projected image
/// feature alone when keyword_mode is off (multi_hot is then ignored).
nn::Var decoder_input(nn::Tape& tape, nn::Var pooled, const nn::Tensor& multi_hot, const DecoderConfig& config,
                      const ParamBinder& params);
/// Inference form of decoder_input.
nn::Tensor decoder_input(const nn::Tensor& pooled, const std::vector<std::string>& keywords,
                         const ModelCheckpoint& ckpt);

/// Teacher-forced mean cross-entropy over the predicted positions. target
/// must start with START and contain END; only PAD may follow END.
nn::Var caption_loss(nn::Tape& tape, nn::Var fused, std::span<const int> target, const ParamBinder& params);

struct Hypothesis {
  std::vector<int> tokens;  // without START; ends with END when one was emitted
  double log_prob = 0.0;
  bool finished = false;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct BeamOptions {
  int width = 3;
  int max_len = 20;
  /// Rank by log_prob / length instead of log_prob.
  bool length_normalize = false;
};

/// Step-by-step inference over a read-only checkpoint. Safe to share across
/// threads.
class CaptionDecoder {
 public:
  struct State {
    nn::Tensor h;
    nn::Tensor c;
  };

  explicit CaptionDecoder(const ModelCheckpoint& ckpt);

  std::size_t vocab_size() const { return vocab_size_; }
  /// Runs the fused feature through the LSTM from a zero state.
  State prime(const nn::Tensor& fused) const;
  /// Feeds one token; returns log-probabilities of the next token.
  std::vector<double> step(State& state, int token) const;

  Hypothesis greedy(const nn::Tensor& fused, int max_len) const;
  std::vector<Hypothesis> beam(const nn::Tensor& fused, const BeamOptions& options) const;

 private:
  const ModelCheckpoint& ckpt_;
  std::size_t vocab_size_;
  std::size_t hidden_;
};

/// Argmax decoding, lowest index on ties. Stops at END or after max_len
/// tokens.
Hypothesis decode_greedy(const nn::Tensor& fused, const ModelCheckpoint& ckpt, int max_len);

/// Beam search over cumulative log-probability. Each live hypothesis offers
/// its `width` most likely continuations; those that emit END or reach
/// max_len are set aside, and the best `width` unfinished ones survive (ties:
/// lexicographically smaller token sequence). Returns at most `width`
/// finished hypotheses, best first.
std::vector<Hypothesis> decode_beam(const nn::Tensor& fused, const ModelCheckpoint& ckpt, const BeamOptions& options);

}  // namespace retina
