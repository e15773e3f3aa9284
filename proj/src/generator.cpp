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

#include "retina/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "retina/error.hpp"
#include "retina/ops.hpp"
#include "retina/optim.hpp"

namespace retina {

using nlohmann::json;
using nn::Tensor;
using nn::Var;

void DecoderConfig::validate() const {
  if (embed_dim < 1 || hidden_dim < 1) throw DataError("decoder: embed_dim and hidden_dim must be positive");
}

void to_json(json& j, const DecoderConfig& c) {
  j = {{"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim}, {"keyword_mode", c.keyword_mode}};
}

void from_json(const json& j, DecoderConfig& c) {
  c = DecoderConfig{};
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.keyword_mode = j.value("keyword_mode", c.keyword_mode);
}

ModelCheckpoint init_decoder(const DecoderConfig& config, std::size_t feature_dim, const Vocabulary& captions,
                             const Vocabulary& keywords, std::uint64_t seed) {
  config.validate();
  if (feature_dim == 0) throw DataError("decoder: feature_dim must be positive");
  Rng rng(seed);
  const std::size_t D = static_cast<std::size_t>(config.embed_dim), H = static_cast<std::size_t>(config.hidden_dim);
  const std::size_t V = captions.size(), K = keywords.size();
  ModelCheckpoint ckpt;
  ckpt.params["decoder.img_proj.weight"] = nn::xavier_uniform({D, feature_dim}, feature_dim, D, rng);
  ckpt.params["decoder.img_proj.bias"] = Tensor({D});
  if (config.keyword_mode) {
    ckpt.params["kw_proj.weight"] = nn::xavier_uniform({D, K}, K, D, rng);
    ckpt.params["kw_proj.bias"] = Tensor({D});
  }
  ckpt.params["decoder.embed.weight"] = nn::xavier_uniform({V, D}, V, D, rng);
  ckpt.params["decoder.lstm.w_ih"] = nn::xavier_uniform({4 * H, D}, D, 4 * H, rng);
  ckpt.params["decoder.lstm.w_hh"] = nn::xavier_uniform({4 * H, H}, H, 4 * H, rng);
  Tensor bias({4 * H});
  for (std::size_t i = H; i < 2 * H; ++i) bias[i] = 1.0;  // forget gate
  ckpt.params["decoder.lstm.bias"] = std::move(bias);
  ckpt.params["decoder.out.weight"] = nn::xavier_uniform({V, H}, H, V, rng);
  ckpt.params["decoder.out.bias"] = Tensor({V});
  ckpt.meta["decoder.config"] = json(config).dump();
  ckpt.meta["decoder.feature_dim"] = std::to_string(feature_dim);
  ckpt.meta["decoder.vocab"] = captions.serialize();
  ckpt.meta["decoder.keyword_vocab"] = keywords.serialize();
  return ckpt;
}

DecoderConfig decoder_config(const ModelCheckpoint& ckpt) {
  try {
    DecoderConfig c = json::parse(ckpt.meta_value("decoder.config")).get<DecoderConfig>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("decoder checkpoint has a malformed config: ") + e.what());
  }
}

Vocabulary decoder_vocabulary(const ModelCheckpoint& ckpt) { return Vocabulary::parse(ckpt.meta_value("decoder.vocab")); }

Vocabulary decoder_keyword_vocabulary(const ModelCheckpoint& ckpt) {
  return Vocabulary::parse(ckpt.meta_value("decoder.keyword_vocab"));
}

Tensor keyword_multi_hot(const std::vector<std::string>& keywords, const Vocabulary& kw_vocab) {
  Tensor hot({kw_vocab.size()});
  for (const auto& k : keywords) hot[static_cast<std::size_t>(kw_vocab.index(k))] = 1.0;
  return hot;
}

Var embed_keywords(nn::Tape& tape, const Tensor& multi_hot, const ParamBinder& params) {
  return nn::linear(tape.constant(multi_hot), params(tape, "kw_proj.weight"), params(tape, "kw_proj.bias"));
}

Var project_image(nn::Tape& tape, Var pooled, const ParamBinder& params) {
  return nn::linear(pooled, params(tape, "decoder.img_proj.weight"), params(tape, "decoder.img_proj.bias"));
}

Var fuse_features(Var image_feature, Var keyword_feature) { return nn::average(image_feature, keyword_feature); }

Tensor fuse_features(const Tensor& image_feature, const Tensor& keyword_feature) {
  if (image_feature.shape() != keyword_feature.shape()) {
    throw ShapeError("fuse_features: shape mismatch " + nn::shape_string(image_feature.shape()) + " vs " +
                     nn::shape_string(keyword_feature.shape()));
  }
  Tensor out(image_feature.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (image_feature[i] + keyword_feature[i]) / 2.0;
  return out;
}

Var decoder_input(nn::Tape& tape, Var pooled, const Tensor& multi_hot, const DecoderConfig& config,
                  const ParamBinder& params) {
  Var image = project_image(tape, pooled, params);
  if (!config.keyword_mode) return image;
  return fuse_features(image, embed_keywords(tape, multi_hot, params));
}

Tensor decoder_input(const Tensor& pooled, const std::vector<std::string>& keywords, const ModelCheckpoint& ckpt) {
  const DecoderConfig config = decoder_config(ckpt);
  nn::Tape tape(false);
  const Tensor hot = config.keyword_mode ? keyword_multi_hot(keywords, decoder_keyword_vocabulary(ckpt)) : Tensor({1});
  return decoder_input(tape, tape.constant_ref(pooled), hot, config, ParamBinder::frozen(ckpt)).value();
}

namespace {

nn::LstmWeights lstm_weights(nn::Tape& tape, const ParamBinder& params) {
  return {params(tape, "decoder.lstm.w_ih"), params(tape, "decoder.lstm.w_hh"), params(tape, "decoder.lstm.bias")};
}

std::size_t target_end(std::span<const int> target) {
  if (target.size() < 2 || target.front() != Vocabulary::kStart) {
    throw DataError("caption target must begin with START and end with END");
  }
  const auto end = std::find(target.begin(), target.end(), Vocabulary::kEnd);
  if (end == target.end()) throw DataError("caption target has no END token");
  for (auto it = end + 1; it != target.end(); ++it) {
    if (*it != Vocabulary::kPad) throw DataError("caption target has tokens after END");
  }
  return static_cast<std::size_t>(end - target.begin());
}

// Orders by score descending, then token sequence ascending.
bool ranks_before(double score_a, const std::vector<int>& a, double score_b, const std::vector<int>& b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

}  // namespace

Var caption_loss(nn::Tape& tape, Var fused, std::span<const int> target, const ParamBinder& params) {
  const std::size_t end = target_end(target);
  const nn::LstmWeights weights = lstm_weights(tape, params);
  const std::size_t hidden = params.checkpoint().param("decoder.lstm.w_hh").dim(1);
  nn::LstmState state{tape.constant(Tensor({hidden})), tape.constant(Tensor({hidden}))};
  state = nn::lstm_step(fused, state, weights);
  Var embed = params(tape, "decoder.embed.weight");
  Var out_w = params(tape, "decoder.out.weight");
  Var out_b = params(tape, "decoder.out.bias");
  const std::size_t vocab = out_w.value().dim(0);
  std::vector<Var> losses;
  for (std::size_t t = 0; t < end; ++t) {
    const auto next = static_cast<std::size_t>(target[t + 1]);
    if (next >= vocab || target[t] < 0) throw DataError("caption target token outside the vocabulary");
    state = nn::lstm_step(nn::row(embed, static_cast<std::size_t>(target[t])), state, weights);
    losses.push_back(nn::softmax_cross_entropy(nn::linear(state.h, out_w, out_b), next));
  }
  return nn::mean(losses);
}

CaptionDecoder::CaptionDecoder(const ModelCheckpoint& ckpt)
    : ckpt_(ckpt),
      vocab_size_(ckpt.param("decoder.out.weight").dim(0)),
      hidden_(ckpt.param("decoder.lstm.w_hh").dim(1)) {}

CaptionDecoder::State CaptionDecoder::prime(const Tensor& fused) const {
  nn::Tape tape(false);
  const ParamBinder params = ParamBinder::frozen(ckpt_);
  nn::LstmState s{tape.constant(Tensor({hidden_})), tape.constant(Tensor({hidden_}))};
  s = nn::lstm_step(tape.constant_ref(fused), s, lstm_weights(tape, params));
  return {s.h.value(), s.c.value()};
}

std::vector<double> CaptionDecoder::step(State& state, int token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= vocab_size_) throw DataError("decoder: token outside vocabulary");
  nn::Tape tape(false);
  const ParamBinder params = ParamBinder::frozen(ckpt_);
  nn::LstmState s{tape.constant_ref(state.h), tape.constant_ref(state.c)};
  Var x = nn::row(params(tape, "decoder.embed.weight"), static_cast<std::size_t>(token));
  s = nn::lstm_step(x, s, lstm_weights(tape, params));
  Var logits = nn::linear(s.h, params(tape, "decoder.out.weight"), params(tape, "decoder.out.bias"));
  auto logp = nn::log_softmax(logits.value().data());
  state = {s.h.value(), s.c.value()};
  return logp;
}

Hypothesis CaptionDecoder::greedy(const Tensor& fused, int max_len) const {
  if (max_len < 1) throw Error("decode_greedy: max_len must be >= 1");
  Hypothesis hyp;
  State state = prime(fused);
  int token = Vocabulary::kStart;
  while (static_cast<int>(hyp.tokens.size()) < max_len) {
    const auto logp = step(state, token);
    token = static_cast<int>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    hyp.tokens.push_back(token);
    hyp.log_prob += logp[static_cast<std::size_t>(token)];
    if (token == Vocabulary::kEnd) break;
  }
  hyp.finished = true;
  return hyp;
}

std::vector<Hypothesis> CaptionDecoder::beam(const Tensor& fused, const BeamOptions& options) const {
  if (options.width < 1) throw Error("decode_beam: width must be >= 1");
  if (options.max_len < 1) throw Error("decode_beam: max_len must be >= 1");
  const std::size_t width = static_cast<std::size_t>(options.width);
  auto score = [&](const Hypothesis& h) {
    return options.length_normalize ? h.log_prob / static_cast<double>(h.tokens.size()) : h.log_prob;
  };

  struct Alive {
    Hypothesis hyp;
    State state;  // after consuming every token except `last`
    int last;
  };
  struct Candidate {
    std::size_t parent;
    int token;
    double log_prob;
    std::vector<int> tokens;
  };

  std::vector<Alive> alive;
  alive.push_back({Hypothesis{}, prime(fused), Vocabulary::kStart});
  std::vector<Hypothesis> finished;
  for (int t = 1; t <= options.max_len && !alive.empty(); ++t) {
    std::vector<Candidate> candidates;
    std::vector<State> next_states(alive.size());
    for (std::size_t a = 0; a < alive.size(); ++a) {
      next_states[a] = alive[a].state;
      const auto logp = step(next_states[a], alive[a].last);
      // Only the `width` best continuations of each hypothesis compete, so a
      // width of one follows the argmax path exactly.
      std::vector<int> order(logp.size());
      std::iota(order.begin(), order.end(), 0);
      const std::size_t keep = std::min(width, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](int x, int y) {
                          const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
                          return logp[ux] != logp[uy] ? logp[ux] > logp[uy] : x < y;
                        });
      for (std::size_t r = 0; r < keep; ++r) {
        const int v = order[r];
        Candidate c{a, v, alive[a].hyp.log_prob + logp[static_cast<std::size_t>(v)], alive[a].hyp.tokens};
        c.tokens.push_back(v);
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      return ranks_before(x.log_prob, x.tokens, y.log_prob, y.tokens);
    });
    std::vector<Alive> next;
    for (auto& c : candidates) {
      const bool done = c.token == Vocabulary::kEnd || t == options.max_len;
      if (done) {
        finished.push_back({std::move(c.tokens), c.log_prob, true});
      } else if (next.size() < width) {
        next.push_back({Hypothesis{std::move(c.tokens), c.log_prob, false}, next_states[c.parent], c.token});
      }
    }
    alive = std::move(next);

    // Log-probabilities only decrease, so once `width` finished hypotheses
    // beat the best live one nothing can displace them.
    if (!options.length_normalize && finished.size() >= width && !alive.empty()) {
      std::vector<double> scores;
      for (const auto& f : finished) scores.push_back(f.log_prob);
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(width - 1), scores.end(),
                       std::greater<>());
      // Strict margin: an equal live score could still win the tie-break.
      if (scores[width - 1] > alive.front().hyp.log_prob) alive.clear();
    }
  }
  std::sort(finished.begin(), finished.end(), [&](const Hypothesis& x, const Hypothesis& y) {
    return ranks_before(score(x), x.tokens, score(y), y.tokens);
  });
  if (finished.size() > width) finished.resize(width);
  return finished;
}

Hypothesis decode_greedy(const Tensor& fused, const ModelCheckpoint& ckpt, int max_len) {
  return CaptionDecoder(ckpt).greedy(fused, max_len);
}

std::vector<Hypothesis> decode_beam(const Tensor& fused, const ModelCheckpoint& ckpt, const BeamOptions& options) {
  return CaptionDecoder(ckpt).beam(fused, options);
}

}  // namespace retina
