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

#include "retina/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "retina/error.hpp"
#include "retina/image.hpp"
#include "retina/ops.hpp"
#include "retina/parallel.hpp"
#include "retina/params.hpp"
#include "retina/rng.hpp"
#include "retina/text.hpp"

namespace retina {

using nlohmann::json;
using nn::Tape;
using nn::Tensor;

double lr_schedule(int epoch, const nn::SgdConfig& sgd) {
  if (epoch < 0) throw Error("lr_schedule: epoch must be >= 0");
  sgd.validate();
  return sgd.learning_rate / std::pow(sgd.decay_factor, epoch / sgd.decay_period_epochs);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DataError("train config: epochs must be >= 1");
  if (batch_size < 1) throw DataError("train config: batch_size must be >= 1");
  if (min_word_frequency < 1) throw DataError("train config: min_word_frequency must be >= 1");
  if (beam_width < 1) throw DataError("train config: beam_width must be >= 1");
  if (max_caption_length < 1) throw DataError("train config: max_caption_length must be >= 1");
  sgd.validate();
  decoder.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"version", TrainConfig::kVersion},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"sgd",
        {{"learning_rate", c.sgd.learning_rate},
         {"decay_factor", c.sgd.decay_factor},
         {"decay_period_epochs", c.sgd.decay_period_epochs}}},
       {"encoder", c.encoder},
       {"decoder", c.decoder},
       {"min_word_frequency", c.min_word_frequency},
       {"joint_encoder", c.joint_encoder},
       {"beam_width", c.beam_width},
       {"max_caption_length", c.max_caption_length}};
}

void apply_json(const json& j, TrainConfig& c) {
  const int version = j.value("version", TrainConfig::kVersion);
  if (version != TrainConfig::kVersion) {
    throw DataError("train config version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(TrainConfig::kVersion) + ")");
  }
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("sgd")) {
    const json& s = j.at("sgd");
    c.sgd.learning_rate = s.value("learning_rate", c.sgd.learning_rate);
    c.sgd.decay_factor = s.value("decay_factor", c.sgd.decay_factor);
    c.sgd.decay_period_epochs = s.value("decay_period_epochs", c.sgd.decay_period_epochs);
  }
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<EncoderConfig>();
  if (j.contains("decoder")) c.decoder = j.at("decoder").get<DecoderConfig>();
  c.min_word_frequency = j.value("min_word_frequency", c.min_word_frequency);
  c.joint_encoder = j.value("joint_encoder", c.joint_encoder);
  c.beam_width = j.value("beam_width", c.beam_width);
  c.max_caption_length = j.value("max_caption_length", c.max_caption_length);
}

void from_json(const json& j, TrainConfig& c) {
  c = TrainConfig{};
  apply_json(j, c);
}

TrainConfig classifier_defaults() {
  TrainConfig c;
  c.epochs = 40;
  c.batch_size = 4;
  return c;
}

TrainConfig captioner_defaults() {
  TrainConfig c;
  c.epochs = 100;
  c.batch_size = 1;
  c.sgd.learning_rate = 0.5;
  c.sgd.decay_period_epochs = 1000;
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, const TrainConfig& base) {
  const std::string bytes = read_file(path);
  try {
    TrainConfig c = base;
    apply_json(json::parse(bytes), c);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string curve_to_csv(const TrainingCurve& curve) {
  std::string out = "epoch,train_loss,val_loss,val_metric\n";
  char line[128];
  for (const auto& e : curve) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g\n", e.epoch, e.train_loss, e.val_loss, e.val_metric);
    out += line;
  }
  return out;
}

std::vector<Tensor> load_inputs(const DatasetManifest& manifest, const EncoderConfig& config) {
  std::vector<Tensor> inputs;
  inputs.reserve(manifest.records.size());
  for (const auto& r : manifest.records) inputs.push_back(preprocess_image(load_image(manifest.image_file(r)), config));
  return inputs;
}

std::vector<Tensor> preprocess_images(const std::vector<RetinalImage>& images, const EncoderConfig& config) {
  std::vector<Tensor> inputs;
  inputs.reserve(images.size());
  for (const auto& img : images) inputs.push_back(preprocess_image(img, config));
  return inputs;
}

namespace {

std::vector<std::size_t> split_indices(const DatasetManifest& manifest, Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> require_split(const DatasetManifest& manifest, Split split) {
  auto idx = split_indices(manifest, split);
  if (idx.empty()) throw DataError("the " + to_string(split) + " split is empty");
  return idx;
}

void check_inputs(const DatasetManifest& manifest, const std::vector<Tensor>& inputs) {
  if (inputs.size() != manifest.records.size()) {
    throw Error("got " + std::to_string(inputs.size()) + " inputs for " + std::to_string(manifest.records.size()) +
                " records");
  }
}

ModelCheckpoint without_grads(const ModelCheckpoint& ck) {
  ModelCheckpoint copy = ck;
  for (auto& entry : copy.params) entry.second.drop_grad();
  return copy;
}

template <typename LossFn>
double run_epoch(std::vector<std::size_t> order, const TrainConfig& config, int epoch, const nn::NamedParams& params,
                 LossFn loss_of, std::vector<std::string>& trained_ids, const DatasetManifest& manifest) {
  Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);
  const double lr = lr_schedule(epoch, config.sgd);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    nn::zero_grads(params);
    for (std::size_t i = start; i < end; ++i) {
      Tape tape;
      nn::Var loss = loss_of(tape, order[i]);
      total += loss.value()[0];
      tape.backward(loss);
      if (epoch == 0) trained_ids.push_back(manifest.records[order[i]].id);
    }
    nn::scale_grads(params, 1.0 / static_cast<double>(end - start));
    nn::sgd_step(params, lr);
  }
  return total / static_cast<double>(order.size());
}

}  // namespace

TrainResult train_classifier(const DatasetManifest& manifest, const std::vector<Tensor>& inputs,
                             const TrainConfig& config, const ModelCheckpoint* init) {
  config.validate();
  check_inputs(manifest, inputs);
  if (manifest.classes.size() < 2) throw DataError("classifier training needs at least 2 classes");
  const auto train = require_split(manifest, Split::Train);
  const auto val = require_split(manifest, Split::Val);

  EncoderConfig ecfg = config.encoder;
  ecfg.num_classes = static_cast<int>(manifest.classes.size());
  ModelCheckpoint ck;
  if (init) {
    ck = *init;
    if (encoder_config(ck) != ecfg) throw DataError("initial checkpoint does not match the encoder config");
    if (encoder_classes(ck) != manifest.classes) {
      throw DataError("initial checkpoint was trained on different classes");
    }
  } else {
    ck = init_encoder(ecfg, config.seed, manifest.classes);
  }
  check_encoder_checkpoint(ck, ecfg);
  std::vector<int> labels;
  for (const auto& r : manifest.records) labels.push_back(manifest.class_id(r.disease));

  const auto params = ck.with_prefix("encoder.");
  TrainResult result;
  double best = -1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats{epoch, 0.0, 0.0, 0.0};
    stats.train_loss = run_epoch(
        train, config, epoch, params,
        [&](Tape& tape, std::size_t i) {
          auto vars = encoder_forward(tape, tape.constant_ref(inputs[i]), ecfg, ParamBinder::trainable(ck));
          return nn::softmax_cross_entropy(vars.logits, static_cast<std::size_t>(labels[i]));
        },
        result.trained_ids, manifest);

    std::size_t hits = 0;
    for (std::size_t i : val) {
      const EncoderOutput out = encode_tensor(inputs[i], ck);
      const auto logp = nn::log_softmax(out.logits.data());
      stats.val_loss -= logp[static_cast<std::size_t>(labels[i])];
      hits += predict_topk(out.logits.data(), 1)[0].class_id == labels[i];
    }
    stats.val_loss /= static_cast<double>(val.size());
    stats.val_metric = static_cast<double>(hits) / static_cast<double>(val.size());
    result.curve.push_back(stats);
    if (stats.val_metric > best) {
      best = stats.val_metric;
      result.best_epoch = epoch;
      result.checkpoint = without_grads(ck);
    }
  }
  result.checkpoint.quantize();
  return result;
}

CaptionVocabularies build_vocabularies(const DatasetManifest& manifest, int min_frequency) {
  std::vector<Tokens> words, keywords;
  for (const auto& r : manifest.records) {
    if (r.split != Split::Train) continue;
    words.push_back(tokenize(r.description));
    keywords.push_back(r.keywords);
  }
  return {Vocabulary::build(words, min_frequency), Vocabulary::build(keywords, 1)};
}

std::vector<int> generate_caption(const Tensor& pooled, const std::vector<std::string>& keywords,
                                  const ModelCheckpoint& decoder, int beam_width, int max_len) {
  const Tensor fused = decoder_input(pooled, keywords, decoder);
  const CaptionDecoder dec(decoder);
  std::vector<int> tokens = beam_width <= 1 ? dec.greedy(fused, max_len).tokens
                                            : dec.beam(fused, {beam_width, max_len, false}).front().tokens;
  if (!tokens.empty() && tokens.back() == Vocabulary::kEnd) tokens.pop_back();
  return tokens;
}

TrainResult train_captioner(const DatasetManifest& manifest, const std::vector<Tensor>& inputs,
                            const TrainConfig& config, const ModelCheckpoint& encoder,
                            const std::optional<CaptionVocabularies>& vocabularies) {
  config.validate();
  check_inputs(manifest, inputs);
  const auto train = require_split(manifest, Split::Train);
  const auto val = split_indices(manifest, Split::Val);

  const CaptionVocabularies vocab = build_vocabularies(manifest, config.min_word_frequency);
  if (vocabularies && !(vocabularies->words == vocab.words && vocabularies->keywords == vocab.keywords)) {
    throw DataError("supplied vocabularies differ from those of the train split; they must be built from train "
                    "records only");
  }
  const EncoderConfig ecfg = encoder_config(encoder);
  check_encoder_checkpoint(encoder, ecfg);
  ModelCheckpoint enc = without_grads(encoder);
  ModelCheckpoint dec = init_decoder(config.decoder, static_cast<std::size_t>(ecfg.final_channels()), vocab.words,
                                     vocab.keywords, Rng::mix(config.seed, 0xdec));

  std::vector<std::vector<int>> targets;
  std::vector<Tensor> multi_hot;
  std::vector<Tokens> references;
  for (const auto& r : manifest.records) {
    references.push_back(tokenize(r.description));
    targets.push_back(vocab.words.encode_target(references.back()));
    multi_hot.push_back(keyword_multi_hot(r.keywords, vocab.keywords));
  }
  std::vector<Tensor> pooled(manifest.records.size());
  auto refresh_pooled = [&](const std::vector<std::size_t>& which) {
    for (std::size_t i : which) pooled[i] = encode_tensor(inputs[i], enc).pooled;
  };
  if (!config.joint_encoder) {
    refresh_pooled(train);
    refresh_pooled(val);
  }

  nn::NamedParams params = dec.with_prefix("");
  if (config.joint_encoder) {
    for (auto& p : enc.with_prefix("encoder.")) params.push_back(p);
  }
  const DecoderConfig dcfg = config.decoder;

  TrainResult result;
  double best = -1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats{epoch, 0.0, 0.0, 0.0};
    stats.train_loss = run_epoch(
        train, config, epoch, params,
        [&](Tape& tape, std::size_t i) {
          const ParamBinder binder = ParamBinder::trainable(dec);
          nn::Var feature = config.joint_encoder
                                ? encoder_forward(tape, tape.constant_ref(inputs[i]), ecfg,
                                                  ParamBinder::trainable(enc))
                                      .pooled
                                : tape.constant_ref(pooled[i]);
          return caption_loss(tape, decoder_input(tape, feature, multi_hot[i], dcfg, binder), targets[i], binder);
        },
        result.trained_ids, manifest);

    if (config.joint_encoder) refresh_pooled(val);
    std::vector<Tokens> candidates, refs;
    for (std::size_t i : val) {
      Tape tape(false);
      const ParamBinder binder = ParamBinder::frozen(dec);
      stats.val_loss += caption_loss(tape, decoder_input(tape, tape.constant_ref(pooled[i]), multi_hot[i], dcfg, binder),
                                     targets[i], binder)
                            .value()[0];
      candidates.push_back(vocab.words.decode(
          generate_caption(pooled[i], manifest.records[i].keywords, dec, config.beam_width, config.max_caption_length)));
      refs.push_back(references[i]);
    }
    if (val.empty()) {
      stats.val_loss = stats.val_metric = std::nan("");
    } else {
      stats.val_loss /= static_cast<double>(val.size());
      stats.val_metric = bleu_corpus(candidates, refs).average;
    }
    result.curve.push_back(stats);
    if (val.empty() || stats.val_metric > best) {
      best = stats.val_metric;
      result.best_epoch = epoch;
      result.checkpoint = without_grads(enc);
      result.checkpoint.merge(without_grads(dec));
    }
  }
  result.checkpoint.quantize();
  return result;
}

EvaluationResult evaluate_pipeline(const DatasetManifest& manifest, const std::vector<Tensor>& inputs,
                                   const ModelCheckpoint& encoder, const ModelCheckpoint* decoder,
                                   const EvaluationOptions& options) {
  check_inputs(manifest, inputs);
  const auto records = require_split(manifest, options.split);
  const EncoderConfig ecfg = encoder_config(encoder);
  check_encoder_checkpoint(encoder, ecfg);
  const auto classes = encoder_classes(encoder);
  std::vector<int> truth;
  for (std::size_t i : records) {
    const auto it = std::find(classes.begin(), classes.end(), manifest.records[i].disease);
    if (it == classes.end()) {
      throw DataError("record " + manifest.records[i].id + " has disease '" + manifest.records[i].disease +
                      "' unknown to the encoder checkpoint");
    }
    truth.push_back(static_cast<int>(it - classes.begin()));
  }
  std::optional<Vocabulary> words;
  if (decoder) {
    const std::size_t feature_dim = decoder->param("decoder.img_proj.weight").dim(1);
    if (feature_dim != static_cast<std::size_t>(ecfg.final_channels())) {
      throw DataError("decoder expects " + std::to_string(feature_dim) + " image features but the encoder yields " +
                      std::to_string(ecfg.final_channels()));
    }
    words = decoder_vocabulary(*decoder);
  }

  EvaluationResult result;
  result.cases.resize(records.size());
  const Tensor& fc = encoder.param("encoder.fc.weight");
  parallel_for(records.size(), options.workers, [&](std::size_t n) {
    const CaseRecord& r = manifest.records[records[n]];
    const EncoderOutput out = encode_tensor(inputs[records[n]], encoder);
    CaseOutput& c = result.cases[n];
    c.id = r.id;
    c.ranking = predict_topk(out.logits.data(), ecfg.num_classes);
    c.cam = compute_cam(out.feature_maps, fc, c.ranking.front().class_id);
    if (decoder) {
      c.caption = generate_caption(out.pooled, r.keywords, *decoder, options.beam_width, options.max_caption_length);
    }
  });

  std::vector<RankedRecord> ranked;
  for (std::size_t n = 0; n < records.size(); ++n) {
    RankedRecord rr{truth[n], {}};
    for (const auto& s : result.cases[n].ranking) rr.ranking.push_back(s.class_id);
    ranked.push_back(std::move(rr));
  }
  std::vector<int> ks;
  for (int k : options.ks) {
    if (k >= 1 && k <= ecfg.num_classes) ks.push_back(k);
  }
  add_precision(result.report, ranked, ks);

  if (decoder) {
    std::vector<Tokens> candidates, refs;
    for (std::size_t n = 0; n < records.size(); ++n) {
      candidates.push_back(words->decode(result.cases[n].caption));
      refs.push_back(tokenize(manifest.records[records[n]].description));
    }
    const BleuScores bleu = bleu_corpus(candidates, refs, 4);
    std::copy(bleu.bleu.begin(), bleu.bleu.end(), result.report.bleu.begin());
    result.report.bleu_avg = bleu.average;
    result.report.rouge = rouge_l_corpus(candidates, refs);
    result.report.cider = candidates.size() >= 2 ? cider(candidates, refs).mean : 0.0;
    result.report.has_captions = true;
  }
  return result;
}

}  // namespace retina
