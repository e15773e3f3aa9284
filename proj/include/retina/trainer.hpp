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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "retina/cam.hpp"
#include "retina/checkpoint.hpp"
#include "retina/encoder.hpp"
#include "retina/generator.hpp"
#include "retina/manifest.hpp"
#include "retina/metrics.hpp"
#include "retina/optim.hpp"

namespace retina {

/// lr = base / decay_factor ^ floor(epoch / decay_period).
double lr_schedule(int epoch, const nn::SgdConfig& sgd);

struct TrainConfig {
  static constexpr int kVersion = 1;

  int epochs = 60;
  int batch_size = 8;
  std::uint64_t seed = 1;
  nn::SgdConfig sgd;
  EncoderConfig encoder;
  DecoderConfig decoder;
  int min_word_frequency = 1;
  /// Fine-tune the encoder together with the decoder instead of freezing it.
  bool joint_encoder = false;
  /// Validation decoding of the captioner.
  int beam_width = 1;
  int max_caption_length = 24;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Overlays the fields present in j onto c; an unknown version is rejected.
void apply_json(const nlohmann::json& j, TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
/// Reads a JSON config file on top of base.
TrainConfig load_train_config(const std::filesystem::path& path, const TrainConfig& base = TrainConfig{});

/// Settings used by the command-line tool and the acceptance runs. The
/// captioner ones are not from any published recipe.
TrainConfig classifier_defaults();
TrainConfig captioner_defaults();

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

using TrainingCurve = std::vector<EpochStats>;

std::string curve_to_csv(const TrainingCurve& curve);

struct TrainResult {
  /// Best epoch by validation metric, rounded to the float32 values a saved
  /// checkpoint holds.
  ModelCheckpoint checkpoint;
  TrainingCurve curve;
  int best_epoch = 0;
  /// Ids of every record fed to a training batch.
  std::vector<std::string> trained_ids;
};

/// Loads and preprocesses every image of the manifest once, in record order.
std::vector<nn::Tensor> load_inputs(const DatasetManifest& manifest, const EncoderConfig& config);
std::vector<nn::Tensor> preprocess_images(const std::vector<RetinalImage>& images, const EncoderConfig& config);

/// Mini-batch SGD on cross-entropy over the train split, validated by Prec@1
/// on the val split. `init` starts from an existing checkpoint (the
/// pre-trained variant) instead of fresh weights.
TrainResult train_classifier(const DatasetManifest& manifest, const std::vector<nn::Tensor>& inputs,
                             const TrainConfig& config, const ModelCheckpoint* init = nullptr);

struct CaptionVocabularies {
  Vocabulary words;
  Vocabulary keywords;
};

/// Vocabularies over the train split: description tokens and keyword phrases.
CaptionVocabularies build_vocabularies(const DatasetManifest& manifest, int min_frequency);

/// Teacher-forced captioner training over the train split, validated by
/// BLEU-avg on the val split. The returned checkpoint holds the decoder and
/// the encoder it was trained with. Supplied vocabularies must equal the ones
/// built from the train split, which keeps val/test text out of them.
/// Without a val split the last epoch is kept and the val columns are NaN.
TrainResult train_captioner(const DatasetManifest& manifest, const std::vector<nn::Tensor>& inputs,
                            const TrainConfig& config, const ModelCheckpoint& encoder,
                            const std::optional<CaptionVocabularies>& vocabularies = std::nullopt);

struct CaseOutput {
  std::string id;
  std::vector<ClassScore> ranking;  // every class, best first
  std::vector<int> caption;         // without START/END
  Heatmap cam;                      // top-1 class, raw, feature-map resolution
};

struct EvaluationResult {
  MetricReport report;
  std::vector<CaseOutput> cases;  // in record order
};

struct EvaluationOptions {
  int beam_width = 3;
  int max_caption_length = 24;
  std::vector<int> ks{1, 5};
  int workers = 1;
  Split split = Split::Test;
};

/// Classifies and captions every record of the split, fanning out over
/// `workers` threads; results are merged in record order. Prec@k for k
/// above the class count is skipped. `decoder` may be null to score the
/// classifier only.
EvaluationResult evaluate_pipeline(const DatasetManifest& manifest, const std::vector<nn::Tensor>& inputs,
                                   const ModelCheckpoint& encoder, const ModelCheckpoint* decoder,
                                   const EvaluationOptions& options);

/// Caption for one image: beam search (greedy when width is 1), best
/// hypothesis, END removed.
std::vector<int> generate_caption(const nn::Tensor& pooled, const std::vector<std::string>& keywords,
                                  const ModelCheckpoint& decoder, int beam_width, int max_len);

}  // namespace retina
