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
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "retina/checkpoint.hpp"
#include "retina/image.hpp"
#include "retina/params.hpp"
#include "retina/tape.hpp"

namespace retina {

/// conv (kernel x kernel, "same" padding, stride) -> relu -> maxpool(pool).
/// pool <= 1 disables pooling.
struct ConvStage {
  int out_channels = 8;
  int kernel = 3;
  int stride = 1;
  int pool = 2;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

/// The retinal disease identifier: conv stages, global average pooling and a
/// linear classifier. Parameters live under the "encoder." prefix.
struct EncoderConfig {
  int input_channels = 3;
  int image_size = 32;
  std::vector<ConvStage> stages{{8, 3, 1, 2}, {16, 3, 1, 2}, {32, 3, 1, 2}};
  int num_classes = 2;

  int final_channels() const;
  /// Side of the final feature maps.
  int feature_size() const;
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

struct EncoderOutput {
  nn::Tensor feature_maps;  // K x h x w, input of the pooling layer
  nn::Tensor pooled;        // K
  nn::Tensor logits;        // C
};

struct EncoderVars {
  nn::Var feature_maps;
  nn::Var pooled;
  nn::Var logits;
};

/// Fresh Glorot-initialised weights (zero biases) plus metadata holding the
/// config and class names.
ModelCheckpoint init_encoder(const EncoderConfig& config, std::uint64_t seed,
                             const std::vector<std::string>& class_names = {});
EncoderConfig encoder_config(const ModelCheckpoint& ckpt);
std::vector<std::string> encoder_classes(const ModelCheckpoint& ckpt);
/// Throws DataError when a parameter is missing or has the wrong shape.
void check_encoder_checkpoint(const ModelCheckpoint& ckpt, const EncoderConfig& config);

/// Bilinear resize to image_size and scale to [0, 1]. Grayscale is
/// replicated for 3-channel configs; colour is reduced to luma for
/// 1-channel configs.
nn::Tensor preprocess_image(const RetinalImage& image, const EncoderConfig& config);

EncoderVars encoder_forward(nn::Tape& tape, nn::Var input, const EncoderConfig& config, const ParamBinder& params);

/// Inference pass. Throws NumericError naming the layer if an activation
/// becomes non-finite.
EncoderOutput encode_image(const RetinalImage& image, const ModelCheckpoint& ckpt);
EncoderOutput encode_tensor(const nn::Tensor& input, const ModelCheckpoint& ckpt);

struct ClassScore {
  int class_id = 0;
  double probability = 0.0;

  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

/// Top-k classes by softmax probability, ties broken by lower class id.
std::vector<ClassScore> predict_topk(std::span<const double> logits, int k);

}  // namespace retina
