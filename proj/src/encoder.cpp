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

#include "retina/encoder.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "retina/error.hpp"
#include "retina/ops.hpp"
#include "retina/optim.hpp"
#include "retina/resample.hpp"

namespace retina {

using nlohmann::json;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

std::string conv_name(std::size_t i) { return "encoder.conv" + std::to_string(i + 1); }

int conv_out(int size, const ConvStage& s) { return (size + 2 * (s.kernel / 2) - s.kernel) / s.stride + 1; }

void check_finite(const Tensor& t, const std::string& layer) {
  if (!t.all_finite()) throw NumericError("non-finite activation in " + layer);
}

}  // namespace

int EncoderConfig::final_channels() const { return stages.empty() ? input_channels : stages.back().out_channels; }

int EncoderConfig::feature_size() const {
  int size = image_size;
  for (const auto& s : stages) {
    size = conv_out(size, s);
    if (s.pool > 1) size = (size - s.pool) / s.pool + 1;
  }
  return size;
}

void EncoderConfig::validate() const {
  if (input_channels != 1 && input_channels != 3) throw DataError("encoder: input_channels must be 1 or 3");
  if (num_classes < 2) throw DataError("encoder: need at least 2 classes");
  if (stages.empty()) throw DataError("encoder: need at least one conv stage");
  int size = image_size;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.out_channels < 1 || s.kernel < 1 || s.stride < 1) {
      throw DataError("encoder: stage " + std::to_string(i + 1) + " has non-positive parameters");
    }
    if (s.kernel > size + 2 * (s.kernel / 2)) throw DataError("encoder: stage " + std::to_string(i + 1) + " kernel exceeds input");
    size = conv_out(size, s);
    if (s.pool > 1) {
      if (s.pool > size) throw DataError("encoder: stage " + std::to_string(i + 1) + " pool exceeds feature map");
      size = (size - s.pool) / s.pool + 1;
    }
  }
  if (size < 1) throw DataError("encoder: spatial size collapses below 1x1");
}

void to_json(json& j, const EncoderConfig& c) {
  json stages = json::array();
  for (const auto& s : c.stages) {
    stages.push_back({{"out_channels", s.out_channels}, {"kernel", s.kernel}, {"stride", s.stride}, {"pool", s.pool}});
  }
  j = {{"input_channels", c.input_channels},
       {"image_size", c.image_size},
       {"stages", stages},
       {"num_classes", c.num_classes}};
}

void from_json(const json& j, EncoderConfig& c) {
  c = EncoderConfig{};
  c.input_channels = j.value("input_channels", c.input_channels);
  c.image_size = j.value("image_size", c.image_size);
  c.num_classes = j.value("num_classes", c.num_classes);
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j.at("stages")) {
      ConvStage stage;
      stage.out_channels = s.value("out_channels", stage.out_channels);
      stage.kernel = s.value("kernel", stage.kernel);
      stage.stride = s.value("stride", stage.stride);
      stage.pool = s.value("pool", stage.pool);
      c.stages.push_back(stage);
    }
  }
}

ModelCheckpoint init_encoder(const EncoderConfig& config, std::uint64_t seed, const std::vector<std::string>& class_names) {
  config.validate();
  if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(config.num_classes)) {
    throw DataError("encoder: " + std::to_string(class_names.size()) + " class names for " +
                    std::to_string(config.num_classes) + " classes");
  }
  Rng rng(seed);
  ModelCheckpoint ckpt;
  std::size_t in = static_cast<std::size_t>(config.input_channels);
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& s = config.stages[i];
    const std::size_t k = static_cast<std::size_t>(s.kernel), out = static_cast<std::size_t>(s.out_channels);
    ckpt.params[conv_name(i) + ".weight"] = nn::xavier_uniform({out, in, k, k}, in * k * k, out * k * k, rng);
    ckpt.params[conv_name(i) + ".bias"] = Tensor({out});
    in = out;
  }
  const std::size_t classes = static_cast<std::size_t>(config.num_classes);
  ckpt.params["encoder.fc.weight"] = nn::xavier_uniform({classes, in}, in, classes, rng);
  ckpt.params["encoder.fc.bias"] = Tensor({classes});
  ckpt.meta["encoder.config"] = json(config).dump();
  std::vector<std::string> names = class_names;
  if (names.empty()) {
    for (int c = 0; c < config.num_classes; ++c) names.push_back("class " + std::to_string(c));
  }
  ckpt.meta["encoder.classes"] = json(names).dump();
  return ckpt;
}

EncoderConfig encoder_config(const ModelCheckpoint& ckpt) {
  try {
    EncoderConfig c = json::parse(ckpt.meta_value("encoder.config")).get<EncoderConfig>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("encoder checkpoint has a malformed config: ") + e.what());
  }
}

std::vector<std::string> encoder_classes(const ModelCheckpoint& ckpt) {
  try {
    return json::parse(ckpt.meta_value("encoder.classes")).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("encoder checkpoint has a malformed class list: ") + e.what());
  }
}

void check_encoder_checkpoint(const ModelCheckpoint& ckpt, const EncoderConfig& config) {
  auto expect = [&](const std::string& name, const Shape& shape) {
    const Tensor& t = ckpt.param(name);
    if (t.shape() != shape) {
      throw DataError("encoder parameter '" + name + "' has shape " + nn::shape_string(t.shape()) + ", config needs " +
                      nn::shape_string(shape));
    }
  };
  std::size_t in = static_cast<std::size_t>(config.input_channels);
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& s = config.stages[i];
    const std::size_t k = static_cast<std::size_t>(s.kernel), out = static_cast<std::size_t>(s.out_channels);
    expect(conv_name(i) + ".weight", {out, in, k, k});
    expect(conv_name(i) + ".bias", {out});
    in = out;
  }
  expect("encoder.fc.weight", {static_cast<std::size_t>(config.num_classes), in});
  expect("encoder.fc.bias", {static_cast<std::size_t>(config.num_classes)});
}

Tensor preprocess_image(const RetinalImage& image, const EncoderConfig& config) {
  image.validate();
  const RetinalImage source = (config.input_channels == 1 && image.channels == 3) ? to_grayscale(image) : image;
  const std::size_t side = static_cast<std::size_t>(config.image_size);
  const std::size_t h = static_cast<std::size_t>(source.height), w = static_cast<std::size_t>(source.width);
  Tensor out({static_cast<std::size_t>(config.input_channels), side, side});
  std::vector<double> plane(h * w);
  for (int c = 0; c < config.input_channels; ++c) {
    const int src_c = source.channels == 1 ? 0 : c;
    for (std::size_t i = 0; i < h * w; ++i) plane[i] = source.pixels[i * source.channels + src_c] / 255.0;
    const auto resized = resize_bilinear(plane, h, w, side, side);
    std::copy(resized.begin(), resized.end(), out.data().begin() + static_cast<std::ptrdiff_t>(c * side * side));
  }
  return out;
}

EncoderVars encoder_forward(nn::Tape& tape, Var input, const EncoderConfig& config, const ParamBinder& params) {
  const Shape expected{static_cast<std::size_t>(config.input_channels), static_cast<std::size_t>(config.image_size),
                       static_cast<std::size_t>(config.image_size)};
  if (input.shape() != expected) {
    throw ShapeError("encoder input has shape " + nn::shape_string(input.shape()) + ", config expects " +
                     nn::shape_string(expected));
  }
  Var x = input;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& s = config.stages[i];
    const std::string name = conv_name(i);
    x = nn::relu(nn::conv2d(x, params(tape, name + ".weight"), params(tape, name + ".bias"),
                            static_cast<std::size_t>(s.stride), static_cast<std::size_t>(s.kernel / 2)));
    check_finite(x.value(), name);
    if (s.pool > 1) x = nn::maxpool2d(x, static_cast<std::size_t>(s.pool), static_cast<std::size_t>(s.pool));
  }
  Var pooled = nn::global_avg_pool(x);
  Var logits = nn::linear(pooled, params(tape, "encoder.fc.weight"), params(tape, "encoder.fc.bias"));
  check_finite(logits.value(), "encoder.fc");
  return {x, pooled, logits};
}

EncoderOutput encode_tensor(const Tensor& input, const ModelCheckpoint& ckpt) {
  const EncoderConfig config = encoder_config(ckpt);
  check_encoder_checkpoint(ckpt, config);
  nn::Tape tape(false);
  EncoderVars vars = encoder_forward(tape, tape.constant_ref(input), config, ParamBinder::frozen(ckpt));
  return {vars.feature_maps.value(), vars.pooled.value(), vars.logits.value()};
}

EncoderOutput encode_image(const RetinalImage& image, const ModelCheckpoint& ckpt) {
  return encode_tensor(preprocess_image(image, encoder_config(ckpt)), ckpt);
}

std::vector<ClassScore> predict_topk(std::span<const double> logits, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > logits.size()) {
    throw Error("predict_topk: k=" + std::to_string(k) + " outside [1, " + std::to_string(logits.size()) + "]");
  }
  const auto probs = nn::softmax(logits);
  std::vector<int> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return logits[a] > logits[b]; });
  std::vector<ClassScore> out;
  for (int i = 0; i < k; ++i) out.push_back({order[i], probs[order[i]]});
  return out;
}

}  // namespace retina
