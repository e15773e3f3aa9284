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
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "retina/error.hpp"
#include "retina/synthetic.hpp"

namespace retina {
namespace {

using nn::Tensor;

TEST(LrSchedule, StepDecay) {
  nn::SgdConfig sgd;  // 0.1, factor 5, period 50
  EXPECT_DOUBLE_EQ(lr_schedule(0, sgd), 0.1);
  EXPECT_DOUBLE_EQ(lr_schedule(49, sgd), 0.1);
  EXPECT_DOUBLE_EQ(lr_schedule(50, sgd), 0.02);
  EXPECT_DOUBLE_EQ(lr_schedule(100, sgd), 0.004);
  for (int e = 1; e < 500; ++e) EXPECT_LE(lr_schedule(e, sgd), lr_schedule(e - 1, sgd));
  EXPECT_THROW(lr_schedule(-1, sgd), Error);
  sgd.decay_factor = 1.0;
  EXPECT_THROW(lr_schedule(0, sgd), DataError);
}

TEST(TrainConfig, JsonRoundTripAndVersion) {
  TrainConfig c;
  c.epochs = 7;
  c.seed = 99;
  c.sgd.learning_rate = 0.3;
  c.encoder.image_size = 16;
  c.decoder.keyword_mode = false;
  c.joint_encoder = true;
  const nlohmann::json j = c;
  EXPECT_EQ(j.at("version"), TrainConfig::kVersion);
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  nlohmann::json future = j;
  future["version"] = 2;
  EXPECT_THROW(future.get<TrainConfig>(), DataError);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), DataError);
}

TEST(Curve, CsvLayout) {
  const TrainingCurve curve{{0, 1.5, 2.0, 0.25}, {1, 0.75, 1.0, 0.5}};
  EXPECT_EQ(curve_to_csv(curve), "epoch,train_loss,val_loss,val_metric\n0,1.5,2,0.25\n1,0.75,1,0.5\n");
}

EncoderConfig tiny_encoder() {
  EncoderConfig cfg;
  cfg.image_size = 16;
  cfg.stages = {{4, 3, 1, 2}, {8, 3, 1, 2}};
  return cfg;
}

struct Data {
  DatasetManifest manifest;
  std::vector<Tensor> inputs;
};

Data synthetic(int records, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.records = records;
  sc.seed = seed;
  SyntheticDataset ds = generate_synthetic_dataset(sc);
  return {split_dataset(ds.manifest, {0.6, 0.2, 0.2}, seed), preprocess_images(ds.images, tiny_encoder())};
}

TrainConfig classifier_config() {
  TrainConfig c;
  c.encoder = tiny_encoder();
  c.batch_size = 4;
  c.epochs = 100;
  return c;
}

double train_accuracy(const Data& d, const ModelCheckpoint& ck) {
  int hits = 0, total = 0;
  for (std::size_t i = 0; i < d.manifest.records.size(); ++i) {
    if (d.manifest.records[i].split != Split::Train) continue;
    const auto logits = encode_tensor(d.inputs[i], ck).logits;
    hits += predict_topk(logits.data(), 1)[0].class_id == d.manifest.class_id(d.manifest.records[i].disease);
    ++total;
  }
  return static_cast<double>(hits) / total;
}

TEST(TrainClassifier, FitsSyntheticSet) {
  const Data d = synthetic(200, 3);
  const TrainResult r = train_classifier(d.manifest, d.inputs, classifier_config());
  ASSERT_EQ(r.curve.size(), 100u);
  EXPECT_GE(train_accuracy(d, r.checkpoint), 0.95);
  EXPECT_GE(r.curve[static_cast<std::size_t>(r.best_epoch)].val_metric, r.curve.front().val_metric);
  EXPECT_EQ(encoder_classes(r.checkpoint), d.manifest.classes);
}

TEST(TrainClassifier, DeterministicAndResumable) {
  const Data d = synthetic(40, 5);
  TrainConfig c = classifier_config();
  c.epochs = 3;
  const TrainResult a = train_classifier(d.manifest, d.inputs, c);
  const TrainResult b = train_classifier(d.manifest, d.inputs, c);
  EXPECT_EQ(a.checkpoint.serialize(), b.checkpoint.serialize());
  EXPECT_EQ(curve_to_csv(a.curve), curve_to_csv(b.curve));

  // Starting from a saved checkpoint stands in for the pre-trained variant.
  const TrainResult warm = train_classifier(d.manifest, d.inputs, c, &a.checkpoint);
  EXPECT_EQ(warm.curve.size(), 3u);
  for (const auto& e : warm.curve) EXPECT_TRUE(std::isfinite(e.train_loss));

  ModelCheckpoint other = a.checkpoint;
  other.meta["encoder.classes"] = R"(["w","x","y","z"])";
  EXPECT_THROW(train_classifier(d.manifest, d.inputs, c, &other), DataError);
}

TEST(TrainClassifier, RejectsEmptySplits) {
  Data d = synthetic(20, 1);
  for (auto& r : d.manifest.records) {
    if (r.split == Split::Val) r.split = Split::Test;
  }
  EXPECT_THROW(train_classifier(d.manifest, d.inputs, classifier_config()), DataError);
}

// Eight records, every one in train: the memorization setting.
struct Toy {
  Data data;
  ModelCheckpoint encoder;
};

Toy toy_set() {
  SyntheticConfig sc;
  sc.records = 8;
  sc.seed = 1;
  SyntheticDataset ds = generate_synthetic_dataset(sc);
  for (auto& r : ds.manifest.records) r.split = Split::Train;
  EncoderConfig ec = tiny_encoder();
  ec.num_classes = 4;
  return {{ds.manifest, preprocess_images(ds.images, ec)}, init_encoder(ec, 1, ds.manifest.classes)};
}

TrainConfig captioner_config(bool keywords) {
  TrainConfig c;
  c.batch_size = 1;
  c.epochs = 800;
  c.sgd.learning_rate = 0.5;
  c.sgd.decay_period_epochs = 100000;
  c.decoder.keyword_mode = keywords;
  return c;
}

class Captioner : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    toy_ = new Toy(toy_set());
    with_ = new TrainResult(train_captioner(toy_->data.manifest, toy_->data.inputs, captioner_config(true), toy_->encoder));
    without_ =
        new TrainResult(train_captioner(toy_->data.manifest, toy_->data.inputs, captioner_config(false), toy_->encoder));
  }
  static void TearDownTestSuite() {
    delete toy_;
    delete with_;
    delete without_;
  }

  static std::vector<std::vector<int>> captions(const ModelCheckpoint& ck, const DatasetManifest& m) {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      out.push_back(generate_caption(encode_tensor(toy_->data.inputs[i], ck).pooled, m.records[i].keywords, ck, 1, 30));
    }
    return out;
  }

  static Toy* toy_;
  static TrainResult* with_;
  static TrainResult* without_;
};

Toy* Captioner::toy_ = nullptr;
TrainResult* Captioner::with_ = nullptr;
TrainResult* Captioner::without_ = nullptr;

TEST_F(Captioner, MemorizesToySet) {
  EXPECT_LT(with_->curve.back().train_loss, 0.05);
  EXPECT_TRUE(std::isnan(with_->curve.back().val_metric));
  const Vocabulary words = decoder_vocabulary(with_->checkpoint);
  const auto generated = captions(with_->checkpoint, toy_->data.manifest);
  int exact = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    exact += words.decode(generated[i]) == tokenize(toy_->data.manifest.records[i].description);
  }
  EXPECT_GE(exact, 7);
}

TEST_F(Captioner, KeywordModeChangesCaptions) {
  EXPECT_FALSE(decoder_config(without_->checkpoint).keyword_mode);
  EXPECT_FALSE(without_->checkpoint.has_param("kw_proj.weight"));
  EXPECT_NE(captions(with_->checkpoint, toy_->data.manifest), captions(without_->checkpoint, toy_->data.manifest));
}

TEST_F(Captioner, KeywordOrderDoesNotMatter) {
  DatasetManifest shuffled = toy_->data.manifest;
  for (auto& r : shuffled.records) std::reverse(r.keywords.begin(), r.keywords.end());
  EXPECT_EQ(captions(with_->checkpoint, shuffled), captions(with_->checkpoint, toy_->data.manifest));
}

TEST_F(Captioner, PerfectMemorizationScoresOneAsTest) {
  DatasetManifest as_test = toy_->data.manifest;
  for (auto& r : as_test.records) r.split = Split::Test;
  EvaluationOptions opt;
  opt.beam_width = 1;
  opt.max_caption_length = 30;
  const EvaluationResult ev = evaluate_pipeline(as_test, toy_->data.inputs, with_->checkpoint, &with_->checkpoint, opt);
  const Vocabulary words = decoder_vocabulary(with_->checkpoint);
  bool all_exact = true;
  for (std::size_t i = 0; i < ev.cases.size(); ++i) {
    all_exact = all_exact && words.decode(ev.cases[i].caption) == tokenize(as_test.records[i].description);
  }
  if (all_exact) {
    for (double b : ev.report.bleu) EXPECT_EQ(b, 1.0);
  }
  EXPECT_TRUE(ev.report.has_captions);
}

TEST(TrainCaptioner, LeakageGuardAndIsolation) {
  const Data d = synthetic(40, 2);
  EncoderConfig ec = tiny_encoder();
  ec.num_classes = 4;
  const ModelCheckpoint enc = init_encoder(ec, 2, d.manifest.classes);
  TrainConfig c = captioner_config(true);
  c.epochs = 2;
  c.batch_size = 4;

  DatasetManifest all_train = d.manifest;
  for (auto& r : all_train.records) r.split = Split::Train;
  const CaptionVocabularies leaky = build_vocabularies(all_train, 1);
  EXPECT_THROW(train_captioner(d.manifest, d.inputs, c, enc, leaky), DataError);

  const CaptionVocabularies clean = build_vocabularies(d.manifest, 1);
  const TrainResult r = train_captioner(d.manifest, d.inputs, c, enc, clean);
  std::set<std::string> test_ids, train_ids;
  for (const auto& rec : d.manifest.records) {
    if (rec.split == Split::Test) test_ids.insert(rec.id);
    if (rec.split == Split::Train) train_ids.insert(rec.id);
  }
  const std::set<std::string> seen(r.trained_ids.begin(), r.trained_ids.end());
  EXPECT_EQ(seen, train_ids);
  for (const auto& id : test_ids) EXPECT_EQ(seen.count(id), 0u);

  const TrainResult again = train_captioner(d.manifest, d.inputs, c, enc, clean);
  EXPECT_EQ(again.checkpoint.serialize(), r.checkpoint.serialize());
}

TEST(TrainCaptioner, JointEncoderUpdatesEncoder) {
  const Data d = synthetic(20, 4);
  EncoderConfig ec = tiny_encoder();
  ec.num_classes = 4;
  const ModelCheckpoint enc = init_encoder(ec, 4, d.manifest.classes);
  TrainConfig c = captioner_config(true);
  c.epochs = 1;
  c.batch_size = 4;
  const TrainResult frozen = train_captioner(d.manifest, d.inputs, c, enc);
  EXPECT_EQ(frozen.checkpoint.param("encoder.conv1.weight"), enc.param("encoder.conv1.weight"));
  c.joint_encoder = true;
  const TrainResult joint = train_captioner(d.manifest, d.inputs, c, enc);
  EXPECT_NE(joint.checkpoint.param("encoder.conv1.weight"), enc.param("encoder.conv1.weight"));
}

TEST(Evaluate, OrderAndWorkerInvariance) {
  const Data d = synthetic(40, 6);
  TrainConfig c = classifier_config();
  c.epochs = 5;
  const TrainResult cls = train_classifier(d.manifest, d.inputs, c);
  TrainConfig cc = captioner_config(true);
  cc.epochs = 3;
  cc.batch_size = 4;
  const TrainResult cap = train_captioner(d.manifest, d.inputs, cc, cls.checkpoint);

  EvaluationOptions opt;
  opt.ks = {1, 2, 5, 9};  // 5 and 9 exceed the 4 classes and are skipped
  const EvaluationResult base = evaluate_pipeline(d.manifest, d.inputs, cls.checkpoint, &cap.checkpoint, opt);
  EXPECT_EQ(base.report.prec_at.size(), 2u);
  EXPECT_LE(base.report.prec_at.at(1), base.report.prec_at.at(2));
  EXPECT_EQ(base.cases.size(), d.manifest.in_split(Split::Test).size());
  for (const auto& cs : base.cases) {
    EXPECT_EQ(cs.cam.height, 4u);
    EXPECT_EQ(cs.ranking.size(), 4u);
  }

  opt.workers = 4;
  const EvaluationResult parallel = evaluate_pipeline(d.manifest, d.inputs, cls.checkpoint, &cap.checkpoint, opt);
  EXPECT_EQ(nlohmann::json(parallel.report), nlohmann::json(base.report));
  for (std::size_t i = 0; i < base.cases.size(); ++i) {
    EXPECT_EQ(parallel.cases[i].caption, base.cases[i].caption);
    EXPECT_EQ(parallel.cases[i].cam, base.cases[i].cam);
  }

  DatasetManifest reversed = d.manifest;
  std::vector<Tensor> reversed_inputs = d.inputs;
  std::reverse(reversed.records.begin(), reversed.records.end());
  std::reverse(reversed_inputs.begin(), reversed_inputs.end());
  opt.workers = 1;
  const EvaluationResult rev = evaluate_pipeline(reversed, reversed_inputs, cls.checkpoint, &cap.checkpoint, opt);
  EXPECT_EQ(rev.report.prec_at, base.report.prec_at);
  EXPECT_NEAR(rev.report.rouge, base.report.rouge, 1e-12);
  EXPECT_NEAR(rev.report.cider, base.report.cider, 1e-9);
  for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(rev.report.bleu[n], base.report.bleu[n]);

  const EvaluationResult cls_only = evaluate_pipeline(d.manifest, d.inputs, cls.checkpoint, nullptr, opt);
  EXPECT_FALSE(cls_only.report.has_captions);
  EXPECT_EQ(cls_only.report.prec_at, base.report.prec_at);
}

TEST(Evaluate, RejectsMismatchedCheckpoints) {
  const Data d = synthetic(20, 7);
  EncoderConfig ec = tiny_encoder();
  ec.num_classes = 4;
  const ModelCheckpoint wrong_classes = init_encoder(ec, 1, {"p", "q", "r", "s"});
  EXPECT_THROW(evaluate_pipeline(d.manifest, d.inputs, wrong_classes, nullptr, {}), DataError);

  const ModelCheckpoint enc = init_encoder(ec, 1, d.manifest.classes);
  const ModelCheckpoint dec =
      init_decoder(DecoderConfig{}, 32, Vocabulary::build({{"a"}}), Vocabulary::build({{"k"}}), 1);
  EXPECT_THROW(evaluate_pipeline(d.manifest, d.inputs, enc, &dec, {}), DataError);
}

}  // namespace
}  // namespace retina
