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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "retina/cam.hpp"
#include "retina/checkpoint.hpp"
#include "retina/encoder.hpp"
#include "retina/error.hpp"
#include "retina/generator.hpp"
#include "retina/image.hpp"
#include "retina/manifest.hpp"
#include "retina/metrics.hpp"
#include "retina/parallel.hpp"
#include "retina/report.hpp"
#include "retina/synthetic.hpp"
#include "retina/trainer.hpp"

namespace retina::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kOverlayAlpha = 0.5;

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "'" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& text, const char* what) {
  std::vector<int> out;
  for (double v : parse_doubles(text, what)) {
    if (v != static_cast<int>(v)) throw CLI::ValidationError(what, "expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

// CAM of the given class, normalized and upsampled to the image.
Heatmap image_heatmap(const Heatmap& raw, const RetinalImage& image) {
  return upsample_bilinear(normalize_heatmap(raw), static_cast<std::size_t>(image.height),
                           static_cast<std::size_t>(image.width));
}

// Everything the table row needs for one image.
struct Analysis {
  std::vector<ClassScore> ranking;
  EncoderOutput encoded;
  std::vector<int> caption;
};

Analysis analyse(const RetinalImage& image, const std::vector<std::string>& keywords, const ModelCheckpoint& encoder,
                 const ModelCheckpoint& decoder, int beam, int max_len) {
  Analysis a;
  a.encoded = encode_image(image, encoder);
  a.ranking = predict_topk(a.encoded.logits.data(), encoder_config(encoder).num_classes);
  a.caption = generate_caption(a.encoded.pooled, keywords, decoder, beam, max_len);
  return a;
}

struct Options {
  // shared
  std::string manifest, out, encoder, decoder, config, image;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int workers = 1;
  // synth-data
  SyntheticConfig synth;
  // split
  std::string ratios = "0.6,0.2,0.2", counts;
  bool preserve = false;
  // stats
  std::string field = "description";
  // training
  std::optional<int> epochs, batch_size, decay_period, embed_dim, hidden_dim, image_size, min_freq;
  std::optional<double> lr, decay_factor;
  std::string init;
  bool no_keywords = false, joint = false;
  // evaluation / reports
  int beam = 3, max_len = 24, top_k = 3;
  std::string ks = "1,5", split = "test", keywords, group_by = "disease";
  std::optional<int> class_id;
  double alpha = kOverlayAlpha;
  // score
  std::string cand, refs, rankings;
};

TrainConfig training_config(const Options& o, const TrainConfig& defaults) {
  TrainConfig c = o.config.empty() ? defaults : load_train_config(o.config, defaults);
  if (o.seed_given || o.config.empty()) c.seed = o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.lr) c.sgd.learning_rate = *o.lr;
  if (o.decay_factor) c.sgd.decay_factor = *o.decay_factor;
  if (o.decay_period) c.sgd.decay_period_epochs = *o.decay_period;
  if (o.embed_dim) c.decoder.embed_dim = *o.embed_dim;
  if (o.hidden_dim) c.decoder.hidden_dim = *o.hidden_dim;
  if (o.image_size) c.encoder.image_size = *o.image_size;
  if (o.min_freq) c.min_word_frequency = *o.min_freq;
  if (o.no_keywords) c.decoder.keyword_mode = false;
  if (o.joint) c.joint_encoder = true;
  c.validate();
  return c;
}

void print_curve_summary(const TrainResult& r, const char* metric, std::ostream& out) {
  const EpochStats& best = r.curve.at(static_cast<std::size_t>(r.best_epoch));
  out << "best epoch " << best.epoch << ": train_loss " << best.train_loss << ", val_loss " << best.val_loss << ", "
      << metric << " " << best.val_metric << "\n";
}

int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticConfig cfg = o.synth;
  cfg.seed = o.seed;
  const DatasetManifest m = write_synthetic_dataset(cfg, o.out);
  out << "wrote " << m.records.size() << " records in " << m.classes.size() << " classes to "
      << (fs::path(o.out) / "manifest.json").string() << "\n";
  return kOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  DatasetManifest m = parse_manifest(o.manifest);
  if (!o.counts.empty()) {
    const auto c = parse_ints(o.counts, "--counts");
    if (c.size() != 3 || std::any_of(c.begin(), c.end(), [](int v) { return v < 0; })) {
      throw CLI::ValidationError("--counts", "expected three non-negative train,val,test sizes");
    }
    m = split_dataset_counts(std::move(m),
                             {static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]),
                              static_cast<std::size_t>(c[2])},
                             o.seed, o.preserve);
  } else {
    const auto r = parse_doubles(o.ratios, "--ratios");
    if (r.size() != 3) throw CLI::ValidationError("--ratios", "expected three train,val,test ratios");
    m = split_dataset(std::move(m), {r[0], r[1], r[2]}, o.seed, o.preserve);
  }
  const fs::path target = o.out.empty() ? fs::path(o.manifest) : fs::path(o.out);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  save_manifest(m, target);
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    out << to_string(s) << " " << m.in_split(s).size() << "\n";
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const DatasetManifest m = parse_manifest(o.manifest);
  if (o.field != "description" && o.field != "keywords") {
    throw CLI::ValidationError("--field", "expected description or keywords");
  }
  json j;
  j["records"] = m.records.size();
  json classes = json::object();
  for (const auto& c : m.classes) classes[c] = 0;
  json splits = json::object();
  for (const auto& r : m.records) {
    classes[r.disease] = classes[r.disease].get<int>() + 1;
    const std::string s = to_string(r.split);
    splits[s] = splits.value(s, 0) + 1;
  }
  j["classes"] = classes;
  j["splits"] = splits;
  json hist = json::object();
  const auto field = o.field == "keywords" ? LabelField::Keywords : LabelField::Description;
  for (const auto& [len, count] : word_length_histogram(m, field)) hist[std::to_string(len)] = count;
  j["word_length_histogram"] = {{"field", o.field}, {"counts", hist}};
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_train_rdi(const Options& o, std::ostream& out) {
  const DatasetManifest m = parse_manifest(o.manifest);
  const TrainConfig cfg = training_config(o, classifier_defaults());
  std::optional<ModelCheckpoint> init;
  if (!o.init.empty()) init = ModelCheckpoint::load(o.init);
  const TrainResult r =
      train_classifier(m, load_inputs(m, cfg.encoder), cfg, init ? &*init : nullptr);
  const fs::path root(o.out);
  fs::create_directories(root / "checkpoints");
  r.checkpoint.save(root / "checkpoints" / "rdi.ckpt");
  write_text(root / "checkpoints" / "rdi_config.json", json(cfg).dump(2) + "\n");
  write_text(root / "curves" / "rdi.csv", curve_to_csv(r.curve));
  print_curve_summary(r, "val_prec@1", out);
  out << "wrote " << (root / "checkpoints" / "rdi.ckpt").string() << "\n";
  return kOk;
}

int cmd_train_cdg(const Options& o, std::ostream& out) {
  const DatasetManifest m = parse_manifest(o.manifest);
  const ModelCheckpoint encoder = ModelCheckpoint::load(o.encoder);
  TrainConfig cfg = training_config(o, captioner_defaults());
  cfg.encoder = encoder_config(encoder);
  const TrainResult r = train_captioner(m, load_inputs(m, cfg.encoder), cfg, encoder);
  const fs::path root(o.out);
  fs::create_directories(root / "checkpoints");
  r.checkpoint.save(root / "checkpoints" / "cdg.ckpt");
  write_text(root / "checkpoints" / "cdg_config.json", json(cfg).dump(2) + "\n");
  decoder_vocabulary(r.checkpoint).save(root / "checkpoints" / "words.vocab");
  decoder_keyword_vocabulary(r.checkpoint).save(root / "checkpoints" / "keywords.vocab");
  write_text(root / "curves" / "cdg.csv", curve_to_csv(r.curve));
  print_curve_summary(r, "val_bleu_avg", out);
  out << "wrote " << (root / "checkpoints" / "cdg.ckpt").string() << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const DatasetManifest m = parse_manifest(o.manifest);
  std::optional<ModelCheckpoint> decoder;
  if (!o.decoder.empty()) decoder = ModelCheckpoint::load(o.decoder);
  if (o.encoder.empty() && !decoder) throw CLI::ValidationError("evaluate", "give --encoder or --decoder");
  const ModelCheckpoint encoder = o.encoder.empty() ? *decoder : ModelCheckpoint::load(o.encoder);
  EvaluationOptions opt;
  opt.beam_width = o.beam;
  opt.max_caption_length = o.max_len;
  opt.ks = parse_ints(o.ks, "--k");
  opt.workers = o.workers;
  opt.split = parse_split(o.split);
  const auto inputs = load_inputs(m, encoder_config(encoder));
  const EvaluationResult ev = evaluate_pipeline(m, inputs, encoder, decoder ? &*decoder : nullptr, opt);

  const fs::path root(o.out);
  fs::create_directories(root / "heatmaps");
  const auto classes = encoder_classes(encoder);
  std::optional<Vocabulary> words;
  if (decoder) words = decoder_vocabulary(*decoder);
  std::string cases = "id\tpredicted\tprobability\tcaption\n";
  std::size_t n = 0;
  for (const CaseRecord* r : m.in_split(opt.split)) {
    const CaseOutput& c = ev.cases[n++];
    const RetinalImage image = load_image(m.image_file(*r));
    save_image(root / "heatmaps" / (c.id + ".png"), overlay(image, image_heatmap(c.cam, image), kOverlayAlpha));
    const ClassScore& top = c.ranking.front();
    cases += c.id + "\t" + classes[static_cast<std::size_t>(top.class_id)] + "\t" + format_percent(top.probability) +
             "\t" + (words ? detokenize(words->decode(c.caption)) : "") + "\n";
  }
  const std::string metrics = json(ev.report).dump(2) + "\n";
  write_text(root / "reports" / "metrics.json", metrics);
  write_text(root / "reports" / "cases.tsv", cases);
  out << metrics;
  return kOk;
}

int cmd_explain(const Options& o, std::ostream& out) {
  const ModelCheckpoint encoder = ModelCheckpoint::load(o.encoder);
  const RetinalImage image = load_image(o.image);
  const EncoderOutput enc = encode_image(image, encoder);
  const auto classes = encoder_classes(encoder);
  const int top = predict_topk(enc.logits.data(), 1).front().class_id;
  const int cls = o.class_id.value_or(top);
  const Heatmap raw = compute_cam(enc.feature_maps, encoder.param("encoder.fc.weight"), cls);
  const Heatmap heat = image_heatmap(raw, image);
  const fs::path dir = fs::path(o.out) / "heatmaps";
  fs::create_directories(dir);
  const std::string stem = stem_of(o.image);
  save_image(dir / (stem + "_cam.png"), heatmap_image(heat));
  save_image(dir / (stem + "_overlay.png"), overlay(image, heat, o.alpha));
  write_text(dir / (stem + "_cam.txt"), heatmap_to_text(raw));
  out << "class " << cls << " (" << classes[static_cast<std::size_t>(cls)] << ")"
      << (cls == top ? ", top-1" : "") << "\n";
  return kOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const ModelCheckpoint decoder = ModelCheckpoint::load(o.decoder);
  const ModelCheckpoint encoder = o.encoder.empty() ? decoder : ModelCheckpoint::load(o.encoder);
  const auto classes = encoder_classes(encoder);
  const Vocabulary words = decoder_vocabulary(decoder);
  const int k = std::min<int>(o.top_k, static_cast<int>(classes.size()));
  if (k < 1) throw CLI::ValidationError("--top-k", "must be >= 1");

  std::vector<CaseRecord> records;
  std::vector<fs::path> files;
  if (!o.image.empty()) {
    CaseRecord r;
    r.id = stem_of(o.image);
    r.keywords = split_keywords(o.keywords);
    records.push_back(r);
    files.emplace_back(o.image);
  } else {
    const DatasetManifest m = parse_manifest(o.manifest);
    for (const CaseRecord* r : m.in_split(parse_split(o.split))) {
      records.push_back(*r);
      files.push_back(m.image_file(*r));
    }
    if (records.empty()) throw DataError("no records in split " + o.split);
  }

  const fs::path root(o.out);
  fs::create_directories(root / "assets");
  std::vector<MedicalReport> reports(records.size());
  // Each record is independent; results land in fixed slots.
  parallel_for(records.size(), o.workers, [&](std::size_t i) {
    const RetinalImage image = load_image(files[i]);
    const Analysis a = analyse(image, records[i].keywords, encoder, decoder, o.beam, o.max_len);
    const Heatmap cam =
        compute_cam(a.encoded.feature_maps, encoder.param("encoder.fc.weight"), a.ranking.front().class_id);
    const std::string image_name = records[i].id + ".png", cam_name = records[i].id + "_cam.png";
    save_image(root / "assets" / image_name, image);
    save_image(root / "assets" / cam_name, overlay(image, image_heatmap(cam, image), o.alpha));
    std::vector<DiseaseScore> top;
    for (int j = 0; j < k; ++j) {
      const auto& s = a.ranking[static_cast<std::size_t>(j)];
      top.push_back({classes[static_cast<std::size_t>(s.class_id)], s.probability});
    }
    reports[i] = build_report(records[i], top, words.decode(a.caption), "assets/" + image_name,
                              "assets/" + cam_name);
  });

  write_text(root / "report.html", render_html(reports, parse_group_by(o.group_by)));
  for (const auto& r : reports) out << render_text(r) << "\n";
  out << "wrote " << (root / "report.html").string() << "\n";
  return kOk;
}

int cmd_score(const Options& o, std::ostream& out) {
  MetricReport report;
  if (!o.cand.empty() || !o.refs.empty()) {
    if (o.cand.empty() || o.refs.empty()) throw CLI::ValidationError("--cand/--refs", "both files are required");
    const auto cand = read_lines(o.cand), refs = read_lines(o.refs);
    if (cand.size() != refs.size()) {
      throw DataError(o.cand + " has " + std::to_string(cand.size()) + " lines but " + o.refs + " has " +
                      std::to_string(refs.size()));
    }
    report = caption_metrics(cand, refs);
  }
  if (!o.rankings.empty()) add_precision(report, parse_rankings(read_file(o.rankings)), parse_ints(o.ks, "--k"));
  if (!report.has_captions && report.prec_at.empty()) {
    throw CLI::ValidationError("score", "give --cand and --refs, or --rankings");
  }
  const std::string text = json(report).dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, text);
  out << text;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retinal image analysis: disease identification, keyword-driven descriptions, class activation "
               "maps and table reports."};
  app.name("retina");
  app.require_subcommand(1);
  Options o;

  auto seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str(); };
  auto training = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON training config; flags override it")->check(CLI::ExistingFile);
    c->add_option("--epochs", o.epochs, "Training epochs");
    c->add_option("--batch-size", o.batch_size, "Mini-batch size");
    c->add_option("--lr", o.lr, "Base learning rate");
    c->add_option("--decay-factor", o.decay_factor, "Learning rate divisor at each decay step");
    c->add_option("--decay-period", o.decay_period, "Epochs between decay steps");
    seed(c);
  };

  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic retinal dataset with manifest");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--records", o.synth.records, "Number of records")->capture_default_str();
  synth->add_option("--classes", o.synth.classes, "Number of disease classes")->capture_default_str();
  synth->add_option("--keyword-vocab", o.synth.keyword_vocab, "Distinct keyword phrases")->capture_default_str();
  synth->add_option("--keywords-per-record", o.synth.keywords_per_record, "Keywords per record")
      ->capture_default_str();
  synth->add_option("--image-size", o.synth.image_size, "Image side in pixels")->capture_default_str();
  synth->add_option("--fa-fraction", o.synth.fa_fraction, "Share of grayscale FA images")->capture_default_str();
  seed(synth);

  auto* split = app.add_subcommand("split", "Assign records to train/val/test");
  split->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  split->add_option("--out", o.out, "Output manifest (default: overwrite the input)");
  auto* ratios = split->add_option("--ratios", o.ratios, "train,val,test ratios summing to 1")->capture_default_str();
  split->add_option("--counts", o.counts, "Explicit train,val,test sizes")->excludes(ratios);
  split->add_flag("--preserve", o.preserve, "Keep existing assignments, split only unassigned records");
  seed(split);

  auto* stats = app.add_subcommand("stats", "Print class, split and label-length statistics as JSON");
  stats->add_option("--manifest", o.manifest, "Manifest")->required()->check(CLI::ExistingFile);
  stats->add_option("--field", o.field, "Histogram field: description or keywords")->capture_default_str();

  auto* rdi = app.add_subcommand("train-rdi", "Train the disease identifier (image classifier)");
  rdi->add_option("--manifest", o.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  rdi->add_option("--out", o.out, "Output root (checkpoints/, curves/)")->required();
  rdi->add_option("--init", o.init, "Start from this checkpoint instead of random weights")
      ->check(CLI::ExistingFile);
  rdi->add_option("--image-size", o.image_size, "Input side after resizing");
  training(rdi);

  auto* cdg = app.add_subcommand("train-cdg", "Train the description generator on top of an identifier");
  cdg->add_option("--manifest", o.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  cdg->add_option("--encoder", o.encoder, "Identifier checkpoint")->required()->check(CLI::ExistingFile);
  cdg->add_option("--out", o.out, "Output root (checkpoints/, curves/)")->required();
  cdg->add_flag("--no-keywords", o.no_keywords, "Condition on the image feature only");
  cdg->add_flag("--joint", o.joint, "Fine-tune the encoder together with the decoder");
  cdg->add_option("--embed-dim", o.embed_dim, "Word and feature embedding size");
  cdg->add_option("--hidden-dim", o.hidden_dim, "LSTM state size");
  cdg->add_option("--min-freq", o.min_freq, "Minimum word count for the caption vocabulary");
  training(cdg);

  auto* eval = app.add_subcommand("evaluate", "Score identifier and generator on a split");
  eval->add_option("--manifest", o.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--encoder", o.encoder, "Identifier checkpoint (default: the one inside --decoder)")->check(CLI::ExistingFile);
  eval->add_option("--decoder", o.decoder, "Generator checkpoint (omit to score the identifier only)")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", o.out, "Output root (reports/, heatmaps/)")->required();
  eval->add_option("--beam", o.beam, "Beam width")->capture_default_str();
  eval->add_option("--max-len", o.max_len, "Maximum caption length")->capture_default_str();
  eval->add_option("--k", o.ks, "Comma-separated k values for Prec@k")->capture_default_str();
  eval->add_option("--split", o.split, "Split to evaluate")->capture_default_str();
  eval->add_option("--workers", o.workers, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
  seed(eval);

  auto* explain = app.add_subcommand("explain", "Class activation map for one image");
  explain->add_option("--image", o.image, "PGM, PPM or PNG image")->required()->check(CLI::ExistingFile);
  explain->add_option("--encoder", o.encoder, "Identifier checkpoint")->required()->check(CLI::ExistingFile);
  explain->add_option("--out", o.out, "Output root (heatmaps/)")->required();
  explain->add_option("--class", o.class_id, "Class id to explain (default: top-1)");
  explain->add_option("--alpha", o.alpha, "Overlay opacity in [0, 1]")->capture_default_str();
  seed(explain);

  auto* report = app.add_subcommand("report", "Table report: image, CAM, diseases, keywords, description");
  auto* image_opt = report->add_option("--image", o.image, "Single image")->check(CLI::ExistingFile);
  report->add_option("--keywords", o.keywords, "Comma-separated keywords for --image")->needs(image_opt);
  report->add_option("--manifest", o.manifest, "Report every record of --split instead")
      ->check(CLI::ExistingFile)
      ->excludes(image_opt);
  report->add_option("--split", o.split, "Split used with --manifest")->capture_default_str();
  report->add_option("--encoder", o.encoder, "Identifier checkpoint (default: the one inside --decoder)")->check(CLI::ExistingFile);
  report->add_option("--decoder", o.decoder, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  report->add_option("--beam", o.beam, "Beam width")->capture_default_str();
  report->add_option("--max-len", o.max_len, "Maximum caption length")->capture_default_str();
  report->add_option("--top-k", o.top_k, "Diseases listed per case")->capture_default_str();
  report->add_option("--group-by", o.group_by, "Row order: none or disease")->capture_default_str();
  report->add_option("--alpha", o.alpha, "CAM overlay opacity")->capture_default_str();
  report->add_option("--out", o.out, "Output directory (report.html, assets/)")->required();
  report->add_option("--workers", o.workers, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
  seed(report);

  auto* score = app.add_subcommand("score", "Caption metrics and Prec@k from text files, as JSON");
  score->add_option("--cand", o.cand, "Generated captions, one per line")->check(CLI::ExistingFile);
  score->add_option("--refs", o.refs, "Reference captions, aligned with --cand")->check(CLI::ExistingFile);
  score->add_option("--rankings", o.rankings, "Lines of: truth id, then ranked class ids")
      ->check(CLI::ExistingFile);
  score->add_option("--k", o.ks, "Comma-separated k values for Prec@k")->capture_default_str();
  score->add_option("--out", o.out, "Also write the JSON here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  o.seed_given = rdi->count("--seed") > 0 || cdg->count("--seed") > 0;
  try {
    if (*synth) return cmd_synth(o, out);
    if (*split) return cmd_split(o, out);
    if (*stats) return cmd_stats(o, out);
    if (*rdi) return cmd_train_rdi(o, out);
    if (*cdg) return cmd_train_cdg(o, out);
    if (*eval) return cmd_evaluate(o, out);
    if (*explain) return cmd_explain(o, out);
    if (*report) {
      if (o.image.empty() && o.manifest.empty()) {
        throw CLI::ValidationError("report", "give --image or --manifest");
      }
      return cmd_report(o, out);
    }
    if (*score) return cmd_score(o, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsage;
}

}  // namespace retina::cli
