// Copyright 2026 The graspprior Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "graspprior/commands.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "graspprior/bc.h"
#include "graspprior/config_util.h"
#include "graspprior/cvae.h"
#include "graspprior/error.h"
#include "graspprior/extraction.h"
#include "graspprior/image_io.h"
#include "graspprior/log.h"
#include "graspprior/manifest.h"
#include "graspprior/policy.h"
#include "graspprior/prior_model.h"
#include "graspprior/seeding.h"
#include "graspprior/synth.h"
#include "graspprior/tokenizer.h"

namespace graspprior::cli {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void RequireFile(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::is_regular_file(path)) throw Error(ErrorCode::kIo, what + " not found: '" + path + "'");
}

// File sections restricted to `allowed`, with --set overrides applied.
json Sections(const GlobalOptions& global, const std::vector<std::string>& allowed) {
  json config = global.config.is_null() ? json::object() : global.config;
  if (!config.is_object()) throw Error(ErrorCode::kInvalidConfig, "config file must hold a JSON object");
  auto check = [&](const std::string& section) {
    if (std::find(allowed.begin(), allowed.end(), section) == allowed.end()) {
      throw Error(ErrorCode::kInvalidConfig, "unknown config section '" + section + "' for this command");
    }
  };
  for (const auto& [key, value] : config.items()) check(key);
  for (const std::string& o : global.overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error(ErrorCode::kInvalidConfig, "override must look like section.key=value: '" + o + "'");
    }
    const std::string section = o.substr(0, dot), key = o.substr(dot + 1, eq - dot - 1), text = o.substr(eq + 1);
    check(section);
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = text;
    config[section][key] = value;
  }
  return config;
}

json Section(const json& config, const std::string& name) { return config.contains(name) ? config[name] : json(); }

void Prepare(const GlobalOptions& global) {
  if (global.out_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "output directory is empty");
  fs::create_directories(global.out_dir);
}

void EchoConfig(const GlobalOptions& global, const std::string& command, const ordered_json& inputs,
                const ordered_json& sections) {
  ordered_json echo;
  echo["command"] = command;
  echo["seed"] = global.seed;
  echo["device"] = global.device;
  echo["inputs"] = inputs;
  for (const auto& [key, value] : sections.items()) echo[key] = value;
  WriteText(fs::path(global.out_dir) / "config.json", echo.dump(2) + "\n");
}

synth::ApproachCorpusSpec CorpusFromJson(const json& j) {
  synth::ApproachCorpusSpec c;
  const ordered_json defaults{{"count", c.count},
                              {"timeout_every", c.timeout_every},
                              {"degenerate_every", c.degenerate_every},
                              {"ratio_every", c.ratio_every},
                              {"seed", c.seed}};
  RejectUnknownKeys(j, defaults, "corpus");
  if (j.is_null()) return c;
  c.count = j.value("count", c.count);
  c.timeout_every = j.value("timeout_every", c.timeout_every);
  c.degenerate_every = j.value("degenerate_every", c.degenerate_every);
  c.ratio_every = j.value("ratio_every", c.ratio_every);
  c.seed = j.value("seed", c.seed);
  if (c.count < 0) throw Error(ErrorCode::kInvalidConfig, "corpus count must be >= 0");
  return c;
}

ordered_json ToJson(const synth::ApproachCorpusSpec& c) {
  return {{"count", c.count},
          {"timeout_every", c.timeout_every},
          {"degenerate_every", c.degenerate_every},
          {"ratio_every", c.ratio_every},
          {"seed", c.seed}};
}

ordered_json ToJson(const synth::SynthPoseSpec& c) {
  return {{"num_prototypes", c.num_prototypes},
          {"noise_scale", c.noise_scale},
          {"corpus_size", c.corpus_size},
          {"seed", c.seed},
          {"sample_stream", c.sample_stream}};
}

synth::SynthPoseSpec PosesFromJson(const json& j) {
  synth::SynthPoseSpec c;
  RejectUnknownKeys(j, ToJson(c), "poses");
  if (j.is_null()) return c;
  c.num_prototypes = j.value("num_prototypes", c.num_prototypes);
  c.noise_scale = j.value("noise_scale", c.noise_scale);
  c.corpus_size = j.value("corpus_size", c.corpus_size);
  c.seed = j.value("seed", c.seed);
  c.sample_stream = j.value("sample_stream", c.sample_stream);
  return c;
}

ordered_json ToJson(const synth::SynthPriorSpec& c) {
  return {{"image_size", c.image_size}, {"min_radius", c.min_radius}, {"max_radius", c.max_radius},
          {"num_colors", c.num_colors}, {"draw_hand", c.draw_hand},   {"seed", c.seed}};
}

synth::SynthPriorSpec SceneFromJson(const json& j) {
  synth::SynthPriorSpec c;
  RejectUnknownKeys(j, ToJson(c), "synthetic");
  if (j.is_null()) return c;
  c.image_size = j.value("image_size", c.image_size);
  c.min_radius = j.value("min_radius", c.min_radius);
  c.max_radius = j.value("max_radius", c.max_radius);
  c.num_colors = j.value("num_colors", c.num_colors);
  c.draw_hand = j.value("draw_hand", c.draw_hand);
  c.seed = j.value("seed", c.seed);
  return c;
}

struct EncoderChoice {
  int grid = 8;
};

ordered_json ToJson(const EncoderChoice& c) { return {{"grid", c.grid}}; }

EncoderChoice EncoderFromJson(const json& j) {
  EncoderChoice c;
  RejectUnknownKeys(j, ToJson(c), "encoder");
  if (j.is_null()) return c;
  c.grid = j.value("grid", c.grid);
  if (c.grid < 1) throw Error(ErrorCode::kInvalidConfig, "encoder grid must be >= 1");
  return c;
}

std::unique_ptr<policy::FrozenEncoder> MakeEncoder(const std::string& checkpoint, const EncoderChoice& choice) {
  if (checkpoint.empty()) return std::make_unique<policy::PooledPixelEncoder>(choice.grid);
  RequireFile(checkpoint, "checkpoint");
  return std::make_unique<prior::PriorFrozenEncoder>(prior::LoadPriorModel(checkpoint), "prior");
}

std::vector<PredictionSample> OkSamples(std::vector<PredictionSample> samples) {
  std::erase_if(samples, [](const PredictionSample& s) { return s.status != "ok"; });
  return samples;
}

// Throws before any output is written when a manifest cannot feed the model.
void CheckSamplesMatchModel(std::span<const PredictionSample> samples, const prior::PriorModelConfig& config,
                            const std::string& what) {
  for (const auto& s : samples) {
    if (s.image.width != config.image_size || s.image.height != config.image_size) {
      throw Error(ErrorCode::kShapeMismatch, what + " sample " + s.sample_id + " is " + std::to_string(s.image.width) +
                                                 "x" + std::to_string(s.image.height) + ", model image_size is " +
                                                 std::to_string(config.image_size));
    }
    if (config.loss.hand_mode != prior::HandHeadMode::kTokens) continue;
    if (!s.hand_tokens) {
      throw Error(ErrorCode::kMissingAnnotation, what + " sample " + s.sample_id + " has no hand tokens");
    }
    if (static_cast<int>(s.hand_tokens->tokens.size()) != config.loss.num_codebooks) {
      throw Error(ErrorCode::kShapeMismatch, what + " sample " + s.sample_id + " has " +
                                                 std::to_string(s.hand_tokens->tokens.size()) +
                                                 " tokens, model expects " + std::to_string(config.loss.num_codebooks));
    }
  }
}

// Mean success rate against step, one polyline per run.
std::string SuccessCurvesSvg(const std::vector<std::pair<std::string, std::map<int, double>>>& curves) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 160, kTop = 20, kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  int max_step = 1;
  for (const auto& [name, curve] : curves) {
    if (!curve.empty()) max_step = std::max(max_step, curve.rbegin()->first);
  }
  const double plot_w = kW - kLeft - kRight, plot_h = kH - kTop - kBottom;
  auto px = [&](double step) { return kLeft + plot_w * step / max_step; };
  auto py = [&](double rate) { return kTop + plot_h * (1.0 - rate / 100.0); };
  std::string svg = log::Format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
      kW, kH);
  svg += log::Format("<path d=\"M%.2f %.2f V%.2f H%.2f\" stroke=\"black\" fill=\"none\"/>\n", px(0), py(100), py(0),
                     px(max_step));
  for (int r = 0; r <= 100; r += 25) {
    svg += log::Format("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%d</text>\n", kLeft - 6, py(r) + 4, r);
  }
  svg += log::Format("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%d</text>\n", px(max_step), py(0) + 18,
                     max_step);
  svg += log::Format("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">training step</text>\n",
                     kLeft + plot_w / 2, kH - 12);
  svg += log::Format("<text x=\"14\" y=\"%.2f\" transform=\"rotate(-90 14 %.2f)\" text-anchor=\"middle\">"
                     "mean success rate (%%)</text>\n",
                     kTop + plot_h / 2, kTop + plot_h / 2);
  for (size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string points;
    for (const auto& [step, rate] : curves[i].second) points += log::Format("%.2f,%.2f ", px(step), py(rate));
    if (!points.empty()) points.pop_back();
    svg += log::Format("<polyline points=\"%s\" stroke=\"%s\" fill=\"none\" stroke-width=\"2\"/>\n",
                       points.c_str(), color);
    const double ly = kTop + 16.0 * (i + 1);
    svg += log::Format("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                       kW - kRight + 10, ly - 4, kW - kRight + 30, ly - 4, color);
    svg += log::Format("<text x=\"%.2f\" y=\"%.2f\">%s</text>\n", kW - kRight + 36, ly,
                       curves[i].first.c_str());
  }
  return svg + "</svg>\n";
}

std::string JsonLine(const ordered_json& j) { return j.dump() + "\n"; }

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string DefaultOutputDir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutputEnvVar); env && *env) return env;
  return "runs";
}

json LoadConfigFile(const std::string& path) {
  RequireFile(path, "config file");
  const json j = json::parse(ReadText(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config file is not a JSON object: " + path);
  return j;
}

void ApplyGlobalOptions(const GlobalOptions& global) {
  if (global.device != "cpu") throw Error(ErrorCode::kInvalidConfig, "unsupported device '" + global.device + "'; only cpu is available");
  log::SetLevel(global.log_level);
}

void RunExtract(const GlobalOptions& global, const ExtractOptions& options) {
  const json config = Sections(global, {"corpus", "extraction"});
  json corpus_json = Section(config, "corpus");
  if (!options.input.empty()) {
    RequireFile(options.input, "input corpus spec");
    corpus_json = json::parse(ReadText(options.input), nullptr, false);
    if (corpus_json.is_discarded()) throw Error(ErrorCode::kInvalidConfig, "input corpus spec is not JSON: " + options.input);
  }
  auto corpus = CorpusFromJson(corpus_json);
  auto extraction_config = extraction::ExtractionConfig::FromJson(Section(config, "extraction"));
  if (global.seed_given) corpus.seed = extraction_config.seed = global.seed;

  Prepare(global);
  EchoConfig(global, "extract", {{"input", options.input}},
             {{"corpus", ToJson(corpus)}, {"extraction", extraction_config.ToJson()}});

  const auto specs = synth::MakeApproachCorpus(corpus);
  std::vector<extraction::VideoSource> sources;
  std::string truth;
  for (size_t i = 0; i < specs.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "seq_%04zu", i);
    const auto spec = specs[i];
    sources.push_back({id, [spec] { return std::unique_ptr<extraction::PerceptionOracle>(synth::GenerateApproachSequence(spec)); }});
    const auto& t = synth::GenerateApproachSequence(spec)->ground_truth();
    truth += JsonLine({{"video_id", id},
                       {"contact_frame", t.contact_frame},
                       {"prediction_frame", t.prediction_frame},
                       {"status", extraction::ToString(t.status)}});
  }
  auto result = extraction::BuildDataset(sources, extraction_config);
  WriteDataset(global.out_dir, result.samples);
  WriteText(fs::path(global.out_dir) / "ground_truth.jsonl", truth);

  ordered_json summary;
  summary["n_sequences"] = specs.size();
  summary["n_events"] = result.events.size();
  summary["n_samples"] = result.samples.size();
  summary["status_counts"] = result.status_counts;
  summary["failures"] = ordered_json::array();
  for (const auto& [video, message] : result.failures) summary["failures"].push_back({{"video_id", video}, {"message", message}});
  WriteText(fs::path(global.out_dir) / "extraction_summary.json", summary.dump(2) + "\n");
  log::Info(log::Format("extracted %zu samples from %zu sequences (%zu events)", result.samples.size(), specs.size(),
                        result.events.size()));
  for (const auto& [status, count] : result.status_counts) log::Info(log::Format("  %s: %d", status.c_str(), count));
}

void RunTrainTokenizer(const GlobalOptions& global, const TrainTokenizerOptions& options) {
  const json config = Sections(global, {"poses", "tokenizer"});
  auto pose_spec = PosesFromJson(Section(config, "poses"));
  auto tok_config = tokenizer::TokenizerConfig::FromJson(Section(config, "tokenizer"));
  if (global.seed_given) pose_spec.seed = tok_config.seed = global.seed;

  std::vector<PredictionSample> samples;
  std::vector<HandPose> poses;
  if (!options.manifest.empty()) {
    RequireFile(options.manifest, "manifest");
    samples = OkSamples(ReadManifest(options.manifest, false));
    for (const auto& s : samples) poses.push_back(s.raw_hand_pose);
  } else {
    poses = synth::GeneratePoseCorpus(pose_spec).poses;
  }
  if (poses.empty()) throw Error(ErrorCode::kEmptyCorpus, "no hand poses to train on");

  Prepare(global);
  ordered_json sections{{"tokenizer", tok_config.ToJson()}};
  if (options.manifest.empty()) sections["poses"] = ToJson(pose_spec);
  EchoConfig(global, "train-tokenizer", {{"manifest", options.manifest}}, sections);

  std::string log;
  auto result = tokenizer::TrainTokenizer(poses, tok_config, [&](int step, double loss) {
    log += JsonLine({{"step", step}, {"loss", loss}});
    if (step % 500 == 0) log::Info(log::Format("tokenizer step %d loss %.6f", step, loss));
  });
  WriteText(fs::path(global.out_dir) / "tokenizer_log.jsonl", log);
  tokenizer::SaveTokenizer(result.model, (fs::path(global.out_dir) / "tokenizer.pt").string());

  ordered_json report;
  report["n_poses"] = poses.size();
  report["reconstruction_error"] = result.final_error;
  report["utilization"] = result.utilization;
  double mean = 0.0;
  for (double u : result.utilization) mean += u / result.utilization.size();
  report["mean_utilization"] = mean;
  report["epoch_loss"] = result.epoch_loss;
  WriteText(fs::path(global.out_dir) / "utilization.json", report.dump(2) + "\n");
  log::Info(log::Format("tokenizer reconstruction error %.5f, mean utilization %.3f", result.final_error, mean));

  if (!samples.empty()) {
    // Tokenized copy of the input manifest; image paths now point back at the
    // input dataset.
    const auto tokens = tokenizer::TokenizeAll(result.model, poses);
    const fs::path source_dir = fs::absolute(options.manifest).parent_path();
    for (size_t i = 0; i < samples.size(); ++i) {
      samples[i].hand_tokens = tokens[i];
      samples[i].image_path = fs::relative(source_dir / samples[i].image_path, fs::absolute(global.out_dir)).generic_string();
    }
    WriteManifest((fs::path(global.out_dir) / "manifest.jsonl").string(), samples);
  }
}

void RunTrainPrior(const GlobalOptions& global, const TrainPriorOptions& options) {
  const json config = Sections(global, {"model", "train", "synthetic", "poses"});
  auto model_config = prior::PriorModelConfig::FromJson(Section(config, "model"));
  auto train_config = prior::TrainPriorConfig::FromJson(Section(config, "train"));
  auto scene = SceneFromJson(Section(config, "synthetic"));
  auto pose_spec = PosesFromJson(Section(config, "poses"));
  if (global.seed_given) train_config.seed = scene.seed = pose_spec.seed = global.seed;
  if (options.no_contact_loss) model_config.loss = prior::ApplyAblation(model_config.loss, prior::Ablation::kNoContact);
  if (options.no_hand_loss) model_config.loss = prior::ApplyAblation(model_config.loss, prior::Ablation::kNoHand);
  if (options.hand_regression) model_config.loss = prior::ApplyAblation(model_config.loss, prior::Ablation::kHandRegression);
  model_config.Validate();
  if (options.synthetic > 0 && !options.manifest.empty()) throw Error(ErrorCode::kInvalidConfig, "use either --manifest or --synthetic");
  if (options.synthetic <= 0 && options.manifest.empty()) throw Error(ErrorCode::kInvalidConfig, "training data needs --manifest or --synthetic");

  std::optional<tokenizer::TokenizerModel> tok;
  if (!options.tokenizer.empty()) {
    RequireFile(options.tokenizer, "tokenizer checkpoint");
    tok = tokenizer::LoadTokenizer(options.tokenizer);
    const auto& tc = (*tok)->config();
    if (tc.num_codebooks != model_config.loss.num_codebooks || tc.codebook_size != model_config.loss.codebook_size) {
      throw Error(ErrorCode::kInvalidConfig, "tokenizer codebooks do not match the model's hand head");
    }
  }
  const bool tokens_mode = model_config.loss.hand_mode == prior::HandHeadMode::kTokens;
  std::vector<PredictionSample> train, held_out;
  if (options.synthetic > 0) {
    if (tokens_mode && !tok) throw Error(ErrorCode::kInvalidConfig, "tokens hand head with --synthetic needs --tokenizer");
    synth::TokenizeFn fn;
    if (tokens_mode) fn = [&](const HandPose& p) { return tokenizer::Tokenize(*tok, p); };
    const auto poses = synth::GeneratePoseCorpus(pose_spec);
    train = synth::GeneratePriorDataset(scene, poses, options.synthetic, fn);
    auto held_scene = scene;
    held_scene.seed = DeriveSeed(scene.seed, {1});
    held_out = synth::GeneratePriorDataset(held_scene, poses, std::max(1, options.synthetic / 5), fn);
  } else {
    RequireFile(options.manifest, "manifest");
    train = OkSamples(ReadManifest(options.manifest, true));
    if (!options.eval_manifest.empty()) {
      RequireFile(options.eval_manifest, "eval manifest");
      held_out = OkSamples(ReadManifest(options.eval_manifest, true));
    }
  }

  CheckSamplesMatchModel(train, model_config, "training");
  CheckSamplesMatchModel(held_out, model_config, "held-out");

  prior::TrainState state;
  if (!options.resume.empty()) {
    RequireFile(options.resume, "resume checkpoint");
    state = prior::LoadPriorCheckpoint(options.resume, train_config);
    if (state.model->config().ToJson() != model_config.ToJson()) {
      throw Error(ErrorCode::kInvalidConfig, "resume checkpoint was trained with a different model config");
    }
  } else {
    state = prior::InitTraining(model_config, train_config);
  }

  Prepare(global);
  ordered_json sections{{"model", model_config.ToJson()}, {"train", train_config.ToJson()}};
  if (options.synthetic > 0) {
    sections["synthetic"] = ToJson(scene);
    sections["poses"] = ToJson(pose_spec);
  }
  EchoConfig(global, "train-prior",
             {{"manifest", options.manifest}, {"eval_manifest", options.eval_manifest}, {"synthetic", options.synthetic},
              {"tokenizer", options.tokenizer}, {"resume", options.resume}},
             sections);

  // A resumed run keeps the log up to its checkpoint step and continues it.
  const fs::path log_path = fs::path(global.out_dir) / "train_log.jsonl";
  std::string log;
  if (state.step > 0 && fs::exists(log_path)) {
    std::istringstream in(ReadText(log_path));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && prior::LogRecordFromJson(line).step <= state.step) log += line + "\n";
    }
  }
  const fs::path checkpoints = fs::path(global.out_dir) / "checkpoints";
  fs::create_directories(checkpoints);
  prior::TrainPrior(
      state, train, train_config,
      [&](const prior::LogRecord& r) {
        log += prior::ToJsonLine(r) + "\n";
        if (r.step % 100 == 0) log::Info(log::Format("prior step %d L_ct %.4f L_hand %.4f total %.4f", r.step, r.contact, r.hand, r.total));
      },
      [&](const prior::TrainState& s) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%06d.pt", s.step);
        prior::SavePriorCheckpoint(s, train_config, (checkpoints / name).string());
        WriteText(log_path, log);
      });
  WriteText(log_path, log);
  prior::SavePriorCheckpoint(state, train_config, (fs::path(global.out_dir) / "prior.pt").string());

  ordered_json summary{{"steps", state.step}, {"n_train", train.size()}, {"n_held_out", held_out.size()}};
  if (!train.empty() && model_config.loss.contact_head) summary["train_contact_error"] = prior::MeanContactError(state.model, train);
  if (!held_out.empty() && model_config.loss.contact_head) {
    summary["held_out_contact_error"] = prior::MeanContactError(state.model, held_out);
    log::Info(log::Format("held-out contact error %.4f of image width", summary["held_out_contact_error"].get<double>()));
  }
  WriteText(fs::path(global.out_dir) / "prior_summary.json", summary.dump(2) + "\n");
}

void RunEvalContact(const GlobalOptions& global, const EvalContactOptions& options) {
  const json config = Sections(global, {"cvae", "encoder", "synthetic", "poses"});
  auto cvae_config = contact_eval::CvaeConfig::FromJson(Section(config, "cvae"));
  const auto encoder_choice = EncoderFromJson(Section(config, "encoder"));
  auto scene = SceneFromJson(Section(config, "synthetic"));
  auto pose_spec = PosesFromJson(Section(config, "poses"));
  if (global.seed_given) cvae_config.seed = scene.seed = pose_spec.seed = global.seed;
  if (options.synthetic > 0 && !options.manifest.empty()) throw Error(ErrorCode::kInvalidConfig, "use either --manifest or --synthetic");

  std::vector<PredictionSample> train, eval;
  if (options.synthetic > 0) {
    const auto poses = synth::GeneratePoseCorpus(pose_spec);
    train = synth::GeneratePriorDataset(scene, poses, options.synthetic);
    auto eval_scene = scene;
    eval_scene.seed = DeriveSeed(scene.seed, {1});
    eval = synth::GeneratePriorDataset(eval_scene, poses, std::max(1, options.synthetic / 4));
  } else {
    RequireFile(options.manifest, "manifest");
    train = OkSamples(ReadManifest(options.manifest, true));
    if (!options.eval_manifest.empty()) {
      RequireFile(options.eval_manifest, "eval manifest");
      eval = OkSamples(ReadManifest(options.eval_manifest, true));
    } else {
      // Last fifth of the manifest, at least one sample, is held out.
      const size_t n_eval = std::max<size_t>(1, train.size() / 5);
      if (train.size() < 2) throw Error(ErrorCode::kEmptyDataset, "manifest needs at least two samples to split");
      eval.assign(train.end() - static_cast<long>(n_eval), train.end());
      train.resize(train.size() - n_eval);
    }
  }
  const auto encoder = MakeEncoder(options.checkpoint, encoder_choice);

  Prepare(global);
  ordered_json sections{{"cvae", cvae_config.ToJson()}};
  if (options.checkpoint.empty()) sections["encoder"] = ToJson(encoder_choice);
  if (options.synthetic > 0) {
    sections["synthetic"] = ToJson(scene);
    sections["poses"] = ToJson(pose_spec);
  }
  EchoConfig(global, "eval-contact",
             {{"manifest", options.manifest}, {"eval_manifest", options.eval_manifest}, {"synthetic", options.synthetic},
              {"checkpoint", options.checkpoint}},
             sections);

  std::string history;
  auto result = contact_eval::EvaluateEncoder(*encoder, train, eval, cvae_config, [&](const contact_eval::EvalPoint& p) {
    history += JsonLine({{"iteration", p.iteration}, {"mean_SIM", p.mean_sim}, {"mean_NSS", p.mean_nss}});
    log::Debug(log::Format("cvae iteration %d SIM %.4f NSS %.4f", p.iteration, p.mean_sim, p.mean_nss));
  });
  std::string records;
  for (const auto& r : result.records) records += JsonLine(contact_eval::ToJson(r));
  WriteText(fs::path(global.out_dir) / "eval_records.jsonl", records);
  WriteText(fs::path(global.out_dir) / "eval_history.jsonl", history);
  WriteText(fs::path(global.out_dir) / "eval_summary.json", JsonLine(result.summary.ToJson()));

  const fs::path overlays = fs::path(global.out_dir) / "overlays";
  fs::create_directories(overlays);
  for (size_t i = 0; i < eval.size() && static_cast<int>(i) < options.overlays; ++i) {
    const double w = eval[i].image.width, h = eval[i].image.height;
    const std::vector<Point2D> truth{{eval[i].contact_points.first.x / w, eval[i].contact_points.first.y / h},
                                     {eval[i].contact_points.second.x / w, eval[i].contact_points.second.y / h}};
    WritePpm(contact_eval::RenderOverlay(eval[i].image, result.predictions[i], truth, cvae_config),
             (overlays / (eval[i].sample_id + ".ppm")).string());
  }
  log::Info(log::Format("%s: mean SIM %.4f, mean NSS %.4f over %zu samples", result.summary.encoder_name.c_str(),
                        result.summary.mean_sim, result.summary.mean_nss, result.summary.n_samples));
}

void RunTrainPolicy(const GlobalOptions& global, const TrainPolicyOptions& options) {
  const json config = Sections(global, {"protocol", "bc", "encoder"});
  auto protocol = policy::ProtocolConfig::FromJson(Section(config, "protocol"));
  const auto bc = policy::BcConfig::FromJson(Section(config, "bc"));
  const auto encoder_choice = EncoderFromJson(Section(config, "encoder"));
  if (global.seed_given) protocol.base_seed = global.seed;
  const auto encoder = MakeEncoder(options.checkpoint, encoder_choice);

  Prepare(global);
  ordered_json sections{{"protocol", protocol.ToJson()}, {"bc", bc.ToJson()}};
  if (options.checkpoint.empty()) sections["encoder"] = ToJson(encoder_choice);
  EchoConfig(global, "train-policy", {{"checkpoint", options.checkpoint}}, sections);

  policy::BcTrainer trainer(*encoder, policy::ToyExpertDemos(*encoder, bc.num_demos, bc.demo_noise), bc);
  const auto report = policy::RunProtocol(trainer, [](int view) { return policy::ToyEnvReachGraspPlace(view); }, protocol);
  std::string log;
  for (const auto& run : report.runs) {
    for (size_t k = 0; k < run.rates.size(); ++k) {
      log += JsonLine({{"view", run.view}, {"seed_index", run.seed_index}, {"step", run.eval_steps[k]}, {"success_rate", run.rates[k]}});
    }
    log::Info(log::Format("view %d seed %d: best %.1f%%", run.view, run.seed_index, run.best));
  }
  WriteText(fs::path(global.out_dir) / "success_log.jsonl", log);
  WriteText(fs::path(global.out_dir) / "protocol_report.json", report.ToJson().dump(2) + "\n");
  log::Info(log::Format("final score %.2f%% (mean over runs of best success rate)", report.final_score));
}

void RunReport(const GlobalOptions& global, const ReportOptions& options) {
  Sections(global, {});
  if (options.runs.empty()) throw Error(ErrorCode::kInvalidConfig, "report needs at least one run directory");
  for (const auto& run : options.runs) {
    if (!fs::is_directory(run)) throw Error(ErrorCode::kIo, "run directory not found: '" + run + "'");
  }
  Prepare(global);
  EchoConfig(global, "report", {{"runs", options.runs}}, ordered_json::object());

  std::string curves = "run,view,seed_index,step,success_rate\n";
  std::string mean_curve = "run,step,mean_success_rate\n";
  std::string contact = "run,encoder_name,mean_SIM,mean_NSS,n_samples\n";
  std::string losses = "run,step,L_ct,L_hand,total\n";
  std::string summary = "# Report\n\n";
  std::vector<std::pair<std::string, std::map<int, double>>> success_curves;
  for (const auto& run : options.runs) {
    const fs::path dir(run);
    const std::string name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    if (fs::exists(dir / "protocol_report.json")) {
      auto report = policy::ProtocolReport::FromJson(json::parse(ReadText(dir / "protocol_report.json")));
      policy::Aggregate(report);
      std::map<int, std::pair<double, int>> by_step;
      for (const auto& r : report.runs) {
        for (size_t k = 0; k < r.rates.size(); ++k) {
          curves += name + "," + std::to_string(r.view) + "," + std::to_string(r.seed_index) + "," +
                    std::to_string(r.eval_steps[k]) + "," + FormatDouble(r.rates[k]) + "\n";
          by_step[r.eval_steps[k]].first += r.rates[k];
          ++by_step[r.eval_steps[k]].second;
        }
      }
      std::map<int, double> curve;
      for (const auto& [step, acc] : by_step) {
        curve[step] = acc.first / acc.second;
        mean_curve += name + "," + std::to_string(step) + "," + FormatDouble(curve[step]) + "\n";
      }
      success_curves.emplace_back(name, std::move(curve));
      summary += "- " + name + ": policy score " + FormatDouble(report.final_score) + "% over " +
                 std::to_string(report.runs.size()) + " runs\n";
    }
    if (fs::exists(dir / "eval_summary.json")) {
      const json s = json::parse(ReadText(dir / "eval_summary.json"));
      contact += name + "," + s.at("encoder_name").get<std::string>() + "," + FormatDouble(s.at("mean_SIM").get<double>()) + "," +
                 FormatDouble(s.at("mean_NSS").get<double>()) + "," + std::to_string(s.at("n_samples").get<size_t>()) + "\n";
      summary += "- " + name + ": SIM " + FormatDouble(s.at("mean_SIM").get<double>()) + ", NSS " +
                 FormatDouble(s.at("mean_NSS").get<double>()) + "\n";
    }
    if (fs::exists(dir / "train_log.jsonl")) {
      std::istringstream in(ReadText(dir / "train_log.jsonl"));
      prior::LogRecord last;
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        last = prior::LogRecordFromJson(line);
        losses += name + "," + std::to_string(last.step) + "," + FormatDouble(last.contact) + "," + FormatDouble(last.hand) +
                  "," + FormatDouble(last.total) + "\n";
      }
      summary += "- " + name + ": prior step " + std::to_string(last.step) + ", total loss " + FormatDouble(last.total) + "\n";
    }
  }
  const fs::path out(global.out_dir);
  WriteText(out / "success_curves.csv", curves);
  WriteText(out / "success_mean_curve.csv", mean_curve);
  WriteText(out / "success_curves.svg", SuccessCurvesSvg(success_curves));
  WriteText(out / "contact_table.csv", contact);
  WriteText(out / "loss_curves.csv", losses);
  WriteText(out / "report.md", summary);
  log::Info("report written to " + global.out_dir);
}

}  // namespace graspprior::cli
