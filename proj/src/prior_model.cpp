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

#include "graspprior/prior_model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/image_io.h"
#include "graspprior/seeding.h"

namespace graspprior::prior {

namespace {

std::string EncoderName(EncoderKind kind) { return kind == EncoderKind::kConv ? "conv" : "vit"; }
std::string PoolingName(Pooling pooling) { return pooling == Pooling::kClassToken ? "cls" : "mean"; }

EncoderKind EncoderFromName(const std::string& name) {
  if (name == "conv") return EncoderKind::kConv;
  if (name == "vit") return EncoderKind::kVit;
  throw Error(ErrorCode::kInvalidConfig, "unknown encoder '" + name + "'");
}

Pooling PoolingFromName(const std::string& name) {
  if (name == "cls") return Pooling::kClassToken;
  if (name == "mean") return Pooling::kMean;
  throw Error(ErrorCode::kInvalidConfig, "unknown pooling '" + name + "'");
}

}  // namespace

void PriorModelConfig::Validate() const {
  loss.Validate();
  if (embedding_dim < 1 || memory_tokens < 1 || decoder_layers < 1 || decoder_heads < 1) {
    throw Error(ErrorCode::kInvalidConfig, "decoder sizes must be positive");
  }
  if (embedding_dim % decoder_heads != 0) throw Error(ErrorCode::kInvalidConfig, "embedding_dim must divide by decoder_heads");
  if (encoder == EncoderKind::kConv && (image_size < 32 || image_size % 32 != 0)) {
    throw Error(ErrorCode::kInvalidConfig, "conv encoder needs image_size divisible by 32");
  }
  if (encoder == EncoderKind::kVit) {
    if (patch_size < 1 || image_size % patch_size != 0) throw Error(ErrorCode::kInvalidConfig, "image_size must divide by patch_size");
    if (vit_layers < 1 || vit_heads < 1 || embedding_dim % vit_heads != 0) {
      throw Error(ErrorCode::kInvalidConfig, "invalid transformer encoder shape");
    }
  }
}

nlohmann::ordered_json PriorModelConfig::ToJson() const {
  return {{"image_size", image_size},
          {"embedding_dim", embedding_dim},
          {"encoder", EncoderName(encoder)},
          {"pooling", PoolingName(pooling)},
          {"patch_size", patch_size},
          {"vit_layers", vit_layers},
          {"vit_heads", vit_heads},
          {"memory_tokens", memory_tokens},
          {"decoder_layers", decoder_layers},
          {"decoder_heads", decoder_heads},
          {"bins_x", loss.bins_x},
          {"bins_y", loss.bins_y},
          {"num_codebooks", loss.num_codebooks},
          {"codebook_size", loss.codebook_size},
          {"hand_head_mode", ToString(loss.hand_mode)},
          {"contact_head", loss.contact_head},
          {"lambda_hand", loss.lambda_hand}};
}

PriorModelConfig PriorModelConfig::FromJson(const nlohmann::json& j) {
  PriorModelConfig c;
  RejectUnknownKeys(j, c.ToJson(), "prior model");
  if (j.is_null()) return c;
  c.image_size = j.value("image_size", c.image_size);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.encoder = EncoderFromName(j.value("encoder", EncoderName(c.encoder)));
  c.pooling = PoolingFromName(j.value("pooling", PoolingName(c.pooling)));
  c.patch_size = j.value("patch_size", c.patch_size);
  c.vit_layers = j.value("vit_layers", c.vit_layers);
  c.vit_heads = j.value("vit_heads", c.vit_heads);
  c.memory_tokens = j.value("memory_tokens", c.memory_tokens);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.decoder_heads = j.value("decoder_heads", c.decoder_heads);
  c.loss.bins_x = j.value("bins_x", c.loss.bins_x);
  c.loss.bins_y = j.value("bins_y", c.loss.bins_y);
  c.loss.num_codebooks = j.value("num_codebooks", c.loss.num_codebooks);
  c.loss.codebook_size = j.value("codebook_size", c.loss.codebook_size);
  c.loss.hand_mode = HandHeadModeFromString(j.value("hand_head_mode", ToString(c.loss.hand_mode)));
  c.loss.contact_head = j.value("contact_head", c.loss.contact_head);
  c.loss.lambda_hand = j.value("lambda_hand", c.loss.lambda_hand);
  c.Validate();
  return c;
}

ConvEncoderImpl::ConvEncoderImpl(int image_size, int embedding_dim) {
  using torch::nn::Conv2dOptions;
  // Input is average-pooled 2x and carries two extra coordinate channels.
  features = register_module(
      "features", torch::nn::Sequential(torch::nn::Conv2d(Conv2dOptions(5, 16, 3).stride(2).padding(1)), torch::nn::ReLU(),
                                        torch::nn::Conv2d(Conv2dOptions(16, 32, 3).stride(2).padding(1)), torch::nn::ReLU(),
                                        torch::nn::Conv2d(Conv2dOptions(32, 64, 3).stride(2).padding(1)), torch::nn::ReLU(),
                                        torch::nn::Conv2d(Conv2dOptions(64, 64, 3).stride(2).padding(1)), torch::nn::ReLU()));
  const int side = image_size / 32;
  project = register_module("project", torch::nn::Linear(64 * side * side, embedding_dim));
}

torch::Tensor ConvEncoderImpl::forward(const torch::Tensor& images) {
  const auto pooled = torch::avg_pool2d(images, 2);
  const long b = pooled.size(0), h = pooled.size(2), w = pooled.size(3);
  const auto ys = torch::linspace(-1, 1, h).view({1, 1, h, 1}).expand({b, 1, h, w});
  const auto xs = torch::linspace(-1, 1, w).view({1, 1, 1, w}).expand({b, 1, h, w});
  const auto x = torch::cat({pooled - 0.5, xs, ys}, 1);
  return project->forward(features->forward(x).flatten(1));
}

VitEncoderImpl::VitEncoderImpl(int image_size, int patch_size, int embedding_dim, int layers, int heads, Pooling pooling)
    : pooling_(pooling) {
  const int patches = (image_size / patch_size) * (image_size / patch_size);
  patchify = register_module(
      "patchify", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, embedding_dim, patch_size).stride(patch_size)));
  cls_token = register_parameter("cls_token", 0.02 * torch::randn({1, 1, embedding_dim}));
  position = register_parameter("position", 0.02 * torch::randn({1, patches + 1, embedding_dim}));
  torch::nn::TransformerEncoderLayer layer(
      torch::nn::TransformerEncoderLayerOptions(embedding_dim, heads).dim_feedforward(2 * embedding_dim).dropout(0.0));
  blocks = register_module("blocks", torch::nn::TransformerEncoder(torch::nn::TransformerEncoderOptions(layer, layers)));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({embedding_dim})));
}

torch::Tensor VitEncoderImpl::forward(const torch::Tensor& images) {
  const long b = images.size(0);
  auto tokens = patchify->forward(images - 0.5).flatten(2).transpose(1, 2);  // [B, P, d]
  tokens = torch::cat({cls_token.expand({b, 1, tokens.size(2)}), tokens}, 1) + position;
  // Sequence-first layout for the transformer.
  const auto out = norm->forward(blocks->forward(tokens.transpose(0, 1)));
  if (pooling_ == Pooling::kClassToken) return out[0];
  return out.slice(0, 1).mean(0);
}

PriorEncoderImpl::PriorEncoderImpl(const PriorModelConfig& config) {
  if (config.encoder == EncoderKind::kConv) {
    conv = register_module("conv", ConvEncoder(config.image_size, config.embedding_dim));
  } else {
    vit = register_module("vit", VitEncoder(config.image_size, config.patch_size, config.embedding_dim,
                                            config.vit_layers, config.vit_heads, config.pooling));
  }
}

torch::Tensor PriorEncoderImpl::forward(const torch::Tensor& images) {
  return conv ? conv->forward(images) : vit->forward(images);
}

PriorDecoderImpl::PriorDecoderImpl(const PriorModelConfig& config) : config_(config) {
  const int d = config.embedding_dim;
  const auto& loss = config.loss;
  memory = register_module("memory", torch::nn::Linear(d, config.memory_tokens * d));
  int num_queries = loss.contact_head ? 2 : 0;
  if (loss.hand_mode == HandHeadMode::kTokens) num_queries += loss.num_codebooks;
  if (loss.hand_mode == HandHeadMode::kRegression) num_queries += 1;
  queries = register_parameter("queries", 0.02 * torch::randn({num_queries, d}));
  torch::nn::TransformerDecoderLayer layer(
      torch::nn::TransformerDecoderLayerOptions(d, config.decoder_heads).dim_feedforward(2 * d).dropout(0.0));
  blocks = register_module("blocks", torch::nn::TransformerDecoder(torch::nn::TransformerDecoderOptions(layer, config.decoder_layers)));
  if (loss.contact_head) contact_head = register_module("contact_head", torch::nn::Linear(d, loss.contact_width()));
  if (loss.hand_mode == HandHeadMode::kTokens) {
    token_head = register_module("token_head", torch::nn::Linear(d, loss.codebook_size));
  }
  if (loss.hand_mode == HandHeadMode::kRegression) {
    regression_head = register_module("regression_head", torch::nn::Linear(d, kPoseDim));
  }
}

DecoderTensors PriorDecoderImpl::forward(const torch::Tensor& embedding) {
  const long b = embedding.size(0), d = config_.embedding_dim;
  if (embedding.dim() != 2 || embedding.size(1) != d) {
    throw Error(ErrorCode::kShapeMismatch, "embedding must have shape [B, " + std::to_string(d) + "]");
  }
  const auto mem = memory->forward(embedding).view({b, config_.memory_tokens, d}).transpose(0, 1);
  const auto tgt = queries.unsqueeze(1).expand({queries.size(0), b, d});
  const auto out = blocks->forward(tgt, mem).transpose(0, 1);  // [B, Q, d]
  DecoderTensors result;
  long q = 0;
  if (contact_head) {
    result.contact = contact_head->forward(out.slice(1, 0, 2));
    q = 2;
  }
  if (token_head) result.hand = token_head->forward(out.slice(1, q, q + config_.loss.num_codebooks));
  if (regression_head) result.hand = regression_head->forward(out.select(1, q));
  return result;
}

PriorModelImpl::PriorModelImpl(const PriorModelConfig& config) : config_(config) {
  config.Validate();
  encoder = register_module("encoder", PriorEncoder(config));
  decoder = register_module("decoder", PriorDecoder(config));
}

DecoderTensors PriorModelImpl::forward(const torch::Tensor& images) { return decoder->forward(encoder->forward(images)); }

torch::Tensor ImagesToTensor(std::span<const Image* const> images, int expected_size) {
  auto out = torch::empty({static_cast<long>(images.size()), 3, expected_size, expected_size}, torch::kFloat);
  auto acc = out.accessor<float, 4>();
  for (size_t i = 0; i < images.size(); ++i) {
    const Image& img = *images[i];
    if (img.width != expected_size || img.height != expected_size) {
      throw Error(ErrorCode::kShapeMismatch, "image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                                 ", model expects " + std::to_string(expected_size));
    }
    for (int y = 0; y < expected_size; ++y) {
      for (int x = 0; x < expected_size; ++x) {
        const auto px = img.pixel(x, y);
        for (int c = 0; c < 3; ++c) acc[i][c][y][x] = px[c] / 255.0f;
      }
    }
  }
  return out;
}

std::vector<float> Encode(PriorModel& model, const Image& image) {
  torch::NoGradGuard no_grad;
  const Image* ptr = &image;
  const auto emb = model->encoder->forward(ImagesToTensor({&ptr, 1}, model->config().image_size)).contiguous();
  return std::vector<float>(emb.data_ptr<float>(), emb.data_ptr<float>() + emb.numel());
}

DecoderOutput ToDecoderOutput(const DecoderTensors& tensors, long row) {
  DecoderOutput out;
  auto copy = [row](const torch::Tensor& t, std::vector<double>& dst) {
    if (!t.defined()) return;
    const auto r = t[row].to(torch::kDouble).contiguous();
    dst.assign(r.data_ptr<double>(), r.data_ptr<double>() + r.numel());
  };
  copy(tensors.contact, out.contact_logits);
  copy(tensors.hand, out.hand);
  return out;
}

DecoderOutput Decode(PriorModel& model, std::span<const float> embedding) {
  torch::NoGradGuard no_grad;
  const auto emb = torch::tensor(std::vector<float>(embedding.begin(), embedding.end())).unsqueeze(0);
  return ToDecoderOutput(model->decoder->forward(emb), 0);
}

BatchLoss ComputeBatchLoss(const DecoderTensors& out, std::span<const PredictionSample* const> samples,
                           const LossConfig& config, double width, double height) {
  const long b = static_cast<long>(samples.size());
  BatchLoss loss;
  loss.contact = torch::zeros({});
  loss.hand = torch::zeros({});
  const auto sum = torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kSum);
  if (config.contact_head) {
    std::vector<long> xb, yb;
    for (const auto* s : samples) {
      for (const Point2D& p : {s->contact_points.first, s->contact_points.second}) {
        xb.push_back(BinCoordinate(p.x, width, config.bins_x));
        yb.push_back(BinCoordinate(p.y, height, config.bins_y));
      }
    }
    const auto logits = out.contact;
    const auto lx = logits.slice(2, 0, config.bins_x).reshape({-1, config.bins_x});
    const auto ly = logits.slice(2, config.bins_x).reshape({-1, config.bins_y});
    loss.contact = (torch::nn::functional::cross_entropy(lx, torch::tensor(xb), sum) +
                    torch::nn::functional::cross_entropy(ly, torch::tensor(yb), sum)) / b;
  }
  if (config.hand_mode == HandHeadMode::kTokens) {
    std::vector<long> tokens;
    for (const auto* s : samples) {
      if (!s->hand_tokens) throw Error(ErrorCode::kMissingAnnotation, "sample " + s->sample_id + " has no hand tokens");
      if (static_cast<int>(s->hand_tokens->tokens.size()) != config.num_codebooks) {
        throw Error(ErrorCode::kShapeMismatch, "sample " + s->sample_id + " has the wrong token count");
      }
      for (int t : s->hand_tokens->tokens) {
        if (t < 0 || t >= config.codebook_size) throw Error(ErrorCode::kTokenOutOfRange, "sample " + s->sample_id);
        tokens.push_back(t);
      }
    }
    loss.hand = torch::nn::functional::cross_entropy(out.hand.reshape({-1, config.codebook_size}), torch::tensor(tokens), sum) / b;
  } else if (config.hand_mode == HandHeadMode::kRegression) {
    std::vector<HandPose> poses;
    for (const auto* s : samples) poses.push_back(s->raw_hand_pose);
    loss.hand = torch::mse_loss(out.hand, tokenizer::PosesToTensor(poses));
  }
  loss.total = loss.contact + config.lambda_hand * loss.hand;
  return loss;
}

void TrainPriorConfig::Validate() const {
  if (steps < 0 || batch_size < 1 || !(lr > 0) || weight_decay < 0 || log_every < 1 || checkpoint_every < 0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid prior training parameters");
  }
}

nlohmann::ordered_json TrainPriorConfig::ToJson() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"freeze_encoder", freeze_encoder},
          {"log_every", log_every},
          {"checkpoint_every", checkpoint_every},
          {"seed", seed}};
}

TrainPriorConfig TrainPriorConfig::FromJson(const nlohmann::json& j) {
  TrainPriorConfig c;
  RejectUnknownKeys(j, c.ToJson(), "prior training");
  if (j.is_null()) return c;
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.freeze_encoder = j.value("freeze_encoder", c.freeze_encoder);
  c.log_every = j.value("log_every", c.log_every);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

std::string ToJsonLine(const LogRecord& r) {
  nlohmann::ordered_json j{{"step", r.step}, {"L_ct", r.contact}, {"L_hand", r.hand}, {"L_total", r.total}};
  return j.dump();
}

LogRecord LogRecordFromJson(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return {j.at("step").get<int>(), j.at("L_ct").get<double>(), j.at("L_hand").get<double>(), j.at("L_total").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed training log line: ") + e.what());
  }
}

namespace {

std::unique_ptr<torch::optim::AdamW> MakeOptimizer(PriorModel& model, const TrainPriorConfig& c) {
  std::vector<torch::Tensor> params;
  if (c.freeze_encoder) {
    for (auto& p : model->encoder->parameters()) p.set_requires_grad(false);
    params = model->decoder->parameters();
  } else {
    params = model->parameters();
  }
  return std::make_unique<torch::optim::AdamW>(params, torch::optim::AdamWOptions(c.lr).weight_decay(c.weight_decay));
}

}  // namespace

TrainState InitTraining(const PriorModelConfig& model_config, const TrainPriorConfig& train_config) {
  model_config.Validate();
  train_config.Validate();
  torch::manual_seed(train_config.seed);
  TrainState state;
  state.model = PriorModel(model_config);
  state.optimizer = MakeOptimizer(state.model, train_config);
  return state;
}

void TrainPrior(TrainState& state, std::span<const PredictionSample> samples, const TrainPriorConfig& c,
                const LogFn& log, const CheckpointFn& checkpoint) {
  c.Validate();
  if (samples.empty()) throw Error(ErrorCode::kEmptyDataset, "prior training manifest is empty");
  auto& model = state.model;
  const auto& config = model->config();
  const int size = config.image_size;
  if (config.loss.hand_mode == HandHeadMode::kTokens) {
    for (const auto& s : samples) {
      if (!s.hand_tokens) throw Error(ErrorCode::kMissingAnnotation, "sample " + s.sample_id + " has no hand tokens");
    }
  }
  std::vector<const Image*> images;
  for (const auto& s : samples) images.push_back(&s.image);
  // Stored as bytes to keep the cache small; converted per batch.
  const auto cache = (ImagesToTensor(images, size) * 255.0f).round().to(torch::kUInt8);

  const long n = static_cast<long>(samples.size());
  std::map<long, std::vector<long>> permutations;
  auto index_at = [&](long k) {
    const long epoch = k / n;
    auto it = permutations.find(epoch);
    if (it == permutations.end()) {
      std::vector<long> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(DeriveSeed(c.seed, {static_cast<std::uint64_t>(epoch)}));
      std::shuffle(perm.begin(), perm.end(), rng);
      permutations.erase(permutations.begin(), permutations.lower_bound(epoch - 1));
      it = permutations.emplace(epoch, std::move(perm)).first;
    }
    return it->second[k % n];
  };

  model->train();
  while (state.step < c.steps) {
    const long first = static_cast<long>(state.step) * c.batch_size;
    std::vector<long> idx;
    std::vector<const PredictionSample*> batch;
    for (int j = 0; j < c.batch_size; ++j) {
      idx.push_back(index_at(first + j));
      batch.push_back(&samples[idx.back()]);
    }
    const auto x = cache.index_select(0, torch::tensor(idx)).to(torch::kFloat) / 255.0f;
    state.optimizer->zero_grad();
    const auto out = model->forward(x);
    const BatchLoss loss = ComputeBatchLoss(out, batch, config.loss, size, size);
    loss.total.backward();
    state.optimizer->step();
    ++state.step;
    if (log && state.step % c.log_every == 0) {
      log({state.step, loss.contact.item<double>(), loss.hand.item<double>(), loss.total.item<double>()});
    }
    if (checkpoint && c.checkpoint_every > 0 && state.step % c.checkpoint_every == 0) checkpoint(state);
  }
  model->eval();
  if (checkpoint) checkpoint(state);
}

void SavePriorCheckpoint(const TrainState& state, const TrainPriorConfig& train_config, const std::string& path) {
  torch::serialize::OutputArchive archive;
  state.model->save(archive);
  archive.write("config_json", c10::IValue(state.model->config().ToJson().dump()));
  archive.write("train_config_json", c10::IValue(train_config.ToJson().dump()));
  archive.write("step", c10::IValue(static_cast<int64_t>(state.step)));
  if (state.optimizer) {
    torch::serialize::OutputArchive optim;
    state.optimizer->save(optim);
    archive.write("optimizer", optim);
  }
  const std::string partial = path + ".partial";
  try {
    archive.save_to(partial);
  } catch (const c10::Error&) {
    throw Error(ErrorCode::kIo, "cannot write prior checkpoint " + path);
  }
  if (std::rename(partial.c_str(), path.c_str()) != 0) throw Error(ErrorCode::kIo, "cannot move checkpoint into " + path);
}

namespace {

torch::serialize::InputArchive OpenArchive(const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error&) {
    throw Error(ErrorCode::kIo, "cannot read prior checkpoint " + path);
  }
  return archive;
}

PriorModel ModelFromArchive(torch::serialize::InputArchive& archive) {
  c10::IValue config_json;
  archive.read("config_json", config_json);
  PriorModel model(PriorModelConfig::FromJson(nlohmann::json::parse(config_json.toStringRef())));
  model->load(archive);
  model->eval();
  return model;
}

}  // namespace

TrainState LoadPriorCheckpoint(const std::string& path, const TrainPriorConfig& train_config) {
  auto archive = OpenArchive(path);
  TrainState state;
  state.model = ModelFromArchive(archive);
  c10::IValue step;
  archive.read("step", step);
  state.step = static_cast<int>(step.toInt());
  state.optimizer = MakeOptimizer(state.model, train_config);
  torch::serialize::InputArchive optim;
  if (archive.try_read("optimizer", optim)) state.optimizer->load(optim);
  return state;
}

PriorModel LoadPriorModel(const std::string& path) {
  auto archive = OpenArchive(path);
  return ModelFromArchive(archive);
}

Prediction PredictFromOutput(const DecoderOutput& output, const PriorModelConfig& config,
                             tokenizer::TokenizerModel* tokenizer) {
  Prediction p;
  const double extent = config.image_size;
  if (config.loss.contact_head) p.contact_points = ArgmaxContacts(output, extent, extent, config.loss);
  if (config.loss.hand_mode == HandHeadMode::kTokens) {
    p.tokens = ArgmaxTokens(output, config.loss);
    if (tokenizer) p.hand_pose = tokenizer::Detokenize(*tokenizer, *p.tokens);
  } else if (config.loss.hand_mode == HandHeadMode::kRegression) {
    HandPose pose;
    std::copy(output.hand.begin(), output.hand.end(), pose.joints.begin());
    p.hand_pose = pose;
  }
  return p;
}

Prediction PredictContactsAndPose(PriorModel& model, const Image& image, tokenizer::TokenizerModel* tokenizer) {
  return PredictFromOutput(Decode(model, Encode(model, image)), model->config(), tokenizer);
}

double MeanContactError(PriorModel& model, std::span<const PredictionSample> samples) {
  if (samples.empty()) return 0.0;
  if (!model->config().loss.contact_head) throw Error(ErrorCode::kModeMismatch, "model has no contact head");
  torch::NoGradGuard no_grad;
  model->eval();
  const int size = model->config().image_size;
  double total = 0.0;
  constexpr size_t kChunk = 64;
  for (size_t start = 0; start < samples.size(); start += kChunk) {
    const size_t end = std::min(samples.size(), start + kChunk);
    std::vector<const Image*> images;
    for (size_t i = start; i < end; ++i) images.push_back(&samples[i].image);
    const auto out = model->forward(ImagesToTensor(images, size));
    for (size_t i = start; i < end; ++i) {
      const auto pred = ArgmaxContacts(ToDecoderOutput(out, static_cast<long>(i - start)), size, size, model->config().loss);
      total += Distance(pred.first, samples[i].contact_points.first) + Distance(pred.second, samples[i].contact_points.second);
    }
  }
  return total / (2.0 * samples.size() * size);
}

PriorFrozenEncoder::PriorFrozenEncoder(PriorModel model, std::string name)
    : model_(std::move(model)), name_(std::move(name)) {
  model_->eval();
  for (auto& p : model_->parameters()) p.set_requires_grad(false);
}

std::vector<float> PriorFrozenEncoder::Encode(const Image& image) const {
  const int size = model_->config().image_size;
  PriorModel model = model_;
  if (image.width == size && image.height == size) return prior::Encode(model, image);
  return prior::Encode(model, ResizeBilinear(image, size, size));
}

std::uint64_t PriorFrozenEncoder::ParameterHash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model_->encoder->parameters()) {
    const auto t = p.detach().contiguous();
    const auto* bytes = static_cast<const unsigned char*>(t.data_ptr());
    for (size_t i = 0; i < t.nbytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string ToString(Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: return "full";
    case Ablation::kNoContact: return "no_contact_loss";
    case Ablation::kNoHand: return "no_hand_loss";
    case Ablation::kHandRegression: return "hand_regression";
  }
  return "unknown";
}

LossConfig ApplyAblation(LossConfig config, Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: break;
    case Ablation::kNoContact: config.contact_head = false; break;
    case Ablation::kNoHand: config.hand_mode = HandHeadMode::kOff; break;
    case Ablation::kHandRegression: config.hand_mode = HandHeadMode::kRegression; break;
  }
  return config;
}

}  // namespace graspprior::prior
