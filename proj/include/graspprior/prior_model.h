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

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graspprior/manifest.h"
#include "graspprior/policy.h"
#include "graspprior/prior_losses.h"
#include "graspprior/tokenizer.h"
#include "json.hpp"

namespace graspprior::prior {

enum class EncoderKind { kConv, kVit };
enum class Pooling { kClassToken, kMean };

struct PriorModelConfig {
  int image_size = 128;
  int embedding_dim = 128;
  EncoderKind encoder = EncoderKind::kConv;
  // Transformer encoder only.
  Pooling pooling = Pooling::kClassToken;
  int patch_size = 16;
  int vit_layers = 4;
  int vit_heads = 4;
  // Number of memory tokens the embedding is projected into for the decoder.
  int memory_tokens = 4;
  int decoder_layers = 2;
  int decoder_heads = 4;
  LossConfig loss;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static PriorModelConfig FromJson(const nlohmann::json& j);
};

// Decoder logits for a batch.
struct DecoderTensors {
  torch::Tensor contact;  // [B, 2, bins_x + bins_y], undefined when the head is off
  torch::Tensor hand;     // [B, N, C] tokens, [B, 63] regression, undefined when off
};

class ConvEncoderImpl : public torch::nn::Module {
 public:
  ConvEncoderImpl(int image_size, int embedding_dim);
  torch::Tensor forward(const torch::Tensor& images);

 private:
  torch::nn::Sequential features{nullptr};
  torch::nn::Linear project{nullptr};
};
TORCH_MODULE(ConvEncoder);

class VitEncoderImpl : public torch::nn::Module {
 public:
  VitEncoderImpl(int image_size, int patch_size, int embedding_dim, int layers, int heads, Pooling pooling);
  torch::Tensor forward(const torch::Tensor& images);

 private:
  Pooling pooling_;
  torch::nn::Conv2d patchify{nullptr};
  torch::Tensor cls_token;
  torch::Tensor position;
  torch::nn::TransformerEncoder blocks{nullptr};
  torch::nn::LayerNorm norm{nullptr};
};
TORCH_MODULE(VitEncoder);

// Image batch [B, 3, S, S] in [0, 1] -> embedding [B, d].
class PriorEncoderImpl : public torch::nn::Module {
 public:
  explicit PriorEncoderImpl(const PriorModelConfig& config);
  torch::Tensor forward(const torch::Tensor& images);

 private:
  ConvEncoder conv{nullptr};
  VitEncoder vit{nullptr};
};
TORCH_MODULE(PriorEncoder);

// Embedding [B, d] -> logits. Sees nothing but the embedding.
class PriorDecoderImpl : public torch::nn::Module {
 public:
  explicit PriorDecoderImpl(const PriorModelConfig& config);
  DecoderTensors forward(const torch::Tensor& embedding);

 private:
  PriorModelConfig config_;
  torch::nn::Linear memory{nullptr};
  torch::Tensor queries;
  torch::nn::TransformerDecoder blocks{nullptr};
  torch::nn::Linear contact_head{nullptr};
  torch::nn::Linear token_head{nullptr};
  torch::nn::Linear regression_head{nullptr};
};
TORCH_MODULE(PriorDecoder);

class PriorModelImpl : public torch::nn::Module {
 public:
  explicit PriorModelImpl(const PriorModelConfig& config);
  DecoderTensors forward(const torch::Tensor& images);
  const PriorModelConfig& config() const { return config_; }

  PriorEncoder encoder{nullptr};
  PriorDecoder decoder{nullptr};

 private:
  PriorModelConfig config_;
};
TORCH_MODULE(PriorModel);

// [B, 3, S, S] float in [0, 1]. Throws kShapeMismatch on size mismatch.
torch::Tensor ImagesToTensor(std::span<const Image* const> images, int expected_size);

// Inference-mode embedding of one image.
std::vector<float> Encode(PriorModel& model, const Image& image);
// Inference-mode decode of one embedding into per-sample logits.
DecoderOutput Decode(PriorModel& model, std::span<const float> embedding);
DecoderOutput ToDecoderOutput(const DecoderTensors& tensors, long row);

struct BatchLoss {
  torch::Tensor contact;  // mean over the batch of per-sample contact loss
  torch::Tensor hand;
  torch::Tensor total;
};

// Targets are built from the samples; image extent is the model input size.
BatchLoss ComputeBatchLoss(const DecoderTensors& out, std::span<const PredictionSample* const> samples,
                           const LossConfig& config, double width, double height);

struct TrainPriorConfig {
  int steps = 3000;
  int batch_size = 32;
  double lr = 5e-5;
  double weight_decay = 0.01;
  bool freeze_encoder = false;
  int log_every = 1;
  int checkpoint_every = 0;  // 0: only at the end
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static TrainPriorConfig FromJson(const nlohmann::json& j);
};

struct LogRecord {
  int step = 0;
  double contact = 0.0;
  double hand = 0.0;
  double total = 0.0;
};

std::string ToJsonLine(const LogRecord& record);
LogRecord LogRecordFromJson(const std::string& line);

struct TrainState {
  PriorModel model{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer;
  int step = 0;
};

// Fresh model and optimizer, seeded.
TrainState InitTraining(const PriorModelConfig& model_config, const TrainPriorConfig& train_config);

using LogFn = std::function<void(const LogRecord&)>;
using CheckpointFn = std::function<void(const TrainState&)>;

// Advances `state` to train_config.steps. Batch contents depend only on
// (seed, step), so a resumed run repeats an uninterrupted one exactly.
// Throws kEmptyDataset on an empty manifest and kMissingAnnotation when
// tokens mode lacks tokens.
void TrainPrior(TrainState& state, std::span<const PredictionSample> samples, const TrainPriorConfig& train_config,
                const LogFn& log = {}, const CheckpointFn& checkpoint = {});

void SavePriorCheckpoint(const TrainState& state, const TrainPriorConfig& train_config, const std::string& path);
// Restores model and, when present, optimizer state.
TrainState LoadPriorCheckpoint(const std::string& path, const TrainPriorConfig& train_config);
PriorModel LoadPriorModel(const std::string& path);

struct Prediction {
  FingertipPair contact_points;
  std::optional<HandPose> hand_pose;
  std::optional<TokenSequence> tokens;
};

// Bin-center contact points and, per hand mode, the detokenized argmax tokens
// or the regressed pose. `tokenizer` is required in tokens mode.
Prediction PredictFromOutput(const DecoderOutput& output, const PriorModelConfig& config,
                             tokenizer::TokenizerModel* tokenizer);
Prediction PredictContactsAndPose(PriorModel& model, const Image& image, tokenizer::TokenizerModel* tokenizer);

// Mean Euclidean distance between predicted and true contact points, as a
// fraction of image width.
double MeanContactError(PriorModel& model, std::span<const PredictionSample> samples);

// Inference-only view of a model's encoder. Images of another size are
// resized bilinearly to the model input.
class PriorFrozenEncoder : public policy::FrozenEncoder {
 public:
  PriorFrozenEncoder(PriorModel model, std::string name);
  int dim() const override { return model_->config().embedding_dim; }
  std::vector<float> Encode(const Image& image) const override;
  std::uint64_t ParameterHash() const override;
  std::string name() const override { return name_; }

 private:
  PriorModel model_;
  std::string name_;
};

// Loss-head switch sets for comparing variants.
enum class Ablation { kFull, kNoContact, kNoHand, kHandRegression };
std::string ToString(Ablation ablation);
LossConfig ApplyAblation(LossConfig config, Ablation ablation);

}  // namespace graspprior::prior
