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
#include <span>
#include <string>
#include <vector>

#include "graspprior/types.h"
#include "json.hpp"

namespace graspprior::tokenizer {

struct TokenizerConfig {
  int num_codebooks = 8;
  int codebook_size = 1024;
  int code_dim = 16;
  int hidden = 256;
  // Multiplies cosine scores before the softmax used during training.
  double score_scale = 10.0;
  // Std of Gaussian noise added to encoder inputs during training (the
  // reconstruction target stays clean). Makes code selection insensitive to
  // perturbations of that size.
  double input_noise = 0.06;
  // Weight of a cross-entropy term asking the reconstruction to select the
  // same codes as the input did. 0 disables it.
  double cycle_weight = 0.03;
  int steps = 6000;
  int batch_size = 128;
  double lr = 2e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  // Missing keys keep their defaults; unknown keys throw kInvalidConfig.
  static TokenizerConfig FromJson(const nlohmann::json& j);
};

// Pose -> latent (N heads of code_dim) -> per-head code selection ->
// concatenated codes -> pose. Selection scores are scaled cosine
// similarities between a per-head query projection and the head's codebook.
class TokenizerModelImpl : public torch::nn::Module {
 public:
  explicit TokenizerModelImpl(const TokenizerConfig& config);

  // [B, 63] -> [B, N, D]
  torch::Tensor EncodeLatent(const torch::Tensor& poses);
  // [B, N, D] -> [B, N, C]
  torch::Tensor Scores(const torch::Tensor& latent);
  // [B, N] indices -> [B, N, D]
  torch::Tensor Lookup(const torch::Tensor& indices);
  // [B, N, D] -> [B, 63]
  torch::Tensor DecodeCodes(const torch::Tensor& codes);
  // Hard selection in the forward pass; in training mode the gradient flows
  // through the softmax weights as well as the selected codes.
  torch::Tensor forward(const torch::Tensor& poses);
  // Reconstruction MSE plus the weighted cycle term.
  torch::Tensor TrainingLoss(const torch::Tensor& poses);
  // [B, 63] -> [B, N] argmax indices
  torch::Tensor Assign(const torch::Tensor& poses);

  const TokenizerConfig& config() const { return config_; }

  torch::nn::Sequential encoder{nullptr};
  torch::nn::Sequential decoder{nullptr};
  torch::Tensor query_proj;  // [N, D, D]
  torch::Tensor codebooks;   // [N, C, D]
  torch::Tensor pose_mean;   // [63]
  torch::Tensor pose_scale;  // [1]

 private:
  TokenizerConfig config_;
};
TORCH_MODULE(TokenizerModel);

// Throws kNonFiniteInput for non-finite poses.
TokenSequence Tokenize(TokenizerModel& model, const HandPose& pose);
std::vector<TokenSequence> TokenizeAll(TokenizerModel& model, std::span<const HandPose> poses);
// Throws kTokenOutOfRange / kShapeMismatch on invalid sequences.
HandPose Detokenize(TokenizerModel& model, const TokenSequence& tokens);

// Fraction of the codebook selected at least once, per head.
std::vector<double> CodebookUtilization(TokenizerModel& model, std::span<const HandPose> poses);
// Mean over poses of the mean per-joint Euclidean error of tokenize/detokenize.
double ReconstructionError(TokenizerModel& model, std::span<const HandPose> poses);

struct TrainTokenizerResult {
  TokenizerModel model{nullptr};
  std::vector<double> epoch_loss;  // mean training loss per epoch
  double final_error = 0.0;        // ReconstructionError on the corpus
  std::vector<double> utilization;
};

using TrainLogFn = std::function<void(int step, double loss)>;

// Throws kEmptyCorpus on an empty corpus.
TrainTokenizerResult TrainTokenizer(std::span<const HandPose> corpus, const TokenizerConfig& config,
                                    const TrainLogFn& log = {});

void SaveTokenizer(TokenizerModel& model, const std::string& path);
TokenizerModel LoadTokenizer(const std::string& path);

torch::Tensor PosesToTensor(std::span<const HandPose> poses);

}  // namespace graspprior::tokenizer
