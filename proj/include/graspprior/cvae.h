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

#include "graspprior/heatmap.h"
#include "graspprior/manifest.h"
#include "graspprior/policy.h"
#include "json.hpp"

namespace graspprior::contact_eval {

struct CvaeConfig {
  int latent_dim = 32;
  int hidden = 256;
  double kl_weight = 1.0;
  int num_predictions = 5;
  int iterations = 3000;
  int eval_every = 150;
  int batch_size = 128;
  double lr = 5e-5;
  double sigma = 3.0;
  int grid = 32;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static CvaeConfig FromJson(const nlohmann::json& j);
};

// Points are normalized image coordinates in [0, 1]^2.
struct FeatureSample {
  std::string sample_id;
  std::vector<float> features;
  std::vector<Point2D> points;
};

struct CvaeLoss {
  torch::Tensor reconstruction;  // squared error summed over coordinates, batch mean
  torch::Tensor kl;              // batch mean
  torch::Tensor total;
};

// KL(N(mu, exp(logvar)) || N(0, I)), summed over latent dimensions and
// averaged over the batch.
torch::Tensor KlDivergence(const torch::Tensor& mu, const torch::Tensor& logvar);

// Condition-concatenated two-layer encoder and decoder with a Gaussian latent.
class CvaeHeadImpl : public torch::nn::Module {
 public:
  CvaeHeadImpl(int feature_dim, const CvaeConfig& config);

  // [B, F] features, [B, 2] points -> {mu, logvar}, each [B, latent]
  std::pair<torch::Tensor, torch::Tensor> Posterior(const torch::Tensor& features, const torch::Tensor& points);
  // [B, F], [B, latent] -> [B, 2]
  torch::Tensor DecodePoints(const torch::Tensor& features, const torch::Tensor& z);
  CvaeLoss Loss(const torch::Tensor& features, const torch::Tensor& points);
  // [B, F] -> [B, count, 2] with z drawn from the prior using `seed`.
  torch::Tensor Sample(const torch::Tensor& features, int count, std::uint64_t seed);

  int feature_dim() const { return feature_dim_; }
  const CvaeConfig& config() const { return config_; }

  torch::Tensor feature_mean;   // [F]
  torch::Tensor feature_scale;  // [F]

 private:
  torch::Tensor Standardize(const torch::Tensor& features) const;

  int feature_dim_;
  CvaeConfig config_;
  torch::nn::Sequential encoder{nullptr};
  torch::nn::Linear mu_head{nullptr};
  torch::nn::Linear logvar_head{nullptr};
  torch::nn::Sequential decoder{nullptr};
};
TORCH_MODULE(CvaeHead);

struct EvalRecord {
  std::string sample_id;
  double sim = 0.0;
  double nss = 0.0;
};

// Renders predicted and true points (normalized coordinates) on the heatmap
// grid. SIM compares the two maps; NSS sums the standardized predicted map
// over the cells that contain a true point.
EvalRecord ScorePrediction(const std::string& sample_id, std::span<const Point2D> predicted,
                           std::span<const Point2D> truth, const CvaeConfig& config);

// Per-sample records; sample i draws its predictions from DeriveSeed(seed, {i}).
// The sampled points are appended to `predictions` when it is non-null.
std::vector<EvalRecord> EvaluateHead(CvaeHead& head, std::span<const FeatureSample> samples, std::uint64_t seed,
                                     std::vector<std::vector<Point2D>>* predictions = nullptr);

struct EvalSummary {
  std::string encoder_name;
  double mean_sim = 0.0;
  double mean_nss = 0.0;
  size_t n_samples = 0;

  nlohmann::ordered_json ToJson() const;
};

EvalSummary Summarize(const std::string& encoder_name, std::span<const EvalRecord> records);
nlohmann::ordered_json ToJson(const EvalRecord& record);

struct EvalPoint {
  int iteration = 0;
  double mean_sim = 0.0;
  double mean_nss = 0.0;
};

// Index of the first maximum; throws kEmptyDataset on an empty list.
size_t SelectBestCheckpoint(std::span<const double> sims);

struct CvaeTrainResult {
  CvaeHead head{nullptr};  // parameters of the selected evaluation
  std::vector<EvalPoint> history;
  size_t best_index = 0;
};

using CvaeLogFn = std::function<void(const EvalPoint&)>;

// Trains on `train`, evaluates on `held_out` every eval_every iterations and
// keeps the evaluation with the highest mean SIM. Throws kEmptyDataset.
CvaeTrainResult TrainCvae(std::span<const FeatureSample> train, std::span<const FeatureSample> held_out,
                          const CvaeConfig& config, const CvaeLogFn& log = {});

// Points are normalized by the sample image size.
std::vector<FeatureSample> ExtractFeatures(const policy::FrozenEncoder& encoder,
                                           std::span<const PredictionSample> samples);

struct EncoderEvaluation {
  EvalSummary summary;
  std::vector<EvalRecord> records;
  std::vector<std::vector<Point2D>> predictions;  // normalized, per eval sample
  std::vector<EvalPoint> history;
  CvaeHead head{nullptr};
};

// Frozen features -> cVAE trained on `train` with checkpoint selection on
// `eval` -> per-sample records of the selected head on `eval`.
EncoderEvaluation EvaluateEncoder(const policy::FrozenEncoder& encoder, std::span<const PredictionSample> train,
                                  std::span<const PredictionSample> eval, const CvaeConfig& config,
                                  const CvaeLogFn& log = {});

// Image with the predicted heatmap tinted red and true points marked green.
Image RenderOverlay(const Image& image, std::span<const Point2D> predicted, std::span<const Point2D> truth,
                    const CvaeConfig& config);

}  // namespace graspprior::contact_eval
