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

#include "graspprior/cvae.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/seeding.h"

namespace graspprior::contact_eval {

void CvaeConfig::Validate() const {
  if (latent_dim < 1 || hidden < 1 || num_predictions < 1 || iterations < 0 || eval_every < 1 || batch_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "cVAE sizes must be positive");
  }
  if (!(kl_weight >= 0) || !(lr > 0) || !(sigma > 0) || grid < 1) {
    throw Error(ErrorCode::kInvalidConfig, "invalid cVAE parameters");
  }
}

nlohmann::ordered_json CvaeConfig::ToJson() const {
  return {{"latent_dim", latent_dim},
          {"hidden", hidden},
          {"kl_weight", kl_weight},
          {"num_predictions", num_predictions},
          {"iterations", iterations},
          {"eval_every", eval_every},
          {"batch_size", batch_size},
          {"lr", lr},
          {"sigma", sigma},
          {"grid", grid},
          {"seed", seed}};
}

CvaeConfig CvaeConfig::FromJson(const nlohmann::json& j) {
  CvaeConfig c;
  RejectUnknownKeys(j, c.ToJson(), "cvae");
  if (j.is_null()) return c;
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.kl_weight = j.value("kl_weight", c.kl_weight);
  c.num_predictions = j.value("num_predictions", c.num_predictions);
  c.iterations = j.value("iterations", c.iterations);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.sigma = j.value("sigma", c.sigma);
  c.grid = j.value("grid", c.grid);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

torch::Tensor KlDivergence(const torch::Tensor& mu, const torch::Tensor& logvar) {
  return (-0.5 * (1 + logvar - mu.pow(2) - logvar.exp()).sum(1)).mean();
}

CvaeHeadImpl::CvaeHeadImpl(int feature_dim, const CvaeConfig& config) : feature_dim_(feature_dim), config_(config) {
  config.Validate();
  if (feature_dim < 1) throw Error(ErrorCode::kDimensionMismatch, "feature dimension must be positive");
  const int h = config.hidden, l = config.latent_dim;
  encoder = register_module("encoder", torch::nn::Sequential(torch::nn::Linear(feature_dim + 2, h), torch::nn::ReLU(),
                                                             torch::nn::Linear(h, h), torch::nn::ReLU()));
  mu_head = register_module("mu_head", torch::nn::Linear(h, l));
  logvar_head = register_module("logvar_head", torch::nn::Linear(h, l));
  decoder = register_module("decoder", torch::nn::Sequential(torch::nn::Linear(feature_dim + l, h), torch::nn::ReLU(),
                                                             torch::nn::Linear(h, h), torch::nn::ReLU(),
                                                             torch::nn::Linear(h, 2)));
  feature_mean = register_buffer("feature_mean", torch::zeros({feature_dim}));
  feature_scale = register_buffer("feature_scale", torch::ones({feature_dim}));
}

torch::Tensor CvaeHeadImpl::Standardize(const torch::Tensor& features) const {
  if (features.dim() != 2 || features.size(1) != feature_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "expected features of dimension " + std::to_string(feature_dim_));
  }
  return (features - feature_mean) / feature_scale;
}

std::pair<torch::Tensor, torch::Tensor> CvaeHeadImpl::Posterior(const torch::Tensor& features, const torch::Tensor& points) {
  const auto h = encoder->forward(torch::cat({Standardize(features), points}, 1));
  return {mu_head->forward(h), logvar_head->forward(h)};
}

torch::Tensor CvaeHeadImpl::DecodePoints(const torch::Tensor& features, const torch::Tensor& z) {
  return decoder->forward(torch::cat({Standardize(features), z}, 1));
}

CvaeLoss CvaeHeadImpl::Loss(const torch::Tensor& features, const torch::Tensor& points) {
  const auto [mu, logvar] = Posterior(features, points);
  const auto z = mu + torch::randn_like(mu) * (0.5 * logvar).exp();
  CvaeLoss loss;
  loss.reconstruction = (DecodePoints(features, z) - points).pow(2).sum(1).mean();
  loss.kl = KlDivergence(mu, logvar);
  loss.total = loss.reconstruction + config_.kl_weight * loss.kl;
  return loss;
}

torch::Tensor CvaeHeadImpl::Sample(const torch::Tensor& features, int count, std::uint64_t seed) {
  const long b = features.size(0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  auto z = torch::empty({b * count, config_.latent_dim});
  float* data = z.data_ptr<float>();
  for (long i = 0; i < z.numel(); ++i) data[i] = normal(rng);
  const auto repeated = features.repeat_interleave(count, 0);
  return DecodePoints(repeated, z).view({b, count, 2});
}

EvalRecord ScorePrediction(const std::string& sample_id, std::span<const Point2D> predicted,
                           std::span<const Point2D> truth, const CvaeConfig& config) {
  auto to_grid = [&](std::span<const Point2D> points) {
    std::vector<Point2D> out;
    for (const Point2D& p : points) out.push_back({p.x * config.grid, p.y * config.grid});
    return out;
  };
  const Heatmap pred = RenderHeatmap(to_grid(predicted), config.sigma, config.grid, config.grid);
  const auto gt_points = to_grid(truth);
  const Heatmap gt = RenderHeatmap(gt_points, config.sigma, config.grid, config.grid);
  return {sample_id, Sim(gt, pred), Nss(pred, FixationMap(gt_points, config.grid, config.grid))};
}

namespace {

torch::Tensor FeatureTensor(std::span<const FeatureSample> samples, int dim) {
  auto out = torch::empty({static_cast<long>(samples.size()), dim});
  for (size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<int>(samples[i].features.size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "sample " + samples[i].sample_id + " has the wrong feature dimension");
    }
    std::copy(samples[i].features.begin(), samples[i].features.end(), out[i].data_ptr<float>());
  }
  return out;
}

}  // namespace

std::vector<EvalRecord> EvaluateHead(CvaeHead& head, std::span<const FeatureSample> samples, std::uint64_t seed,
                                     std::vector<std::vector<Point2D>>* predictions) {
  torch::NoGradGuard no_grad;
  const int c = head->config().num_predictions;
  std::vector<EvalRecord> records;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto points = head->Sample(FeatureTensor(samples.subspan(i, 1), head->feature_dim()), c, DeriveSeed(seed, {i}))[0];
    std::vector<Point2D> predicted;
    for (int k = 0; k < c; ++k) predicted.push_back({points[k][0].item<double>(), points[k][1].item<double>()});
    records.push_back(ScorePrediction(samples[i].sample_id, predicted, samples[i].points, head->config()));
    if (predictions) predictions->push_back(std::move(predicted));
  }
  return records;
}

nlohmann::ordered_json EvalSummary::ToJson() const {
  return {{"encoder_name", encoder_name}, {"mean_SIM", mean_sim}, {"mean_NSS", mean_nss}, {"n_samples", n_samples}};
}

nlohmann::ordered_json ToJson(const EvalRecord& record) {
  return {{"sample_id", record.sample_id}, {"SIM", record.sim}, {"NSS", record.nss}};
}

EvalSummary Summarize(const std::string& encoder_name, std::span<const EvalRecord> records) {
  EvalSummary s;
  s.encoder_name = encoder_name;
  s.n_samples = records.size();
  for (const auto& r : records) {
    s.mean_sim += r.sim;
    s.mean_nss += r.nss;
  }
  if (!records.empty()) {
    s.mean_sim /= records.size();
    s.mean_nss /= records.size();
  }
  return s;
}

size_t SelectBestCheckpoint(std::span<const double> sims) {
  if (sims.empty()) throw Error(ErrorCode::kEmptyDataset, "no evaluations to select from");
  return static_cast<size_t>(std::max_element(sims.begin(), sims.end()) - sims.begin());
}

CvaeTrainResult TrainCvae(std::span<const FeatureSample> train, std::span<const FeatureSample> held_out,
                          const CvaeConfig& config, const CvaeLogFn& log) {
  config.Validate();
  if (train.empty() || held_out.empty()) throw Error(ErrorCode::kEmptyDataset, "cVAE training needs train and held-out samples");
  torch::manual_seed(config.seed);
  const int dim = static_cast<int>(train[0].features.size());
  CvaeTrainResult result;
  result.head = CvaeHead(dim, config);
  auto& head = result.head;

  const auto features = FeatureTensor(train, dim);
  {
    torch::NoGradGuard no_grad;
    const auto std = features.std(0, /*unbiased=*/false);
    head->feature_mean.copy_(features.mean(0));
    // Near-constant dimensions are floored at a tenth of the mean std so
    // held-out features cannot land hundreds of scales away.
    const double floor = 0.1 * std.mean().item<double>();
    head->feature_scale.copy_(floor > 1e-6 ? std.clamp_min(floor) : torch::ones_like(std));
  }
  // One training pair per (sample, point).
  std::vector<long> pair_sample;
  std::vector<float> pair_point;
  for (size_t i = 0; i < train.size(); ++i) {
    for (const Point2D& p : train[i].points) {
      pair_sample.push_back(static_cast<long>(i));
      pair_point.push_back(static_cast<float>(p.x));
      pair_point.push_back(static_cast<float>(p.y));
    }
  }
  if (pair_sample.empty()) throw Error(ErrorCode::kEmptyDataset, "training samples carry no points");
  const long n = static_cast<long>(pair_sample.size());
  const auto points = torch::tensor(pair_point).view({n, 2});
  const auto sample_index = torch::tensor(pair_sample);

  torch::optim::AdamW optimizer(head->parameters(), torch::optim::AdamWOptions(config.lr).weight_decay(0.0));
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  long cursor = n;
  long epoch = 0;
  std::vector<torch::Tensor> best;
  double best_sim = -1.0;
  const std::uint64_t eval_seed = DeriveSeed(config.seed, {1});

  for (int it = 1; it <= config.iterations; ++it) {
    head->train();
    std::vector<long> batch;
    for (int j = 0; j < config.batch_size; ++j) {
      if (cursor == n) {
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(DeriveSeed(config.seed, {0, static_cast<std::uint64_t>(epoch++)}));
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    const auto idx = torch::tensor(batch);
    optimizer.zero_grad();
    const auto loss = head->Loss(features.index_select(0, sample_index.index_select(0, idx)), points.index_select(0, idx));
    loss.total.backward();
    optimizer.step();

    if (it % config.eval_every == 0 || it == config.iterations) {
      head->eval();
      const auto summary = Summarize("", EvaluateHead(head, held_out, eval_seed));
      result.history.push_back({it, summary.mean_sim, summary.mean_nss});
      if (log) log(result.history.back());
      if (summary.mean_sim > best_sim) {
        best_sim = summary.mean_sim;
        best.clear();
        for (const auto& t : head->parameters()) best.push_back(t.detach().clone());
      }
    }
  }
  head->eval();
  if (result.history.empty()) return result;
  std::vector<double> sims;
  for (const auto& p : result.history) sims.push_back(p.mean_sim);
  result.best_index = SelectBestCheckpoint(sims);
  torch::NoGradGuard no_grad;
  auto params = head->parameters();
  for (size_t i = 0; i < params.size(); ++i) params[i].copy_(best[i]);
  return result;
}

std::vector<FeatureSample> ExtractFeatures(const policy::FrozenEncoder& encoder,
                                           std::span<const PredictionSample> samples) {
  std::vector<FeatureSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.image.width == 0 || s.image.height == 0) {
      throw Error(ErrorCode::kMissingAnnotation, "sample " + s.sample_id + " has no image loaded");
    }
    const double w = s.image.width, h = s.image.height;
    out.push_back({s.sample_id, encoder.Encode(s.image),
                   {{s.contact_points.first.x / w, s.contact_points.first.y / h},
                    {s.contact_points.second.x / w, s.contact_points.second.y / h}}});
  }
  return out;
}

EncoderEvaluation EvaluateEncoder(const policy::FrozenEncoder& encoder, std::span<const PredictionSample> train,
                                  std::span<const PredictionSample> eval, const CvaeConfig& config,
                                  const CvaeLogFn& log) {
  const auto train_features = ExtractFeatures(encoder, train);
  const auto eval_features = ExtractFeatures(encoder, eval);
  auto trained = TrainCvae(train_features, eval_features, config, log);
  EncoderEvaluation result;
  result.records = EvaluateHead(trained.head, eval_features, DeriveSeed(config.seed, {1}), &result.predictions);
  result.summary = Summarize(encoder.name(), result.records);
  result.history = std::move(trained.history);
  result.head = trained.head;
  return result;
}

Image RenderOverlay(const Image& image, std::span<const Point2D> predicted, std::span<const Point2D> truth,
                    const CvaeConfig& config) {
  std::vector<Point2D> grid_points;
  for (const Point2D& p : predicted) grid_points.push_back({p.x * config.grid, p.y * config.grid});
  const Heatmap map = RenderHeatmap(grid_points, config.sigma, config.grid, config.grid);
  const double peak = *std::max_element(map.values.begin(), map.values.end());
  Image out = image;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double v = peak > 0 ? map.at(x * config.grid / out.width, y * config.grid / out.height) / peak : 0.0;
      auto* px = out.pixel(x, y);
      const double a = 0.6 * v;
      px[0] = static_cast<std::uint8_t>(std::lround((1 - a) * px[0] + a * 255));
      px[1] = static_cast<std::uint8_t>(std::lround((1 - a) * px[1]));
      px[2] = static_cast<std::uint8_t>(std::lround((1 - a) * px[2]));
    }
  }
  for (const Point2D& p : truth) {
    const int cx = static_cast<int>(p.x * out.width), cy = static_cast<int>(p.y * out.height);
    for (int y = cy - 1; y <= cy + 1; ++y) {
      for (int x = cx - 1; x <= cx + 1; ++x) {
        if (x < 0 || y < 0 || x >= out.width || y >= out.height) continue;
        auto* px = out.pixel(x, y);
        px[0] = 0;
        px[1] = 255;
        px[2] = 0;
      }
    }
  }
  return out;
}

}  // namespace graspprior::contact_eval
