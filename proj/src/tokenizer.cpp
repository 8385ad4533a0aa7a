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

#include "graspprior/tokenizer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/seeding.h"

namespace graspprior::tokenizer {

void TokenizerConfig::Validate() const {
  if (num_codebooks < 1 || codebook_size < 2 || code_dim < 1 || hidden < 1) {
    throw Error(ErrorCode::kInvalidConfig, "tokenizer shape parameters must be positive (codebook_size >= 2)");
  }
  if (steps < 0 || batch_size < 1 || !(lr > 0) || !(score_scale > 0) || weight_decay < 0 || !(input_noise >= 0) || !(cycle_weight >= 0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid tokenizer training parameters");
  }
}

nlohmann::ordered_json TokenizerConfig::ToJson() const {
  return {{"num_codebooks", num_codebooks},
          {"codebook_size", codebook_size},
          {"code_dim", code_dim},
          {"hidden", hidden},
          {"score_scale", score_scale},
          {"input_noise", input_noise},
          {"cycle_weight", cycle_weight},
          {"steps", steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"seed", seed}};
}

TokenizerConfig TokenizerConfig::FromJson(const nlohmann::json& j) {
  TokenizerConfig c;
  RejectUnknownKeys(j, c.ToJson(), "tokenizer");
  c.num_codebooks = j.value("num_codebooks", c.num_codebooks);
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.code_dim = j.value("code_dim", c.code_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.score_scale = j.value("score_scale", c.score_scale);
  c.input_noise = j.value("input_noise", c.input_noise);
  c.cycle_weight = j.value("cycle_weight", c.cycle_weight);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

TokenizerModelImpl::TokenizerModelImpl(const TokenizerConfig& config) : config_(config) {
  config.Validate();
  const int n = config.num_codebooks, d = config.code_dim;
  encoder = register_module("encoder", torch::nn::Sequential(torch::nn::Linear(kPoseDim, config.hidden), torch::nn::ReLU(),
                                                             torch::nn::Linear(config.hidden, n * d)));
  decoder = register_module("decoder", torch::nn::Sequential(torch::nn::Linear(n * d, config.hidden), torch::nn::ReLU(),
                                                             torch::nn::Linear(config.hidden, kPoseDim)));
  query_proj = register_parameter("query_proj", torch::eye(d).unsqueeze(0).repeat({n, 1, 1}) +
                                                    0.01 * torch::randn({n, d, d}));
  codebooks = register_parameter("codebooks", torch::randn({n, config.codebook_size, d}));
  pose_mean = register_buffer("pose_mean", torch::zeros({kPoseDim}));
  pose_scale = register_buffer("pose_scale", torch::ones({1}));
}

torch::Tensor TokenizerModelImpl::EncodeLatent(const torch::Tensor& poses) {
  const auto x = (poses - pose_mean) / pose_scale;
  return encoder->forward(x).view({poses.size(0), config_.num_codebooks, config_.code_dim});
}

torch::Tensor TokenizerModelImpl::Scores(const torch::Tensor& latent) {
  // q[b, n, :] = latent[b, n, :] @ query_proj[n]
  const auto q = torch::nn::functional::normalize(torch::einsum("bnd,nde->bne", {latent, query_proj}),
                                                  torch::nn::functional::NormalizeFuncOptions().dim(-1));
  const auto k = torch::nn::functional::normalize(codebooks, torch::nn::functional::NormalizeFuncOptions().dim(-1));
  return config_.score_scale * torch::einsum("bne,nce->bnc", {q, k});
}

torch::Tensor TokenizerModelImpl::Lookup(const torch::Tensor& indices) {
  // codebooks[n, indices[b, n], :]
  const auto n = torch::arange(config_.num_codebooks, torch::kLong).unsqueeze(0).expand_as(indices);
  return codebooks.index({n, indices});
}

torch::Tensor TokenizerModelImpl::DecodeCodes(const torch::Tensor& codes) {
  const auto out = decoder->forward(codes.reshape({codes.size(0), -1}));
  return out * pose_scale + pose_mean;
}

torch::Tensor TokenizerModelImpl::forward(const torch::Tensor& poses) {
  auto input = poses;
  if (is_training() && config_.input_noise > 0) input = poses + config_.input_noise * torch::randn_like(poses);
  const auto scores = Scores(EncodeLatent(input));
  const auto soft = torch::softmax(scores, -1);
  const auto hard = torch::one_hot(scores.argmax(-1), config_.codebook_size).to(soft.dtype());
  // Hard weights forward, soft-weight gradient backward.
  const auto weights = hard + soft - soft.detach();
  return DecodeCodes(torch::einsum("bnc,ncd->bnd", {weights, codebooks}));
}

torch::Tensor TokenizerModelImpl::TrainingLoss(const torch::Tensor& poses) {
  const auto recon = forward(poses);
  auto loss = torch::mse_loss(recon, poses);
  if (config_.cycle_weight > 0) {
    const auto target = Assign(poses).detach();
    const auto scores = Scores(EncodeLatent(recon.detach()));
    loss = loss + config_.cycle_weight * torch::nn::functional::cross_entropy(scores.reshape({-1, config_.codebook_size}),
                                                              target.reshape({-1}));
  }
  return loss;
}

torch::Tensor TokenizerModelImpl::Assign(const torch::Tensor& poses) {
  return Scores(EncodeLatent(poses)).argmax(-1);
}

torch::Tensor PosesToTensor(std::span<const HandPose> poses) {
  auto t = torch::empty({static_cast<long>(poses.size()), kPoseDim}, torch::kFloat);
  auto acc = t.accessor<float, 2>();
  for (size_t i = 0; i < poses.size(); ++i) {
    for (int d = 0; d < kPoseDim; ++d) acc[i][d] = static_cast<float>(poses[i].joints[d]);
  }
  return t;
}

namespace {

void CheckFinite(std::span<const HandPose> poses) {
  for (const auto& p : poses) {
    if (!p.IsFinite()) throw Error(ErrorCode::kNonFiniteInput, "hand pose contains non-finite values");
  }
}

HandPose RowToPose(const torch::Tensor& row) {
  HandPose pose;
  const auto r = row.contiguous();
  const float* data = r.data_ptr<float>();
  for (int d = 0; d < kPoseDim; ++d) pose.joints[d] = data[d];
  return pose;
}

}  // namespace

std::vector<TokenSequence> TokenizeAll(TokenizerModel& model, std::span<const HandPose> poses) {
  CheckFinite(poses);
  torch::NoGradGuard no_grad;
  std::vector<TokenSequence> out;
  if (poses.empty()) return out;
  const auto idx = model->Assign(PosesToTensor(poses)).contiguous();
  const auto acc = idx.accessor<long, 2>();
  for (long b = 0; b < idx.size(0); ++b) {
    TokenSequence seq;
    for (long n = 0; n < idx.size(1); ++n) seq.tokens.push_back(static_cast<int>(acc[b][n]));
    out.push_back(std::move(seq));
  }
  return out;
}

TokenSequence Tokenize(TokenizerModel& model, const HandPose& pose) {
  return TokenizeAll(model, std::span<const HandPose>(&pose, 1)).front();
}

HandPose Detokenize(TokenizerModel& model, const TokenSequence& tokens) {
  const auto& c = model->config();
  if (static_cast<int>(tokens.tokens.size()) != c.num_codebooks) {
    throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(c.num_codebooks) + " tokens");
  }
  for (int t : tokens.tokens) {
    if (t < 0 || t >= c.codebook_size) {
      throw Error(ErrorCode::kTokenOutOfRange, "token " + std::to_string(t) + " outside [0, " +
                                                   std::to_string(c.codebook_size) + ")");
    }
  }
  torch::NoGradGuard no_grad;
  std::vector<long> idx(tokens.tokens.begin(), tokens.tokens.end());
  const auto indices = torch::tensor(idx, torch::kLong).unsqueeze(0);
  return RowToPose(model->DecodeCodes(model->Lookup(indices))[0]);
}

std::vector<double> CodebookUtilization(TokenizerModel& model, std::span<const HandPose> poses) {
  const auto& c = model->config();
  std::vector<std::vector<bool>> used(c.num_codebooks, std::vector<bool>(c.codebook_size, false));
  for (const auto& seq : TokenizeAll(model, poses)) {
    for (int n = 0; n < c.num_codebooks; ++n) used[n][seq.tokens[n]] = true;
  }
  std::vector<double> out;
  for (const auto& head : used) out.push_back(std::count(head.begin(), head.end(), true) / static_cast<double>(c.codebook_size));
  return out;
}

double ReconstructionError(TokenizerModel& model, std::span<const HandPose> poses) {
  CheckFinite(poses);
  if (poses.empty()) return 0.0;
  torch::NoGradGuard no_grad;
  const auto x = PosesToTensor(poses);
  const auto recon = model->DecodeCodes(model->Lookup(model->Assign(x)));
  // Per-joint Euclidean error averaged over joints and poses.
  const auto err = (recon - x).view({x.size(0), kNumJoints, 3}).pow(2).sum(-1).sqrt();
  return err.to(torch::kDouble).mean().item<double>();
}

TrainTokenizerResult TrainTokenizer(std::span<const HandPose> corpus, const TokenizerConfig& config,
                                    const TrainLogFn& log) {
  config.Validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "tokenizer corpus is empty");
  CheckFinite(corpus);
  torch::manual_seed(config.seed);
  TrainTokenizerResult result;
  result.model = TokenizerModel(config);
  auto& model = result.model;

  const auto data = PosesToTensor(corpus);
  {
    torch::NoGradGuard no_grad;
    model->pose_mean.copy_(data.mean(0));
    model->pose_scale.fill_(std::max((data - data.mean(0)).std().item<double>(), 1e-6));
  }
  torch::optim::AdamW optimizer(model->parameters(),
                                torch::optim::AdamWOptions(config.lr).weight_decay(config.weight_decay));
  const long n = data.size(0);
  const long batch = std::min<long>(config.batch_size, n);
  const long steps_per_epoch = std::max<long>(1, n / batch);
  model->train();
  std::vector<long> order(n);
  double epoch_sum = 0.0;
  long epoch_count = 0;
  for (int step = 0; step < config.steps; ++step) {
    const long epoch = step / steps_per_epoch;
    const long pos = step % steps_per_epoch;
    if (pos == 0) {
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(DeriveSeed(config.seed, {static_cast<std::uint64_t>(epoch)}));
      std::shuffle(order.begin(), order.end(), rng);
    }
    const auto idx = torch::tensor(std::vector<long>(order.begin() + pos * batch, order.begin() + (pos + 1) * batch));
    const auto x = data.index_select(0, idx);
    // Cosine decay to 10% of the base rate.
    const double progress = static_cast<double>(step) / std::max(1, config.steps);
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(config.lr * (0.55 + 0.45 * std::cos(M_PI * progress)));
    }
    optimizer.zero_grad();
    const auto loss = model->TrainingLoss(x);
    loss.backward();
    optimizer.step();
    const double value = loss.item<double>();
    if (log) log(step + 1, value);
    epoch_sum += value;
    ++epoch_count;
    if (pos == steps_per_epoch - 1 || step + 1 == config.steps) {
      result.epoch_loss.push_back(epoch_sum / epoch_count);
      epoch_sum = 0.0;
      epoch_count = 0;
    }
  }
  model->eval();
  result.final_error = ReconstructionError(model, corpus);
  result.utilization = CodebookUtilization(model, corpus);
  return result;
}

void SaveTokenizer(TokenizerModel& model, const std::string& path) {
  torch::serialize::OutputArchive archive;
  model->save(archive);
  archive.write("config_json", c10::IValue(model->config().ToJson().dump()));
  try {
    archive.save_to(path);
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::kIo, "cannot write tokenizer checkpoint " + path);
  }
}

TokenizerModel LoadTokenizer(const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error& e) {
    throw Error(ErrorCode::kIo, "cannot read tokenizer checkpoint " + path);
  }
  c10::IValue config_value;
  archive.read("config_json", config_value);
  TokenizerModel model(TokenizerConfig::FromJson(nlohmann::json::parse(config_value.toStringRef())));
  model->load(archive);
  model->eval();
  return model;
}

}  // namespace graspprior::tokenizer
