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

#include "graspprior/bc.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/seeding.h"

namespace graspprior::policy {

void BcConfig::Validate() const {
  if (hidden < 1 || batch_size < 1 || !(lr > 0) || weight_decay < 0 || lr_decay_steps < 0 || num_demos < 1 || !(demo_noise >= 0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid behavior cloning parameters");
  }
}

nlohmann::ordered_json BcConfig::ToJson() const {
  return {{"hidden", hidden},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"lr_decay_steps", lr_decay_steps},
          {"num_demos", num_demos},
          {"demo_noise", demo_noise}};
}

BcConfig BcConfig::FromJson(const nlohmann::json& j) {
  BcConfig c;
  RejectUnknownKeys(j, c.ToJson(), "bc");
  if (j.is_null()) return c;
  c.hidden = j.value("hidden", c.hidden);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.lr_decay_steps = j.value("lr_decay_steps", c.lr_decay_steps);
  c.num_demos = j.value("num_demos", c.num_demos);
  c.demo_noise = j.value("demo_noise", c.demo_noise);
  c.Validate();
  return c;
}

BcPolicyImpl::BcPolicyImpl(int input_dim, int action_dim, const BcConfig& config) : input_dim_(input_dim) {
  mlp = register_module("mlp", torch::nn::Sequential(torch::nn::Linear(input_dim, config.hidden), torch::nn::ReLU(),
                                                     torch::nn::Linear(config.hidden, config.hidden), torch::nn::ReLU(),
                                                     torch::nn::Linear(config.hidden, action_dim)));
  input_mean = register_buffer("input_mean", torch::zeros({input_dim}));
  input_scale = register_buffer("input_scale", torch::ones({input_dim}));
}

torch::Tensor BcPolicyImpl::forward(const torch::Tensor& inputs) {
  return mlp->forward((inputs - input_mean) / input_scale);
}

std::vector<double> BcPolicyImpl::Act(const Observation& observation) {
  const long d = static_cast<long>(observation.visual_features.size() + observation.proprio.size());
  if (d != input_dim_) throw Error(ErrorCode::kDimensionMismatch, "observation has dimension " + std::to_string(d));
  std::vector<float> x(observation.visual_features);
  x.insert(x.end(), observation.proprio.begin(), observation.proprio.end());
  torch::NoGradGuard no_grad;
  const auto out = forward(torch::tensor(x).unsqueeze(0))[0].to(torch::kDouble).contiguous();
  return std::vector<double>(out.data_ptr<double>(), out.data_ptr<double>() + out.numel());
}

BcDataset BcDataset::FromDemos(std::span<const Demonstration> demos) {
  std::vector<float> inputs, actions;
  long n = 0, in_dim = -1, act_dim = -1;
  for (const auto& demo : demos) {
    for (const auto& step : demo) {
      const long d = static_cast<long>(step.observation.visual_features.size() + step.observation.proprio.size());
      const long a = static_cast<long>(step.action.size());
      if (in_dim < 0) {
        in_dim = d;
        act_dim = a;
      }
      if (d != in_dim || a != act_dim) throw Error(ErrorCode::kDimensionMismatch, "demonstration dimensions are inconsistent");
      inputs.insert(inputs.end(), step.observation.visual_features.begin(), step.observation.visual_features.end());
      inputs.insert(inputs.end(), step.observation.proprio.begin(), step.observation.proprio.end());
      actions.insert(actions.end(), step.action.begin(), step.action.end());
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no demonstration steps");
  return {torch::tensor(inputs).view({n, in_dim}), torch::tensor(actions).view({n, act_dim})};
}

BcLearner::BcLearner(BcDataset data, const BcConfig& config, std::uint64_t seed)
    : data_(std::move(data)), config_(config), seed_(seed) {
  config.Validate();
  torch::manual_seed(seed);
  policy_ = BcPolicy(static_cast<int>(data_.inputs.size(1)), static_cast<int>(data_.actions.size(1)), config);
  torch::NoGradGuard no_grad;
  const auto std = data_.inputs.std(0, /*unbiased=*/false);
  policy_->input_mean.copy_(data_.inputs.mean(0));
  policy_->input_scale.copy_(torch::where(std > 1e-6, std, torch::ones_like(std)));
  optimizer_ = std::make_unique<torch::optim::AdamW>(policy_->parameters(),
                                                     torch::optim::AdamWOptions(config.lr).weight_decay(config.weight_decay));
}

double BcLearner::Train(int steps) {
  const long n = data_.inputs.size(0);
  double total = 0.0;
  policy_->train();
  for (int s = 0; s < steps; ++s, ++step_) {
    torch::Tensor index;
    if (config_.batch_size >= n) {
      index = torch::arange(n);
    } else {
      std::mt19937_64 rng(DeriveSeed(seed_, {static_cast<std::uint64_t>(step_)}));
      std::uniform_int_distribution<long> pick(0, n - 1);
      std::vector<long> idx(config_.batch_size);
      for (long& i : idx) i = pick(rng);
      index = torch::tensor(idx);
    }
    if (config_.lr_decay_steps > 0) {
      const double t = std::min(1.0, static_cast<double>(step_) / config_.lr_decay_steps);
      for (auto& group : optimizer_->param_groups()) {
        static_cast<torch::optim::AdamWOptions&>(group.options()).lr(config_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
      }
    }
    optimizer_->zero_grad();
    const auto loss = torch::mse_loss(policy_->forward(data_.inputs.index_select(0, index)), data_.actions.index_select(0, index));
    loss.backward();
    optimizer_->step();
    total += loss.item<double>();
  }
  policy_->eval();
  return steps > 0 ? total / steps : 0.0;
}

double BcLearner::Loss() {
  torch::NoGradGuard no_grad;
  return torch::mse_loss(policy_->forward(data_.inputs), data_.actions).item<double>();
}

BcTrainer::BcTrainer(const FrozenEncoder& encoder, DemoFn demos, const BcConfig& config)
    : encoder_(encoder), demos_(std::move(demos)), config_(config), encoder_hash_(encoder.ParameterHash()) {
  config.Validate();
}

void BcTrainer::CheckFrozen() const {
  if (encoder_.ParameterHash() != encoder_hash_) {
    throw Error(ErrorCode::kInvalidConfig, "frozen encoder " + encoder_.name() + " changed during policy training");
  }
}

void BcTrainer::Begin(int view, int /*seed_index*/, std::uint64_t seed) {
  CheckFrozen();
  const auto demos = demos_(view, seed);
  learner_ = std::make_unique<BcLearner>(BcDataset::FromDemos(demos), config_, seed);
}

void BcTrainer::Train(int steps) {
  if (!learner_) throw Error(ErrorCode::kInvalidConfig, "Train called before Begin");
  learner_->Train(steps);
  CheckFrozen();
}

std::vector<double> BcTrainer::Act(const EnvObservation& observation) {
  if (!learner_) throw Error(ErrorCode::kInvalidConfig, "Act called before Begin");
  return learner_->policy()->Act(Observe(observation, encoder_));
}

DemoFn ToyExpertDemos(const FrozenEncoder& encoder, int count, double execution_noise) {
  return [&encoder, count, execution_noise](int view, std::uint64_t seed) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(DeriveSeed(seed, {2, static_cast<std::uint64_t>(i)}));
    return CollectExpertDemos(view, seeds, encoder, {}, execution_noise);
  };
}

}  // namespace graspprior::policy
