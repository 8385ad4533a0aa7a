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
#include <vector>

#include "graspprior/policy.h"
#include "json.hpp"

namespace graspprior::policy {

struct BcConfig {
  int hidden = 256;
  int batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 0.0;
  // Cosine decay of lr to 0 over this many steps; 0 keeps lr constant.
  int lr_decay_steps = 0;
  int num_demos = 25;
  // Std of the noise on executed expert actions while collecting demos.
  double demo_noise = 0.3;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static BcConfig FromJson(const nlohmann::json& j);
};

// Two hidden layers over standardized (visual_features ++ proprio).
class BcPolicyImpl : public torch::nn::Module {
 public:
  BcPolicyImpl(int input_dim, int action_dim, const BcConfig& config);
  torch::Tensor forward(const torch::Tensor& inputs);
  std::vector<double> Act(const Observation& observation);

  int input_dim() const { return input_dim_; }
  torch::Tensor input_mean;
  torch::Tensor input_scale;

 private:
  int input_dim_;
  torch::nn::Sequential mlp{nullptr};
};
TORCH_MODULE(BcPolicy);

// Flattened (observation, action) pairs. Throws kEmptyDataset without pairs
// and kDimensionMismatch on inconsistent dimensions.
struct BcDataset {
  torch::Tensor inputs;   // [n, d + p]
  torch::Tensor actions;  // [n, a]

  static BcDataset FromDemos(std::span<const Demonstration> demos);
};

// Mean-squared action regression. The policy is seeded by `seed`; batch
// order depends only on (seed, step). Batches sample with replacement, or
// take every pair when batch_size covers the dataset.
class BcLearner {
 public:
  BcLearner(BcDataset data, const BcConfig& config, std::uint64_t seed);
  // Returns the mean training loss over the steps taken.
  double Train(int steps);
  double Loss();  // MSE over the whole dataset
  BcPolicy& policy() { return policy_; }

 private:
  BcDataset data_;
  BcConfig config_;
  std::uint64_t seed_;
  BcPolicy policy_{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  long step_ = 0;
};

using DemoFn = std::function<std::vector<Demonstration>(int view, std::uint64_t seed)>;

// PolicyTrainer over a frozen encoder. Demonstrations come from `demos` for
// each run. Throws kInvalidConfig if the encoder's parameters change.
class BcTrainer : public PolicyTrainer {
 public:
  BcTrainer(const FrozenEncoder& encoder, DemoFn demos, const BcConfig& config);
  void Begin(int view, int seed_index, std::uint64_t seed) override;
  void Train(int steps) override;
  std::vector<double> Act(const EnvObservation& observation) override;

 private:
  void CheckFrozen() const;

  const FrozenEncoder& encoder_;
  DemoFn demos_;
  BcConfig config_;
  std::uint64_t encoder_hash_;
  std::unique_ptr<BcLearner> learner_;
};

// Scripted-expert demonstrations on the toy environment for `count` seeds
// derived from `seed`.
DemoFn ToyExpertDemos(const FrozenEncoder& encoder, int count, double execution_noise);

}  // namespace graspprior::policy
