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

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "graspprior/types.h"
#include "json.hpp"

namespace graspprior::policy {

// Raw environment output before the frozen encoder is applied.
struct EnvObservation {
  Image image;
  std::vector<double> proprio;
};

struct Observation {
  std::vector<float> visual_features;
  std::vector<float> proprio;
};

// Deterministic given the reset seed and the action sequence.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int proprio_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int horizon() const = 0;
  virtual EnvObservation Reset(std::uint64_t randomization_seed) = 0;
  // Returns true once the episode is over (success or horizon).
  virtual bool Step(std::span<const double> action, EnvObservation* observation) = 0;
  virtual bool Success() const = 0;
  virtual Image Render() const = 0;
};

// Image-to-feature map whose parameters never change during policy training.
class FrozenEncoder {
 public:
  virtual ~FrozenEncoder() = default;
  virtual int dim() const = 0;
  virtual std::vector<float> Encode(const Image& image) const = 0;
  // Changes whenever any parameter changes.
  virtual std::uint64_t ParameterHash() const = 0;
  virtual std::string name() const = 0;
};

// Parameter-free encoder: per-channel block means over a grid x grid
// partition of the image, scaled to [0, 1].
class PooledPixelEncoder : public FrozenEncoder {
 public:
  explicit PooledPixelEncoder(int grid = 8) : grid_(grid) {}
  int dim() const override { return grid_ * grid_ * 3; }
  std::vector<float> Encode(const Image& image) const override;
  std::uint64_t ParameterHash() const override;
  std::string name() const override { return "pooled" + std::to_string(grid_); }

 private:
  int grid_;
};

Observation Observe(const EnvObservation& raw, const FrozenEncoder& encoder);

// 2D tabletop: a gripper cursor (x, y, aperture) must pick a disk and drop
// it inside a fixed goal region. Coordinates are in [0, 1]^2.
struct ToyEnvConfig {
  int image_size = 64;
  int horizon = 750;
  int view = 0;  // camera view in [0, 3)
  double step_size = 0.02;
  double object_radius = 0.06;
  double grasp_radius = 0.05;
  double goal_radius = 0.08;
  Point2D goal{0.75, 0.75};
  Point2D gripper_start{0.5, 0.5};
  double object_min = 0.2;
  double object_max = 0.4;
};

class ToyReachGraspPlace : public Environment {
 public:
  static constexpr int kNumViews = 3;

  explicit ToyReachGraspPlace(const ToyEnvConfig& config = {});

  int proprio_dim() const override { return 3; }
  int action_dim() const override { return 3; }
  int horizon() const override { return config_.horizon; }
  EnvObservation Reset(std::uint64_t randomization_seed) override;
  bool Step(std::span<const double> action, EnvObservation* observation) override;
  bool Success() const override { return success_; }
  Image Render() const override;

  // Closed-loop scripted controller using privileged state.
  std::vector<double> ExpertAction() const;

  Point2D object() const { return object_; }
  Point2D gripper() const { return gripper_; }
  double aperture() const { return aperture_; }
  bool holding() const { return holding_; }
  int steps() const { return steps_; }
  const ToyEnvConfig& config() const { return config_; }

 private:
  EnvObservation Current() const;

  ToyEnvConfig config_;
  Point2D gripper_;
  Point2D object_;
  double aperture_ = 1.0;
  bool holding_ = false;
  bool success_ = false;
  int steps_ = 0;
};

std::unique_ptr<Environment> ToyEnvReachGraspPlace(int view = 0);

// Adds i.i.d. N(0, sigma^2) noise to every dimension.
std::vector<double> AddActionNoise(std::span<const double> action, double sigma, std::mt19937_64& rng);
std::vector<double> AddActionNoise(std::span<const double> action, double sigma, std::uint64_t seed);

struct DemoStep {
  Observation observation;
  std::vector<double> action;
};
using Demonstration = std::vector<DemoStep>;

// Rolls out the scripted expert for each seed and records encoded
// observations with the expert's actions. With execution_noise > 0 the
// executed action is perturbed while the recorded label stays clean, which
// puts off-trajectory states into the demonstrations.
std::vector<Demonstration> CollectExpertDemos(int view, std::span<const std::uint64_t> seeds,
                                              const FrozenEncoder& encoder, const ToyEnvConfig& config = {},
                                              double execution_noise = 0.0);

using ActFn = std::function<std::vector<double>(const EnvObservation&)>;

// Percentage of successful episodes. Episode i resets with reset_seeds[i]
// and draws action noise from noise_seeds[i].
double SuccessRate(Environment& env, const ActFn& act, std::span<const std::uint64_t> reset_seeds,
                   std::span<const std::uint64_t> noise_seeds, double sigma);

struct ProtocolConfig {
  int total_steps = 20000;
  int eval_every = 1000;
  int rollouts = 50;
  int num_views = 3;
  int num_seeds = 3;
  double action_noise = 0.05;
  std::uint64_t base_seed = 0;

  int num_evals() const { return total_steps / eval_every; }
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ProtocolConfig FromJson(const nlohmann::json& j);
};

// Receives training calls for one (view, seed) run at a time.
class PolicyTrainer {
 public:
  virtual ~PolicyTrainer() = default;
  virtual void Begin(int view, int seed_index, std::uint64_t seed) = 0;
  virtual void Train(int steps) = 0;
  virtual std::vector<double> Act(const EnvObservation& observation) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>(int view)>;

struct RunReport {
  int view = 0;
  int seed_index = 0;
  std::vector<int> eval_steps;
  std::vector<double> rates;
  double best = 0.0;
};

struct ProtocolReport {
  std::vector<RunReport> runs;
  double final_score = 0.0;
  nlohmann::ordered_json config;

  nlohmann::ordered_json ToJson() const;
  static ProtocolReport FromJson(const nlohmann::json& j);
};

// Fills in best-of-run and the mean of run bests from logged rates.
void Aggregate(ProtocolReport& report);

ProtocolReport RunProtocol(PolicyTrainer& trainer, const EnvFactory& make_env, const ProtocolConfig& config);

}  // namespace graspprior::policy
