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

#include "graspprior/policy.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/seeding.h"

namespace graspprior::policy {

std::vector<float> PooledPixelEncoder::Encode(const Image& image) const {
  if (image.width < grid_ || image.height < grid_) throw Error(ErrorCode::kShapeMismatch, "image smaller than the pooling grid");
  std::vector<float> out(dim(), 0.0f);
  std::vector<int> counts(grid_ * grid_, 0);
  for (int y = 0; y < image.height; ++y) {
    const int gy = y * grid_ / image.height;
    for (int x = 0; x < image.width; ++x) {
      const int gx = x * grid_ / image.width;
      const auto px = image.pixel(x, y);
      const int cell = gy * grid_ + gx;
      ++counts[cell];
      for (int c = 0; c < 3; ++c) out[cell * 3 + c] += px[c];
    }
  }
  for (int cell = 0; cell < grid_ * grid_; ++cell) {
    for (int c = 0; c < 3; ++c) out[cell * 3 + c] /= 255.0f * counts[cell];
  }
  return out;
}

std::uint64_t PooledPixelEncoder::ParameterHash() const { return HashString(name()); }

Observation Observe(const EnvObservation& raw, const FrozenEncoder& encoder) {
  Observation obs;
  obs.visual_features = encoder.Encode(raw.image);
  obs.proprio.assign(raw.proprio.begin(), raw.proprio.end());
  return obs;
}

namespace {

constexpr std::array<std::uint8_t, 3> kBackground{200, 200, 190};
constexpr std::array<std::uint8_t, 3> kGoal{150, 220, 150};
constexpr std::array<std::uint8_t, 3> kObject{210, 50, 40};
constexpr std::array<std::uint8_t, 3> kGripper{40, 60, 200};

// World to pixel coordinates for each camera view.
Point2D ViewTransform(int view, Point2D p, int size) {
  switch (view) {
    case 1: return {(1.0 - p.y) * size, p.x * size};
    case 2: return {(0.1 + 0.8 * p.x) * size, (0.15 + 0.8 * p.y) * size};
    default: return {p.x * size, p.y * size};
  }
}

double ViewScale(int view) { return view == 2 ? 0.8 : 1.0; }

void FillDisk(Image& image, Point2D c, double r, std::array<std::uint8_t, 3> color) {
  for (int y = std::max(0, static_cast<int>(c.y - r - 1)); y < std::min(image.height, static_cast<int>(c.y + r + 2)); ++y) {
    for (int x = std::max(0, static_cast<int>(c.x - r - 1)); x < std::min(image.width, static_cast<int>(c.x + r + 2)); ++x) {
      if (std::hypot(x + 0.5 - c.x, y + 0.5 - c.y) <= r) image.Set(x, y, color);
    }
  }
}

double Clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

ToyReachGraspPlace::ToyReachGraspPlace(const ToyEnvConfig& config) : config_(config) {
  if (config.view < 0 || config.view >= kNumViews) throw Error(ErrorCode::kInvalidConfig, "toy env view must be 0, 1 or 2");
  if (config.image_size < 16 || config.horizon < 1) throw Error(ErrorCode::kInvalidConfig, "invalid toy env size or horizon");
  gripper_ = config.gripper_start;
  object_ = {config.object_min, config.object_min};
}

EnvObservation ToyReachGraspPlace::Reset(std::uint64_t randomization_seed) {
  std::mt19937_64 rng(randomization_seed);
  std::uniform_real_distribution<double> pos(config_.object_min, config_.object_max);
  object_.x = pos(rng);
  object_.y = pos(rng);
  gripper_ = config_.gripper_start;
  aperture_ = 1.0;
  holding_ = false;
  success_ = false;
  steps_ = 0;
  return Current();
}

bool ToyReachGraspPlace::Step(std::span<const double> action, EnvObservation* observation) {
  if (static_cast<int>(action.size()) != action_dim()) throw Error(ErrorCode::kDimensionMismatch, "toy env expects 3 actions");
  for (double a : action) {
    if (!std::isfinite(a)) throw Error(ErrorCode::kNonFiniteInput, "non-finite action");
  }
  if (success_ || steps_ >= config_.horizon) throw Error(ErrorCode::kEnvironment, "step after episode end");
  gripper_.x = Clamp01(gripper_.x + config_.step_size * std::clamp(action[0], -1.0, 1.0));
  gripper_.y = Clamp01(gripper_.y + config_.step_size * std::clamp(action[1], -1.0, 1.0));
  aperture_ = Clamp01(0.5 * (std::clamp(action[2], -1.0, 1.0) + 1.0));
  const bool closed = aperture_ < 0.3;
  holding_ = closed && (holding_ || Distance(gripper_, object_) < config_.grasp_radius);
  if (holding_) object_ = gripper_;
  success_ = !holding_ && Distance(object_, config_.goal) < config_.goal_radius;
  ++steps_;
  if (observation) *observation = Current();
  return success_ || steps_ >= config_.horizon;
}

Image ToyReachGraspPlace::Render() const {
  const int size = config_.image_size;
  const double px = size * ViewScale(config_.view);
  Image image(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) image.Set(x, y, kBackground);
  FillDisk(image, ViewTransform(config_.view, config_.goal, size), config_.goal_radius * px, kGoal);
  FillDisk(image, ViewTransform(config_.view, object_, size), config_.object_radius * px, kObject);
  // Two fingertips whose separation shows the aperture.
  const double half = (0.01 + 0.03 * aperture_);
  for (double side : {-1.0, 1.0}) {
    const Point2D tip{gripper_.x + side * half, gripper_.y};
    FillDisk(image, ViewTransform(config_.view, tip, size), 0.02 * px, kGripper);
  }
  return image;
}

EnvObservation ToyReachGraspPlace::Current() const {
  return {Render(), {gripper_.x, gripper_.y, aperture_}};
}

std::vector<double> ToyReachGraspPlace::ExpertAction() const {
  const Point2D target = holding_ ? config_.goal : object_;
  const double dx = target.x - gripper_.x;
  const double dy = target.y - gripper_.y;
  const double dist = std::hypot(dx, dy);
  double grip = 1.0;
  if (holding_) {
    grip = dist < 0.5 * config_.goal_radius ? 1.0 : -1.0;
  } else {
    grip = dist < 0.25 * config_.grasp_radius ? -1.0 : 1.0;
  }
  return {std::clamp(dx / config_.step_size, -1.0, 1.0), std::clamp(dy / config_.step_size, -1.0, 1.0), grip};
}

std::unique_ptr<Environment> ToyEnvReachGraspPlace(int view) {
  ToyEnvConfig config;
  config.view = view;
  return std::make_unique<ToyReachGraspPlace>(config);
}

std::vector<double> AddActionNoise(std::span<const double> action, double sigma, std::mt19937_64& rng) {
  if (!(sigma >= 0)) throw Error(ErrorCode::kOutOfRange, "sigma must be >= 0");
  std::vector<double> out(action.begin(), action.end());
  if (sigma == 0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& a : out) a += noise(rng);
  return out;
}

std::vector<double> AddActionNoise(std::span<const double> action, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return AddActionNoise(action, sigma, rng);
}

std::vector<Demonstration> CollectExpertDemos(int view, std::span<const std::uint64_t> seeds,
                                              const FrozenEncoder& encoder, const ToyEnvConfig& base,
                                              double execution_noise) {
  ToyEnvConfig config = base;
  config.view = view;
  ToyReachGraspPlace env(config);
  std::vector<Demonstration> demos;
  for (std::uint64_t seed : seeds) {
    Demonstration demo;
    EnvObservation obs = env.Reset(seed);
    std::mt19937_64 rng(DeriveSeed(seed, {3}));
    bool done = false;
    while (!done) {
      std::vector<double> action = env.ExpertAction();
      demo.push_back({Observe(obs, encoder), action});
      done = env.Step(AddActionNoise(action, execution_noise, rng), &obs);
    }
    if (!env.Success()) throw Error(ErrorCode::kEnvironment, "scripted expert failed on seed " + std::to_string(seed));
    demos.push_back(std::move(demo));
  }
  return demos;
}

double SuccessRate(Environment& env, const ActFn& act, std::span<const std::uint64_t> reset_seeds,
                   std::span<const std::uint64_t> noise_seeds, double sigma) {
  if (reset_seeds.size() != noise_seeds.size()) throw Error(ErrorCode::kDimensionMismatch, "seed lists differ in length");
  if (reset_seeds.empty()) return 0.0;
  int successes = 0;
  for (size_t i = 0; i < reset_seeds.size(); ++i) {
    std::mt19937_64 rng(noise_seeds[i]);
    EnvObservation obs = env.Reset(reset_seeds[i]);
    bool done = false;
    while (!done) {
      const std::vector<double> action = AddActionNoise(act(obs), sigma, rng);
      done = env.Step(action, &obs);
    }
    successes += env.Success();
  }
  return 100.0 * successes / static_cast<double>(reset_seeds.size());
}

void ProtocolConfig::Validate() const {
  if (total_steps < 1 || eval_every < 1 || total_steps % eval_every != 0) {
    throw Error(ErrorCode::kInvalidConfig, "total_steps must be a positive multiple of eval_every");
  }
  if (rollouts < 1 || num_views < 1 || num_seeds < 1) throw Error(ErrorCode::kInvalidConfig, "protocol counts must be >= 1");
  if (!(action_noise >= 0)) throw Error(ErrorCode::kInvalidConfig, "action_noise must be >= 0");
}

nlohmann::ordered_json ProtocolConfig::ToJson() const {
  return {{"total_steps", total_steps}, {"eval_every", eval_every}, {"rollouts", rollouts},
          {"num_views", num_views},     {"num_seeds", num_seeds},   {"action_noise", action_noise},
          {"base_seed", base_seed}};
}

ProtocolConfig ProtocolConfig::FromJson(const nlohmann::json& j) {
  ProtocolConfig c;
  RejectUnknownKeys(j, c.ToJson(), "protocol");
  if (j.is_null()) return c;
  c.total_steps = j.value("total_steps", c.total_steps);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.rollouts = j.value("rollouts", c.rollouts);
  c.num_views = j.value("num_views", c.num_views);
  c.num_seeds = j.value("num_seeds", c.num_seeds);
  c.action_noise = j.value("action_noise", c.action_noise);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.Validate();
  return c;
}

nlohmann::ordered_json ProtocolReport::ToJson() const {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    j["runs"].push_back({{"view", r.view}, {"seed_index", r.seed_index}, {"eval_steps", r.eval_steps},
                         {"rates", r.rates}, {"best", r.best}});
  }
  j["final_score"] = final_score;
  return j;
}

ProtocolReport ProtocolReport::FromJson(const nlohmann::json& j) {
  ProtocolReport report;
  try {
    if (j.contains("config")) report.config = j.at("config");
    for (const auto& r : j.at("runs")) {
      RunReport run;
      run.view = r.at("view").get<int>();
      run.seed_index = r.at("seed_index").get<int>();
      run.eval_steps = r.at("eval_steps").get<std::vector<int>>();
      run.rates = r.at("rates").get<std::vector<double>>();
      if (run.eval_steps.size() != run.rates.size()) throw Error(ErrorCode::kIo, "eval_steps and rates differ in length");
      report.runs.push_back(std::move(run));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed protocol report: ") + e.what());
  }
  Aggregate(report);
  return report;
}

void Aggregate(ProtocolReport& report) {
  double sum = 0.0;
  for (auto& run : report.runs) {
    run.best = run.rates.empty() ? 0.0 : *std::max_element(run.rates.begin(), run.rates.end());
    sum += run.best;
  }
  report.final_score = report.runs.empty() ? 0.0 : sum / static_cast<double>(report.runs.size());
}

ProtocolReport RunProtocol(PolicyTrainer& trainer, const EnvFactory& make_env, const ProtocolConfig& config) {
  config.Validate();
  ProtocolReport report;
  report.config = config.ToJson();
  for (int view = 0; view < config.num_views; ++view) {
    for (int s = 0; s < config.num_seeds; ++s) {
      auto env = make_env(view);
      RunReport run;
      run.view = view;
      run.seed_index = s;
      trainer.Begin(view, s, DeriveSeed(config.base_seed, {static_cast<std::uint64_t>(view), static_cast<std::uint64_t>(s)}));
      for (int e = 0; e < config.num_evals(); ++e) {
        trainer.Train(config.eval_every);
        std::vector<std::uint64_t> reset_seeds, noise_seeds;
        for (int r = 0; r < config.rollouts; ++r) {
          const std::uint64_t v = view, sd = s, ev = e, ro = r;
          reset_seeds.push_back(DeriveSeed(config.base_seed, {v, sd, ev, ro, 0}));
          noise_seeds.push_back(DeriveSeed(config.base_seed, {v, sd, ev, ro, 1}));
        }
        try {
          run.rates.push_back(SuccessRate(
              *env, [&](const EnvObservation& o) { return trainer.Act(o); }, reset_seeds, noise_seeds,
              config.action_noise));
        } catch (const Error& err) {
          throw Error(err.code(), "run (view " + std::to_string(view) + ", seed " + std::to_string(s) + ", eval " +
                                      std::to_string(e) + "): " + err.what());
        }
        run.eval_steps.push_back((e + 1) * config.eval_every);
      }
      report.runs.push_back(std::move(run));
    }
  }
  Aggregate(report);
  return report;
}

}  // namespace graspprior::policy
