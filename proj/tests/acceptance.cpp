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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Tolerances and budgets are pinned below.

#include <torch/torch.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graspprior/bc.h"
#include "graspprior/commands.h"
#include "graspprior/extraction.h"
#include "graspprior/geometry.h"
#include "graspprior/heatmap.h"
#include "graspprior/policy.h"
#include "graspprior/prior_losses.h"
#include "graspprior/prior_model.h"
#include "graspprior/seeding.h"
#include "graspprior/synth.h"
#include "graspprior/tokenizer.h"
#include "test_util.h"

namespace graspprior {
namespace {

namespace fs = std::filesystem;

// Criterion 1.
constexpr int kMorphMasks = 100;
constexpr int kMorphSize = 64;
constexpr double kMorphBudgetSeconds = 30;
// Criterion 2.
constexpr int kMetricPairs = 100;
constexpr double kMetricTolerance = 1e-12;
constexpr double kMetricBudgetSeconds = 10;
// Criterion 3.
constexpr double kUniformLossTolerance = 1e-6;
constexpr double kGradientRelativeTolerance = 1e-4;
constexpr int kGradientSamples = 20;
// Criterion 4.
constexpr int kExtractionSequences = 20;
constexpr double kExtractionBudgetSeconds = 120;
// Criterion 5.
constexpr double kTokenizerErrorBound = 0.04;
constexpr double kTokenizerBudgetSeconds = 600;
// Criterion 6.
constexpr int kPriorSamples = 2000;
constexpr int kPriorHeldOut = 400;
constexpr int kPriorSteps = 3000;
constexpr double kPriorLr = 1e-3;
constexpr double kTrainedErrorBound = 0.10;
constexpr double kUntrainedErrorFloor = 0.35;
constexpr int kAblationSteps = 20;
// Criterion 8.
constexpr int kBcDemos = 25;
constexpr int kBcSteps = 5000;
constexpr int kBcRollouts = 200;
constexpr double kBcSuccessBound = 80.0;
constexpr double kRandomSuccessBound = 5.0;
constexpr double kBcBudgetSeconds = 900;

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void Report(int number, const std::string& name, const Outcome& outcome, double seconds) {
  std::printf("criterion %d %-28s %s  %s [%.1f s]\n", number, name.c_str(), outcome.pass ? "PASS" : "FAIL",
              outcome.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!outcome.pass) ++failures;
}

// Numeric fields only; append strings to the result.
std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Morphology against breadth-first L1 distances.

// Exact 4-neighbor BFS distance to the nearest pixel where `source` holds.
std::vector<int> BfsDistance(const geometry::BinaryMask& m, bool source) {
  const int w = m.width(), h = m.height();
  std::vector<int> dist(static_cast<size_t>(w) * h, std::numeric_limits<int>::max());
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (m.at(x, y) == source) {
        dist[y * w + x] = 0;
        queue.push_back({x, y});
      }
    }
  }
  constexpr int kDx[] = {1, -1, 0, 0}, kDy[] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || dist[ny * w + nx] != std::numeric_limits<int>::max()) continue;
      dist[ny * w + nx] = dist[y * w + x] + 1;
      queue.push_back({nx, ny});
    }
  }
  return dist;
}

Outcome MorphologyOracle() {
  std::mt19937_64 rng(101);
  int mismatches = 0, checks = 0;
  for (int i = 0; i < kMorphMasks; ++i) {
    const auto mask = testing::RandomBlob(kMorphSize, kMorphSize, rng, i % 2 ? 0.02 : 0.0);
    const auto to_fg = BfsDistance(mask, true);
    const auto to_bg = BfsDistance(mask, false);
    for (int k : {1, 12, 75}) {
      const auto eroded = geometry::Erode(mask, k, geometry::StructuringElement::kCross4);
      const auto dilated = geometry::Dilate(mask, k, geometry::StructuringElement::kCross4);
      for (int y = 0; y < kMorphSize; ++y) {
        for (int x = 0; x < kMorphSize; ++x) {
          // Pixels outside the raster count as background for erosion.
          const int border = std::min({x + 1, y + 1, kMorphSize - x, kMorphSize - y});
          const bool want_eroded = std::min(to_bg[y * kMorphSize + x], border) > k;
          const bool want_dilated = to_fg[y * kMorphSize + x] <= k;
          mismatches += eroded.at(x, y) != want_eroded;
          mismatches += dilated.at(x, y) != want_dilated;
          checks += 2;
        }
      }
    }
  }
  return {mismatches == 0, Fmt("%.0f mismatches over %.0f pixel checks", mismatches, checks)};
}

// ---------------------------------------------------------------------------
// 2. SIM and NSS against double-loop references.

double SimReference(const contact_eval::Heatmap& a, const contact_eval::Heatmap& b) {
  double sa = 0, sb = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      sa += a.at(x, y);
      sb += b.at(x, y);
    }
  if (sa == 0 || sb == 0) return 0;
  double total = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) total += std::min(a.at(x, y) / sa, b.at(x, y) / sb);
  return total;
}

double NssReference(const contact_eval::Heatmap& m, const contact_eval::Heatmap& fix) {
  const double n = static_cast<double>(m.width) * m.height;
  double mean = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) mean += m.at(x, y);
  mean /= n;
  double var = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) var += (m.at(x, y) - mean) * (m.at(x, y) - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0) return 0;
  double total = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (fix.at(x, y) > 0) total += (m.at(x, y) - mean) / sd;
  return total;
}

Outcome MetricOracle() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0, worst_property = 0;
  bool bounds = true;
  for (int i = 0; i < kMetricPairs; ++i) {
    contact_eval::Heatmap a(32, 32), b(32, 32), sparse(32, 32);
    for (double& v : a.values) v = u(rng) < 0.3 ? 0.0 : u(rng);
    for (double& v : b.values) v = u(rng) < 0.3 ? 0.0 : 5.0 * u(rng);
    for (double& v : sparse.values) v = u(rng) < 0.05 ? 1.0 : 0.0;
    const double sim = contact_eval::Sim(a, b);
    worst = std::max(worst, std::abs(sim - SimReference(a, b)));
    worst = std::max(worst, std::abs(contact_eval::Nss(a, sparse) - NssReference(a, sparse)));
    worst = std::max(worst, std::abs(contact_eval::Nss(b, sparse) - NssReference(b, sparse)));
    bounds = bounds && sim >= 0.0 && sim <= 1.0 + kMetricTolerance;
    worst_property = std::max(worst_property, std::abs(sim - contact_eval::Sim(b, a)));
    auto scaled = a;
    const double alpha = 0.1 + 10 * u(rng);
    for (double& v : scaled.values) v *= alpha;
    worst_property = std::max(worst_property, std::abs(sim - contact_eval::Sim(scaled, b)));
    bounds = bounds && std::abs(contact_eval::Sim(a, a) - 1.0) <= kMetricTolerance;
  }
  return {worst <= kMetricTolerance && worst_property <= kMetricTolerance && bounds,
          Fmt("max |impl - reference| %.2e, symmetry/scale %.2e, bounds ", worst, worst_property) +
              (bounds ? "ok" : "violated")};
}

// ---------------------------------------------------------------------------
// 3. Loss values at uniform logits and finite-difference gradients.

Outcome LossAnalytics() {
  const prior::LossConfig config;
  const auto zeros = prior::DecoderOutput::Zeros(config);
  const double contact = prior::ContactLoss(zeros, {{10.0, 20.0}, {30.0, 40.0}}, 64, 64, config);
  TokenSequence tokens;
  for (int k = 0; k < config.num_codebooks; ++k) tokens.tokens.push_back(k * 97 % config.codebook_size);
  const double hand = prior::HandLossTokens(zeros, tokens, config);
  const double contact_err = std::abs(contact - 4 * std::log(100.0));
  const double hand_err = std::abs(hand - 8 * std::log(1024.0));

  std::mt19937_64 rng(303);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel = 0;
  for (int trial = 0; trial < kGradientSamples; ++trial) {
    prior::LossConfig c;
    c.lambda_hand = 0.5 + u(rng);
    PredictionSample s;
    const int w = 64 + static_cast<int>(rng() % 100), h = 64 + static_cast<int>(rng() % 100);
    s.image = Image(w, h);
    s.contact_points = {{u(rng) * w, u(rng) * h}, {u(rng) * w, u(rng) * h}};
    TokenSequence t;
    for (int k = 0; k < c.num_codebooks; ++k) t.tokens.push_back(static_cast<int>(rng() % c.codebook_size));
    s.hand_tokens = t;
    auto out = prior::DecoderOutput::Zeros(c);
    for (double& v : out.contact_logits) v = n(rng);
    for (double& v : out.hand) v = n(rng);
    auto grad = prior::DecoderOutput::Zeros(c);
    prior::TotalLoss(s, out, c, &grad);
    auto check = [&](std::vector<double>& values, const std::vector<double>& analytic, size_t i) {
      constexpr double kStep = 1e-5;
      const double saved = values[i];
      values[i] = saved + kStep;
      const double up = prior::TotalLoss(s, out, c).total;
      values[i] = saved - kStep;
      const double down = prior::TotalLoss(s, out, c).total;
      values[i] = saved;
      const double fd = (up - down) / (2 * kStep);
      worst_rel = std::max(worst_rel, std::abs(fd - analytic[i]) / std::max(std::abs(analytic[i]), 1e-3));
    };
    for (size_t i = 0; i < out.contact_logits.size(); ++i) check(out.contact_logits, grad.contact_logits, i);
    for (int k = 0; k < c.num_codebooks; ++k) check(out.hand, grad.hand, k * c.codebook_size + t.tokens[k]);
    for (int i = 0; i < 200; ++i) check(out.hand, grad.hand, rng() % out.hand.size());
  }
  return {contact_err <= kUniformLossTolerance && hand_err <= kUniformLossTolerance &&
              worst_rel <= kGradientRelativeTolerance,
          Fmt("|L_ct - 4ln100| %.1e, |L_hand - 8ln1024| %.1e, worst gradient rel error %.1e", contact_err, hand_err,
              worst_rel)};
}

// ---------------------------------------------------------------------------
// 4. Extraction against generator ground truth.

Outcome ExtractionOracle() {
  const auto specs = synth::MakeApproachCorpus(
      {.count = kExtractionSequences, .timeout_every = 5, .degenerate_every = 7, .seed = 404});
  std::vector<extraction::VideoSource> sources;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto spec = specs[i];
    sources.push_back({std::to_string(i), [spec] {
                         return std::unique_ptr<extraction::PerceptionOracle>(synth::GenerateApproachSequence(spec));
                       }});
  }
  const auto result = extraction::BuildDataset(sources, {});
  std::map<std::string, std::vector<const extraction::ContactEvent*>> by_video;
  for (const auto& e : result.events) by_video[e.video_id].push_back(&e);
  int matched = 0, rejected = 0;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto truth = synth::GenerateApproachSequence(specs[i])->ground_truth();
    const auto& events = by_video[std::to_string(i)];
    if (events.size() != 1) continue;
    const auto& e = *events[0];
    bool ok = e.contact_frame == truth.contact_frame && e.status == truth.status;
    if (truth.status == extraction::EventStatus::kOk) {
      ok = ok && e.prediction_frame == truth.prediction_frame &&
           e.contact_points_prediction_frame == truth.contact_points_prediction_frame;
    } else {
      ++rejected;
    }
    matched += ok;
  }
  return {matched == kExtractionSequences && result.failures.empty() && rejected > 0,
          Fmt("%.0f/%.0f sequences match (%.0f constructed rejections)", matched, kExtractionSequences, rejected)};
}

// ---------------------------------------------------------------------------
// 5. Tokenizer learning.

struct TokenizerFixture {
  synth::PoseCorpus train, held;
  tokenizer::TrainTokenizerResult result;
};

Outcome TokenizerLearning(TokenizerFixture& f) {
  f.train = synth::GeneratePoseCorpus({.num_prototypes = 50, .noise_scale = 0.02, .corpus_size = 5000, .seed = 505});
  f.held = synth::GeneratePoseCorpus(
      {.num_prototypes = 50, .noise_scale = 0.02, .corpus_size = 1000, .seed = 505, .sample_stream = 1});
  tokenizer::TokenizerConfig config;
  config.seed = 505;
  f.result = tokenizer::TrainTokenizer(f.train.poses, config);
  const double error = tokenizer::ReconstructionError(f.result.model, f.held.poses);
  double floor = 0;
  for (size_t i = 0; i < f.held.poses.size(); ++i) {
    floor += MeanJointError(f.held.poses[i], f.held.prototypes[f.held.assignment[i]]);
  }
  floor /= f.held.poses.size();

  const auto batch = tokenizer::TokenizeAll(f.result.model, f.held.poses);
  int bad_range = 0, nondeterministic = 0;
  for (size_t i = 0; i < f.held.poses.size(); ++i) {
    for (int t : batch[i].tokens) bad_range += t < 0 || t >= config.codebook_size;
    bad_range += static_cast<int>(batch[i].tokens.size()) != config.num_codebooks;
    nondeterministic += !(tokenizer::Tokenize(f.result.model, f.held.poses[i]) == batch[i]);
  }
  return {error <= kTokenizerErrorBound && error <= 2 * floor && bad_range == 0 && nondeterministic == 0,
          Fmt("held-out error %.4f (bound %.2f, noise floor %.4f), %.0f range/determinism violations", error,
              kTokenizerErrorBound, floor, bad_range + nondeterministic)};
}

// ---------------------------------------------------------------------------
// 6. Prior learning and ablation runs.

Outcome PriorLearning(TokenizerFixture& tok) {
  const auto poses = synth::GeneratePoseCorpus({.num_prototypes = 50, .noise_scale = 0.02, .corpus_size = 1000, .seed = 606});
  const synth::TokenizeFn tokenize = [&](const HandPose& p) { return tokenizer::Tokenize(tok.result.model, p); };
  const auto all = synth::GeneratePriorDataset({.seed = 606}, poses, kPriorSamples, tokenize);
  const std::vector<PredictionSample> train(all.begin(), all.end() - kPriorHeldOut), held(all.end() - kPriorHeldOut, all.end());

  prior::PriorModelConfig model;
  prior::TrainPriorConfig training;
  training.steps = kPriorSteps;
  training.lr = kPriorLr;
  training.seed = 606;
  auto state = prior::InitTraining(model, training);
  const double untrained = prior::MeanContactError(state.model, held);
  prior::TrainPrior(state, train, training);
  const double trained = prior::MeanContactError(state.model, held);

  // Each ablation logs finite values for its active terms and zero for the
  // disabled ones.
  bool ablations_ok = true;
  std::string ablation_detail;
  for (auto ablation : {prior::Ablation::kFull, prior::Ablation::kNoContact, prior::Ablation::kNoHand,
                        prior::Ablation::kHandRegression}) {
    auto m = model;
    m.loss = prior::ApplyAblation(m.loss, ablation);
    auto t = training;
    t.steps = kAblationSteps;
    auto s = prior::InitTraining(m, t);
    std::vector<prior::LogRecord> log;
    prior::TrainPrior(s, train, t, [&](const prior::LogRecord& r) { log.push_back(r); });
    bool ok = static_cast<int>(log.size()) == kAblationSteps;
    for (const auto& r : log) {
      ok = ok && std::isfinite(r.contact) && std::isfinite(r.hand) && std::isfinite(r.total);
      ok = ok && (m.loss.contact_head ? r.contact > 0 : r.contact == 0);
      ok = ok && (m.loss.hand_mode != prior::HandHeadMode::kOff ? r.hand > 0 : r.hand == 0);
    }
    ablations_ok = ablations_ok && ok;
    ablation_detail += " " + prior::ToString(ablation) + (ok ? ":ok" : ":bad");
  }
  return {trained <= kTrainedErrorBound && untrained >= kUntrainedErrorFloor && ablations_ok,
          Fmt("held-out error %.4f (bound %.2f), untrained %.4f (floor %.2f), ablations", trained, kTrainedErrorBound,
              untrained, kUntrainedErrorFloor) +
              ablation_detail};
}

// ---------------------------------------------------------------------------
// 7. Protocol bookkeeping.

// One step per episode; succeeds when the first action entry exceeds 0.5.
class StubEnv : public policy::Environment {
 public:
  int proprio_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  int horizon() const override { return 1; }
  policy::EnvObservation Reset(std::uint64_t seed) override {
    success_ = false;
    return {Image(1, 1), {static_cast<double>(seed % 1000)}};
  }
  bool Step(std::span<const double> action, policy::EnvObservation*) override {
    success_ = action[0] > 0.5;
    return true;
  }
  bool Success() const override { return success_; }
  Image Render() const override { return Image(1, 1); }

 private:
  bool success_ = false;
};

// Succeeds on the first `k` rollouts of each evaluation, k from a table.
class ScriptedTrainer : public policy::PolicyTrainer {
 public:
  explicit ScriptedTrainer(std::function<int(int view, int seed, int eval)> k) : k_(std::move(k)) {}
  void Begin(int view, int seed_index, std::uint64_t) override {
    view_ = view;
    seed_ = seed_index;
    eval_ = -1;
  }
  void Train(int) override {
    ++eval_;
    calls_ = 0;
  }
  std::vector<double> Act(const policy::EnvObservation&) override {
    return {calls_++ < k_(view_, seed_, eval_) ? 1.0 : 0.0};
  }

 private:
  std::function<int(int, int, int)> k_;
  int view_ = 0, seed_ = 0, eval_ = -1, calls_ = 0;
};

Outcome ProtocolBookkeeping() {
  policy::ProtocolConfig config;
  config.action_noise = 0.0;
  auto successes = [](int v, int s, int e) { return e == 11 ? 20 + 2 * v + 3 * s : (5 * e + v + s) % 20; };
  ScriptedTrainer trainer(successes);
  const policy::EnvFactory stub = [](int) { return std::make_unique<StubEnv>(); };
  const auto report = policy::RunProtocol(trainer, stub, config);
  double hand_mean = 0;
  bool exact = report.runs.size() == 9;
  for (const auto& run : report.runs) {
    double best = 0;
    for (int e = 0; e < 20; ++e) {
      const double rate = 100.0 * successes(run.view, run.seed_index, e) / config.rollouts;
      exact = exact && run.rates[e] == rate;
      best = std::max(best, rate);
    }
    exact = exact && run.best == best;
    hand_mean += best;
  }
  hand_mean /= 9;
  exact = exact && report.final_score == hand_mean;

  ScriptedTrainer again(successes);
  const bool identical_stub = policy::RunProtocol(again, stub, config).ToJson().dump() == report.ToJson().dump();

  // Real environment, deterministic trained policy, reduced schedule.
  policy::ProtocolConfig small;
  small.total_steps = 40;
  small.eval_every = 20;
  small.rollouts = 3;
  small.action_noise = 0.0;
  small.base_seed = 7;
  policy::BcConfig bc;
  bc.num_demos = 2;
  bc.hidden = 32;
  const policy::PooledPixelEncoder encoder;
  auto run = [&] {
    policy::BcTrainer t(encoder, policy::ToyExpertDemos(encoder, bc.num_demos, bc.demo_noise), bc);
    return policy::RunProtocol(t, [](int v) { return policy::ToyEnvReachGraspPlace(v); }, small).ToJson().dump();
  };
  const bool identical_env = run() == run();
  return {exact && identical_stub && identical_env,
          Fmt("final score %.4f vs hand %.4f, stub reruns ", report.final_score, hand_mean) +
              (identical_stub ? "identical" : "differ") + ", toy-env reruns " +
              (identical_env ? "identical" : "differ")};
}

// ---------------------------------------------------------------------------
// 8. Behavior cloning on the toy environment.

Outcome ToyBc() {
  const int view = 0;
  const policy::PooledPixelEncoder encoder;
  policy::BcConfig config;
  config.num_demos = kBcDemos;
  const auto demos = policy::ToyExpertDemos(encoder, kBcDemos, config.demo_noise)(view, 808);
  policy::BcLearner learner(policy::BcDataset::FromDemos(demos), config, 808);
  learner.Train(kBcSteps);

  std::vector<std::uint64_t> reset_seeds, noise_seeds;
  for (int i = 0; i < kBcRollouts; ++i) {
    reset_seeds.push_back(DeriveSeed(809, {static_cast<std::uint64_t>(i)}));
    noise_seeds.push_back(DeriveSeed(810, {static_cast<std::uint64_t>(i)}));
  }
  const double sigma = policy::ProtocolConfig{}.action_noise;
  auto env = policy::ToyEnvReachGraspPlace(view);
  const double bc_rate = policy::SuccessRate(
      *env, [&](const policy::EnvObservation& o) { return learner.policy()->Act(policy::Observe(o, encoder)); },
      reset_seeds, noise_seeds, sigma);
  std::mt19937_64 rng(811);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double random_rate = policy::SuccessRate(
      *env, [&](const policy::EnvObservation&) { return std::vector<double>{u(rng), u(rng), u(rng)}; }, reset_seeds,
      noise_seeds, sigma);
  return {bc_rate >= kBcSuccessBound && random_rate < kRandomSuccessBound,
          Fmt("BC success %.1f%% (bound %.0f%%), random %.1f%% (bound < %.0f%%)", bc_rate, kBcSuccessBound,
              random_rate, kRandomSuccessBound)};
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism through the command layer.

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void RunPipeline(const fs::path& root) {
  auto global = [&](const std::string& out) {
    cli::GlobalOptions g;
    g.seed = 909;
    g.seed_given = true;
    g.out_dir = (root / out).string();
    g.log_level = "off";
    cli::ApplyGlobalOptions(g);
    return g;
  };
  auto extract = global("extract");
  extract.overrides = {"corpus.count=16", "corpus.timeout_every=5"};
  cli::RunExtract(extract, {});

  auto tok = global("tokenizer");
  tok.config = nlohmann::json::parse(R"({"tokenizer": {"num_codebooks": 4, "codebook_size": 32, "steps": 300}})");
  cli::RunTrainTokenizer(tok, {(root / "extract" / "manifest.jsonl").string()});

  auto prior = global("prior");
  prior.config = nlohmann::json::parse(R"({
    "model": {"embedding_dim": 32, "memory_tokens": 2, "decoder_layers": 1, "decoder_heads": 2,
              "bins_x": 32, "bins_y": 32, "num_codebooks": 4, "codebook_size": 32},
    "train": {"steps": 20, "batch_size": 8, "checkpoint_every": 10, "lr": 1e-3}})");
  cli::TrainPriorOptions prior_options;
  prior_options.manifest = (root / "tokenizer" / "manifest.jsonl").string();
  prior_options.tokenizer = (root / "tokenizer" / "tokenizer.pt").string();
  cli::RunTrainPrior(prior, prior_options);

  auto eval = global("eval");
  eval.config = nlohmann::json::parse(R"({"cvae": {"iterations": 60, "eval_every": 20, "batch_size": 16}})");
  cli::EvalContactOptions eval_options;
  eval_options.manifest = (root / "tokenizer" / "manifest.jsonl").string();
  eval_options.checkpoint = (root / "prior" / "prior.pt").string();
  cli::RunEvalContact(eval, eval_options);
}

Outcome EndToEndDeterminism() {
  const fs::path root = fs::temp_directory_path() / "graspprior_acceptance_e2e";
  fs::remove_all(root);
  RunPipeline(root / "a");
  RunPipeline(root / "b");
  const std::vector<std::string> files = {
      "extract/manifest.jsonl",    "tokenizer/manifest.jsonl", "tokenizer/tokenizer_log.jsonl",
      "prior/train_log.jsonl",     "prior/prior_summary.json", "eval/eval_history.jsonl",
      "eval/eval_records.jsonl",   "eval/eval_summary.json"};
  int differing = 0;
  std::string first;
  for (const auto& f : files) {
    const std::string a = Slurp(root / "a" / f);
    if (a.empty() || a != Slurp(root / "b" / f)) {
      ++differing;
      if (first.empty()) first = " first: " + f;
    }
  }
  for (const auto& entry : fs::directory_iterator(root / "a" / "extract" / "images")) {
    if (Slurp(entry.path()) != Slurp(root / "b" / "extract" / "images" / entry.path().filename())) ++differing;
  }
  const std::string manifest = Slurp(root / "a" / "extract" / "manifest.jsonl");
  const auto samples = std::count(manifest.begin(), manifest.end(), '\n');
  fs::remove_all(root);
  return {differing == 0 && samples > 0,
          Fmt("%.0f differing artifacts over two runs (%.0f samples)", differing, static_cast<double>(samples)) + first};
}

}  // namespace
}  // namespace graspprior

int main() {
  using namespace graspprior;
  torch::set_num_threads(1);
  auto run = [](int number, const std::string& name, const std::function<Outcome()>& body, double budget = 0) {
    Timer timer;
    Outcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = timer.seconds();
    if (budget > 0 && seconds > budget) {
      outcome.pass = false;
      outcome.detail += Fmt(" (over the %.0f s budget)", budget);
    }
    Report(number, name, outcome, seconds);
  };
  TokenizerFixture tokenizer_fixture;
  run(1, "morphology-oracle", MorphologyOracle, kMorphBudgetSeconds);
  run(2, "metric-oracle", MetricOracle, kMetricBudgetSeconds);
  run(3, "loss-analytics", LossAnalytics);
  run(4, "extraction-oracle", ExtractionOracle, kExtractionBudgetSeconds);
  run(5, "tokenizer-learning", [&] { return TokenizerLearning(tokenizer_fixture); }, kTokenizerBudgetSeconds);
  run(6, "prior-learning", [&] { return PriorLearning(tokenizer_fixture); });
  run(7, "protocol-bookkeeping", ProtocolBookkeeping);
  run(8, "toy-env-bc", ToyBc, kBcBudgetSeconds);
  run(9, "end-to-end-determinism", EndToEndDeterminism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
