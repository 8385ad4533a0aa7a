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

#include "graspprior/prior_model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "graspprior/error.h"
#include "graspprior/synth.h"

namespace graspprior::prior {
namespace {

PriorModelConfig SmallModel(HandHeadMode mode = HandHeadMode::kTokens) {
  PriorModelConfig c;
  c.image_size = 64;
  c.embedding_dim = 32;
  c.memory_tokens = 2;
  c.decoder_layers = 1;
  c.decoder_heads = 2;
  c.vit_layers = 1;
  c.vit_heads = 2;
  c.loss.bins_x = 20;
  c.loss.bins_y = 16;
  c.loss.num_codebooks = 3;
  c.loss.codebook_size = 16;
  c.loss.hand_mode = mode;
  return c;
}

TrainPriorConfig SmallTraining(int steps) {
  TrainPriorConfig t;
  t.steps = steps;
  t.batch_size = 4;
  t.lr = 1e-3;
  t.seed = 9;
  return t;
}

std::vector<PredictionSample> Samples(int n) {
  const auto poses = synth::GeneratePoseCorpus({.num_prototypes = 5, .noise_scale = 0.02, .corpus_size = 50, .seed = 1});
  synth::SynthPriorSpec spec;
  spec.image_size = 64;
  spec.min_radius = 6;
  spec.max_radius = 12;
  spec.seed = 4;
  return synth::GeneratePriorDataset(spec, poses, n, [](const HandPose& p) {
    TokenSequence t;
    for (int k = 0; k < 3; ++k) t.tokens.push_back(static_cast<int>(std::abs(p.joints[3 + k]) * 1000) % 16);
    return t;
  });
}

std::vector<torch::Tensor> Snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

bool SameTensors(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

std::string TempPath(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

TEST(PriorConfigTest, JsonRoundTripAndValidation) {
  auto c = SmallModel(HandHeadMode::kRegression);
  c.encoder = EncoderKind::kVit;
  c.pooling = Pooling::kMean;
  const auto back = PriorModelConfig::FromJson(nlohmann::json::parse(c.ToJson().dump()));
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_THROW(PriorModelConfig::FromJson(nlohmann::json{{"encoder", "resnet"}}), Error);
  EXPECT_THROW(PriorModelConfig::FromJson(nlohmann::json{{"image_sz", 64}}), Error);
  auto bad = SmallModel();
  bad.image_size = 48;
  EXPECT_THROW(bad.Validate(), Error);
  EXPECT_THROW(TrainPriorConfig::FromJson(nlohmann::json{{"lr", -1.0}}), Error);
}

TEST(PriorModelTest, OutputShapesPerMode) {
  const auto samples = Samples(2);
  const Image* imgs[2] = {&samples[0].image, &samples[1].image};
  const auto x = ImagesToTensor(imgs, 64);
  for (auto encoder : {EncoderKind::kConv, EncoderKind::kVit}) {
    for (auto mode : {HandHeadMode::kTokens, HandHeadMode::kRegression, HandHeadMode::kOff}) {
      auto c = SmallModel(mode);
      c.encoder = encoder;
      PriorModel model(c);
      const auto out = model->forward(x);
      EXPECT_EQ(out.contact.sizes(), (std::vector<int64_t>{2, 2, 36}));
      if (mode == HandHeadMode::kTokens) EXPECT_EQ(out.hand.sizes(), (std::vector<int64_t>{2, 3, 16}));
      if (mode == HandHeadMode::kRegression) EXPECT_EQ(out.hand.sizes(), (std::vector<int64_t>{2, 63}));
      if (mode == HandHeadMode::kOff) EXPECT_FALSE(out.hand.defined());
    }
  }
  auto no_contact = SmallModel();
  no_contact.loss.contact_head = false;
  EXPECT_FALSE(PriorModel(no_contact)->forward(x).contact.defined());
}

TEST(PriorModelTest, ImageSizeMismatchThrows) {
  Image small(32, 32);
  const Image* imgs[1] = {&small};
  EXPECT_THROW(ImagesToTensor(imgs, 64), Error);
}

TEST(PriorModelTest, DecoderReadsOnlyTheEmbedding) {
  const auto samples = Samples(1);
  PriorModel model(SmallModel());
  model->eval();
  const Image* imgs[1] = {&samples[0].image};
  torch::NoGradGuard no_grad;
  const auto direct = ToDecoderOutput(model->forward(ImagesToTensor(imgs, 64)), 0);
  const auto staged = Decode(model, Encode(model, samples[0].image));
  ASSERT_EQ(direct.contact_logits.size(), staged.contact_logits.size());
  for (size_t i = 0; i < direct.contact_logits.size(); ++i) EXPECT_NEAR(direct.contact_logits[i], staged.contact_logits[i], 1e-5);
  for (size_t i = 0; i < direct.hand.size(); ++i) EXPECT_NEAR(direct.hand[i], staged.hand[i], 1e-5);
}

// The batched torch loss agrees with the per-sample double-precision loss.
TEST(PriorModelTest, BatchLossMatchesPerSampleReference) {
  const auto samples = Samples(4);
  for (auto mode : {HandHeadMode::kTokens, HandHeadMode::kRegression}) {
    auto c = SmallModel(mode);
    c.loss.lambda_hand = 0.7;
    PriorModel model(c);
    std::vector<const Image*> imgs;
    std::vector<const PredictionSample*> batch;
    for (const auto& s : samples) {
      imgs.push_back(&s.image);
      batch.push_back(&s);
    }
    torch::NoGradGuard no_grad;
    const auto out = model->forward(ImagesToTensor(imgs, 64));
    const auto loss = ComputeBatchLoss(out, batch, c.loss, 64, 64);
    double contact = 0.0, hand = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const auto terms = TotalLoss(samples[i], ToDecoderOutput(out, static_cast<long>(i)), c.loss);
      contact += terms.contact / samples.size();
      hand += terms.hand / samples.size();
    }
    EXPECT_NEAR(loss.contact.item<double>(), contact, 1e-4 * contact);
    EXPECT_NEAR(loss.hand.item<double>(), hand, 1e-4 * hand + 1e-7);
    EXPECT_NEAR(loss.total.item<double>(), contact + 0.7 * hand, 1e-4 * (contact + hand));
  }
}

TEST(PriorTrainingTest, RejectsEmptyAndUntokenizedData) {
  auto state = InitTraining(SmallModel(), SmallTraining(2));
  try {
    TrainPrior(state, {}, SmallTraining(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
  auto samples = Samples(3);
  samples[1].hand_tokens.reset();
  try {
    TrainPrior(state, samples, SmallTraining(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAnnotation);
  }
}

TEST(PriorTrainingTest, SameSeedSameLosses) {
  const auto samples = Samples(10);
  std::vector<std::string> a, b;
  auto s1 = InitTraining(SmallModel(), SmallTraining(5));
  TrainPrior(s1, samples, SmallTraining(5), [&](const LogRecord& r) { a.push_back(ToJsonLine(r)); });
  auto s2 = InitTraining(SmallModel(), SmallTraining(5));
  TrainPrior(s2, samples, SmallTraining(5), [&](const LogRecord& r) { b.push_back(ToJsonLine(r)); });
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(SameTensors(s1.model->parameters(), s2.model->parameters()));
}

TEST(PriorTrainingTest, LossDecreasesOnSmallSet) {
  const auto samples = Samples(8);
  auto cfg = SmallTraining(60);
  std::vector<LogRecord> log;
  auto state = InitTraining(SmallModel(), cfg);
  TrainPrior(state, samples, cfg, [&](const LogRecord& r) { log.push_back(r); });
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += log[i].total;
    last += log[log.size() - 1 - i].total;
  }
  EXPECT_LT(last, 0.8 * first);
}

TEST(PriorTrainingTest, ResumeMatchesUninterruptedRun) {
  const auto samples = Samples(10);
  const auto cfg = SmallTraining(6);
  std::vector<std::string> full;
  auto uninterrupted = InitTraining(SmallModel(), cfg);
  TrainPrior(uninterrupted, samples, cfg, [&](const LogRecord& r) { full.push_back(ToJsonLine(r)); });

  const auto path = TempPath("gp_prior_resume.pt");
  auto half = cfg;
  half.steps = 3;
  std::vector<std::string> resumed;
  auto first = InitTraining(SmallModel(), cfg);
  TrainPrior(first, samples, half, [&](const LogRecord& r) { resumed.push_back(ToJsonLine(r)); });
  SavePriorCheckpoint(first, cfg, path);
  auto second = LoadPriorCheckpoint(path, cfg);
  std::filesystem::remove(path);
  EXPECT_EQ(second.step, 3);
  TrainPrior(second, samples, cfg, [&](const LogRecord& r) { resumed.push_back(ToJsonLine(r)); });
  EXPECT_EQ(resumed, full);
  EXPECT_TRUE(SameTensors(second.model->parameters(), uninterrupted.model->parameters()));
}

TEST(PriorTrainingTest, PeriodicCheckpointsFire) {
  const auto samples = Samples(4);
  auto cfg = SmallTraining(5);
  cfg.checkpoint_every = 2;
  std::vector<int> steps;
  auto state = InitTraining(SmallModel(), cfg);
  TrainPrior(state, samples, cfg, {}, [&](const TrainState& s) { steps.push_back(s.step); });
  EXPECT_EQ(steps, (std::vector<int>{2, 4, 5}));
}

TEST(PriorTrainingTest, FrozenEncoderStaysBitIdentical) {
  const auto samples = Samples(6);
  auto cfg = SmallTraining(4);
  cfg.freeze_encoder = true;
  auto state = InitTraining(SmallModel(), cfg);
  const auto enc = Snapshot(state.model->encoder->parameters());
  const auto dec = Snapshot(state.model->decoder->parameters());
  TrainPrior(state, samples, cfg);
  EXPECT_TRUE(SameTensors(enc, state.model->encoder->parameters()));
  EXPECT_FALSE(SameTensors(dec, state.model->decoder->parameters()));
}

TEST(PriorTrainingTest, CheckpointLoadErrors) {
  EXPECT_THROW(LoadPriorModel(TempPath("gp_missing_checkpoint.pt")), Error);
  const auto path = TempPath("gp_model_only.pt");
  auto state = InitTraining(SmallModel(HandHeadMode::kRegression), SmallTraining(1));
  SavePriorCheckpoint(state, SmallTraining(1), path);
  auto model = LoadPriorModel(path);
  std::filesystem::remove(path);
  EXPECT_EQ(model->config().ToJson(), state.model->config().ToJson());
  EXPECT_TRUE(SameTensors(model->parameters(), state.model->parameters()));
}

TEST(LogRecordTest, JsonLineRoundTripsExactly) {
  const LogRecord r{12, 18.420680743952367, 0.1 + 0.2, 1e-300};
  const auto back = LogRecordFromJson(ToJsonLine(r));
  EXPECT_EQ(back.step, 12);
  EXPECT_EQ(back.contact, r.contact);
  EXPECT_EQ(back.hand, r.hand);
  EXPECT_EQ(back.total, r.total);
  EXPECT_EQ(ToJsonLine(r).substr(0, 17), "{\"step\":12,\"L_ct\"");
  EXPECT_THROW(LogRecordFromJson("{\"step\":1}"), Error);
}

TEST(PredictionTest, ModesProduceExpectedFields) {
  const auto samples = Samples(1);
  PriorModel tokens(SmallModel(HandHeadMode::kTokens));
  const auto p = PredictContactsAndPose(tokens, samples[0].image, nullptr);
  ASSERT_TRUE(p.tokens.has_value());
  EXPECT_EQ(p.tokens->tokens.size(), 3u);
  EXPECT_FALSE(p.hand_pose.has_value());
  for (const Point2D& q : {p.contact_points.first, p.contact_points.second}) {
    EXPECT_GT(q.x, 0.0);
    EXPECT_LT(q.x, 64.0);
  }
  PriorModel regression(SmallModel(HandHeadMode::kRegression));
  EXPECT_TRUE(PredictContactsAndPose(regression, samples[0].image, nullptr).hand_pose.has_value());
}

TEST(PredictionTest, MeanContactErrorMatchesPerSampleReference) {
  const auto samples = Samples(5);
  PriorModel model(SmallModel());
  double total = 0.0;
  for (const auto& s : samples) {
    const auto p = PredictContactsAndPose(model, s.image, nullptr);
    total += Distance(p.contact_points.first, s.contact_points.first) + Distance(p.contact_points.second, s.contact_points.second);
  }
  EXPECT_NEAR(MeanContactError(model, samples), total / (2.0 * samples.size() * 64.0), 1e-12);
}

TEST(AblationTest, AllConfigurationsTrainAndLogTheirTerms) {
  const auto samples = Samples(6);
  for (auto ablation : {Ablation::kFull, Ablation::kNoContact, Ablation::kNoHand, Ablation::kHandRegression}) {
    auto c = SmallModel();
    c.loss = ApplyAblation(c.loss, ablation);
    std::vector<LogRecord> log;
    auto state = InitTraining(c, SmallTraining(2));
    TrainPrior(state, samples, SmallTraining(2), [&](const LogRecord& r) { log.push_back(r); });
    ASSERT_EQ(log.size(), 2u) << ToString(ablation);
    EXPECT_EQ(log[0].contact > 0, ablation != Ablation::kNoContact) << ToString(ablation);
    EXPECT_EQ(log[0].hand > 0, ablation != Ablation::kNoHand) << ToString(ablation);
  }
  EXPECT_EQ(ApplyAblation({}, Ablation::kHandRegression).hand_mode, HandHeadMode::kRegression);
}

TEST(PriorFrozenEncoderTest, ResizesAndHashesParameters) {
  PriorModel model(SmallModel());
  PriorFrozenEncoder enc(model, "prior");
  EXPECT_EQ(enc.dim(), 32);
  const auto h = enc.ParameterHash();
  const auto f = enc.Encode(Image(100, 80));
  EXPECT_EQ(f.size(), 32u);
  EXPECT_EQ(enc.ParameterHash(), h);
  {
    torch::NoGradGuard no_grad;
    model->encoder->parameters()[0].add_(1.0);
  }
  EXPECT_NE(enc.ParameterHash(), h);
}

}  // namespace
}  // namespace graspprior::prior
