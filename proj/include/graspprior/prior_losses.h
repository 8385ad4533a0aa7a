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

#include <span>
#include <string>
#include <vector>

#include "graspprior/manifest.h"
#include "graspprior/types.h"

namespace graspprior::prior {

enum class HandHeadMode { kTokens, kRegression, kOff };

std::string ToString(HandHeadMode mode);
HandHeadMode HandHeadModeFromString(const std::string& name);

// floor(x / extent * bins), with x == extent mapped to bins - 1.
int BinCoordinate(double x, double extent, int bins);
// Center of `bin` in pixels.
double UnbinCoordinate(int bin, double extent, int bins);

struct LossConfig {
  int bins_x = 100;
  int bins_y = 100;
  int num_codebooks = 8;
  int codebook_size = 1024;
  HandHeadMode hand_mode = HandHeadMode::kTokens;
  bool contact_head = true;
  double lambda_hand = 1.0;

  // Throws kInvalidConfig when bins < 2 or every head is disabled.
  void Validate() const;
  int contact_width() const { return bins_x + bins_y; }
  int hand_width() const;  // 0 when the hand head is off
};

// Decoder logits for one sample.
//   contact_logits: 2 rows (thumb, index) of bins_x x-logits then bins_y y-logits.
//   hand: num_codebooks rows of codebook_size logits, or kPoseDim values.
struct DecoderOutput {
  std::vector<double> contact_logits;
  std::vector<double> hand;

  static DecoderOutput Zeros(const LossConfig& config);
};

// log-sum-exp(logits) - logits[target]. Writes d/dlogits into `grad` when it
// is non-empty (accumulating).
double SoftmaxCrossEntropy(std::span<const double> logits, int target, std::span<double> grad = {});

// Gradients are accumulated into `grad` when given; it must be shaped like
// `output` (see DecoderOutput::Zeros).
double ContactLoss(const DecoderOutput& output, const FingertipPair& targets, double width, double height,
                   const LossConfig& config, DecoderOutput* grad = nullptr);
double HandLossTokens(const DecoderOutput& output, const TokenSequence& targets, const LossConfig& config,
                      DecoderOutput* grad = nullptr);
double HandLossRegression(const DecoderOutput& output, const HandPose& target, const LossConfig& config,
                          DecoderOutput* grad = nullptr);

struct LossTerms {
  double contact = 0.0;
  double hand = 0.0;
  double total = 0.0;
};

// contact + lambda_hand * hand over the enabled heads. Image extent comes
// from sample.image.
LossTerms TotalLoss(const PredictionSample& sample, const DecoderOutput& output, const LossConfig& config,
                    DecoderOutput* grad = nullptr);

FingertipPair ArgmaxContacts(const DecoderOutput& output, double width, double height, const LossConfig& config);
TokenSequence ArgmaxTokens(const DecoderOutput& output, const LossConfig& config);

}  // namespace graspprior::prior
