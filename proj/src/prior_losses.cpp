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

#include "graspprior/prior_losses.h"

#include <algorithm>
#include <cmath>

#include "graspprior/error.h"

namespace graspprior::prior {

std::string ToString(HandHeadMode mode) {
  switch (mode) {
    case HandHeadMode::kTokens: return "tokens";
    case HandHeadMode::kRegression: return "regression";
    case HandHeadMode::kOff: return "off";
  }
  return "unknown";
}

HandHeadMode HandHeadModeFromString(const std::string& name) {
  for (auto m : {HandHeadMode::kTokens, HandHeadMode::kRegression, HandHeadMode::kOff}) {
    if (ToString(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown hand head mode '" + name + "'");
}

int BinCoordinate(double x, double extent, int bins) {
  if (bins < 2) throw Error(ErrorCode::kOutOfRange, "need at least 2 bins");
  if (!std::isfinite(x) || extent <= 0 || x < 0 || x > extent) {
    throw Error(ErrorCode::kOutOfRange, "coordinate " + std::to_string(x) + " outside [0, " +
                                            std::to_string(extent) + "]");
  }
  return std::min(static_cast<int>(std::floor(x / extent * bins)), bins - 1);
}

double UnbinCoordinate(int bin, double extent, int bins) {
  if (bins < 2 || bin < 0 || bin >= bins) {
    throw Error(ErrorCode::kOutOfRange, "bin " + std::to_string(bin) + " outside [0, " + std::to_string(bins) + ")");
  }
  return (bin + 0.5) / bins * extent;
}

void LossConfig::Validate() const {
  if (bins_x < 2 || bins_y < 2) throw Error(ErrorCode::kInvalidConfig, "bins_x and bins_y must be >= 2");
  if (num_codebooks < 1 || codebook_size < 2) throw Error(ErrorCode::kInvalidConfig, "invalid codebook shape");
  if (!contact_head && hand_mode == HandHeadMode::kOff) {
    throw Error(ErrorCode::kInvalidConfig, "at least one of the contact and hand heads must be enabled");
  }
  if (!(lambda_hand >= 0) || !std::isfinite(lambda_hand)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda_hand must be finite and >= 0");
  }
}

int LossConfig::hand_width() const {
  switch (hand_mode) {
    case HandHeadMode::kTokens: return num_codebooks * codebook_size;
    case HandHeadMode::kRegression: return kPoseDim;
    case HandHeadMode::kOff: return 0;
  }
  return 0;
}

DecoderOutput DecoderOutput::Zeros(const LossConfig& config) {
  DecoderOutput out;
  if (config.contact_head) out.contact_logits.assign(2 * config.contact_width(), 0.0);
  out.hand.assign(config.hand_width(), 0.0);
  return out;
}

double SoftmaxCrossEntropy(std::span<const double> logits, int target, std::span<double> grad) {
  if (target < 0 || target >= static_cast<int>(logits.size())) {
    throw Error(ErrorCode::kOutOfRange, "target class outside logit range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - peak);
  const double lse = peak + std::log(sum);
  if (!grad.empty()) {
    for (size_t i = 0; i < logits.size(); ++i) grad[i] += std::exp(logits[i] - lse);
    grad[target] -= 1.0;
  }
  return lse - logits[target];
}

namespace {

void CheckSize(const std::vector<double>& v, size_t expected, const char* what) {
  if (v.size() != expected) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                               " values, expected " + std::to_string(expected));
  }
}

}  // namespace

double ContactLoss(const DecoderOutput& output, const FingertipPair& targets, double width, double height,
                   const LossConfig& config, DecoderOutput* grad) {
  const int row = config.contact_width();
  CheckSize(output.contact_logits, 2 * row, "contact logits");
  const Point2D points[2] = {targets.first, targets.second};
  double loss = 0.0;
  for (int p = 0; p < 2; ++p) {
    const int bx = BinCoordinate(points[p].x, width, config.bins_x);
    const int by = BinCoordinate(points[p].y, height, config.bins_y);
    std::span<const double> logits(output.contact_logits.data() + p * row, row);
    std::span<double> g;
    if (grad) g = std::span<double>(grad->contact_logits.data() + p * row, row);
    loss += SoftmaxCrossEntropy(logits.first(config.bins_x), bx, g.empty() ? g : g.first(config.bins_x));
    loss += SoftmaxCrossEntropy(logits.subspan(config.bins_x), by, g.empty() ? g : g.subspan(config.bins_x));
  }
  return loss;
}

double HandLossTokens(const DecoderOutput& output, const TokenSequence& targets, const LossConfig& config,
                      DecoderOutput* grad) {
  if (config.hand_mode != HandHeadMode::kTokens) throw Error(ErrorCode::kModeMismatch, "hand head is not in tokens mode");
  CheckSize(output.hand, static_cast<size_t>(config.num_codebooks) * config.codebook_size, "hand logits");
  if (static_cast<int>(targets.tokens.size()) != config.num_codebooks) {
    throw Error(ErrorCode::kShapeMismatch, "token sequence length does not match the codebook count");
  }
  const int c = config.codebook_size;
  double loss = 0.0;
  for (int n = 0; n < config.num_codebooks; ++n) {
    if (targets.tokens[n] < 0 || targets.tokens[n] >= c) throw Error(ErrorCode::kTokenOutOfRange, "target token out of range");
    std::span<double> g;
    if (grad) g = std::span<double>(grad->hand.data() + n * c, c);
    loss += SoftmaxCrossEntropy(std::span<const double>(output.hand.data() + n * c, c), targets.tokens[n], g);
  }
  return loss;
}

double HandLossRegression(const DecoderOutput& output, const HandPose& target, const LossConfig& config,
                          DecoderOutput* grad) {
  if (config.hand_mode != HandHeadMode::kRegression) {
    throw Error(ErrorCode::kModeMismatch, "hand head is not in regression mode");
  }
  CheckSize(output.hand, kPoseDim, "hand regression");
  double loss = 0.0;
  for (int i = 0; i < kPoseDim; ++i) {
    const double d = output.hand[i] - target.joints[i];
    loss += d * d;
    if (grad) grad->hand[i] += 2.0 * d / kPoseDim;
  }
  return loss / kPoseDim;
}

LossTerms TotalLoss(const PredictionSample& sample, const DecoderOutput& output, const LossConfig& config,
                    DecoderOutput* grad) {
  config.Validate();
  LossTerms terms;
  if (config.contact_head) {
    if (sample.image.width <= 0 || sample.image.height <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "sample " + sample.sample_id + " has no image extent");
    }
    terms.contact = ContactLoss(output, sample.contact_points, sample.image.width, sample.image.height, config, grad);
  }
  DecoderOutput hand_grad;
  DecoderOutput* hg = nullptr;
  if (grad && config.hand_mode != HandHeadMode::kOff) {
    hand_grad.hand.assign(output.hand.size(), 0.0);
    hg = &hand_grad;
  }
  if (config.hand_mode == HandHeadMode::kTokens) {
    if (!sample.hand_tokens) throw Error(ErrorCode::kMissingAnnotation, "sample " + sample.sample_id + " has no tokens");
    terms.hand = HandLossTokens(output, *sample.hand_tokens, config, hg);
  } else if (config.hand_mode == HandHeadMode::kRegression) {
    terms.hand = HandLossRegression(output, sample.raw_hand_pose, config, hg);
  }
  if (hg) {
    for (size_t i = 0; i < hand_grad.hand.size(); ++i) grad->hand[i] += config.lambda_hand * hand_grad.hand[i];
  }
  terms.total = terms.contact + config.lambda_hand * terms.hand;
  return terms;
}

namespace {

int ArgmaxIndex(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

FingertipPair ArgmaxContacts(const DecoderOutput& output, double width, double height, const LossConfig& config) {
  const int row = config.contact_width();
  CheckSize(output.contact_logits, 2 * row, "contact logits");
  Point2D points[2];
  for (int p = 0; p < 2; ++p) {
    std::span<const double> logits(output.contact_logits.data() + p * row, row);
    points[p] = {UnbinCoordinate(ArgmaxIndex(logits.first(config.bins_x)), width, config.bins_x),
                 UnbinCoordinate(ArgmaxIndex(logits.subspan(config.bins_x)), height, config.bins_y)};
  }
  return {points[0], points[1]};
}

TokenSequence ArgmaxTokens(const DecoderOutput& output, const LossConfig& config) {
  if (config.hand_mode != HandHeadMode::kTokens) throw Error(ErrorCode::kModeMismatch, "hand head is not in tokens mode");
  const int c = config.codebook_size;
  CheckSize(output.hand, static_cast<size_t>(config.num_codebooks) * c, "hand logits");
  TokenSequence out;
  for (int n = 0; n < config.num_codebooks; ++n) {
    out.tokens.push_back(ArgmaxIndex(std::span<const double>(output.hand.data() + n * c, c)));
  }
  return out;
}

}  // namespace graspprior::prior
