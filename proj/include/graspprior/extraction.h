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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graspprior/geometry.h"
#include "graspprior/manifest.h"
#include "graspprior/types.h"
#include "json.hpp"

namespace graspprior::extraction {

struct HandDetection {
  geometry::BinaryMask mask;
  double contact_confidence = 0.0;
};

// Output of the hand-object segmenter for one frame.
struct FrameAnnotation {
  int frame_index = 0;
  std::optional<HandDetection> right_hand;
  std::optional<HandDetection> left_hand;
  std::optional<geometry::BinaryMask> object_mask;
  int right_hand_count = 0;
};

struct HandObservation {
  HandPose pose;
  Point2D thumb_tip;
  Point2D index_tip;
};

// Stand-in for the segmentation, hand-reconstruction and point-tracking
// models. Implementations must be deterministic.
class PerceptionOracle {
 public:
  virtual ~PerceptionOracle() = default;

  virtual int num_frames() const = 0;
  virtual FrameAnnotation Annotate(int frame) const = 0;
  virtual HandObservation ObserveHand(int frame) const = 0;
  // Row k holds the positions of every query point in frame from_frame-1-k.
  // Fewer than max_frames rows come back when the sequence starts earlier.
  virtual std::vector<std::vector<Point2D>> TrackBackward(std::span<const Point2D> points,
                                                          int from_frame, int max_frames) const = 0;
  virtual Image RenderFrame(int frame) const = 0;
};

enum class EventStatus { kOk, kDiscardedRatio, kDiscardedTimeout, kDiscardedDegenerateMask };

std::string ToString(EventStatus status);
EventStatus EventStatusFromString(const std::string& name);

struct ContactEvent {
  std::string video_id;
  int contact_frame = -1;
  int prediction_frame = -1;
  FingertipPair contact_points_contact_frame;
  FingertipPair contact_points_prediction_frame;
  HandPose hand_pose;
  EventStatus status = EventStatus::kOk;
};

struct ExtractionConfig {
  double confidence_threshold = 0.9;
  int erosion_iterations = 12;
  int dilation_iterations = 75;
  int max_lookback = 45;
  double ratio_lo = 0.3;
  double ratio_hi = 1.7;
  int num_query_points = 10;
  geometry::StructuringElement element = geometry::StructuringElement::kCross4;
  // Square side of stored prediction-frame images; 0 keeps the frame as is.
  int output_size = 0;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ExtractionConfig FromJson(const nlohmann::json& j);
};

// First frame of every maximal run where exactly one right hand is in
// confident contact and no left hand is.
std::vector<int> IdentifyContactFrames(std::span<const FrameAnnotation> annotations,
                                       double confidence_threshold = 0.9);

struct ContactLabels {
  FingertipPair fingertips;      // as observed
  FingertipPair contact_points;  // projected onto the eroded object mask
  HandPose hand_pose;
  geometry::BinaryMask eroded_object;
};

struct LabelResult {
  EventStatus status = EventStatus::kOk;
  std::optional<ContactLabels> labels;
};

LabelResult ExtractContactLabels(const FrameAnnotation& frame, const PerceptionOracle& oracle,
                                 const ExtractionConfig& config = {});

// Greedy farthest-point selection starting at the foreground pixel nearest
// the centroid. Masks with at most n pixels return every pixel in raster
// order. The seed is accepted for interface stability; selection is fully
// determined by the mask.
std::vector<Point2D> SampleQueryPoints(const geometry::BinaryMask& mask, int n = 10,
                                       std::uint64_t seed = 0);

// Walks backward from stub.contact_frame until the dilated right-hand mask
// contains neither tracked contact point. `query_points` are tracked
// alongside the contact points but do not affect the decision.
ContactEvent FindPredictionFrame(const ContactEvent& stub, std::span<const Point2D> query_points,
                                 const PerceptionOracle& oracle, const ExtractionConfig& config = {});

// Full per-sequence pipeline: identify, label, track. Returns one event per
// contact frame, including rejected ones.
std::vector<ContactEvent> ExtractSequence(const std::string& video_id, const PerceptionOracle& oracle,
                                          const ExtractionConfig& config = {});

struct VideoSource {
  std::string video_id;
  std::function<std::unique_ptr<PerceptionOracle>()> open;
};

struct DatasetResult {
  std::vector<PredictionSample> samples;
  std::vector<ContactEvent> events;
  std::map<std::string, int> status_counts;
  // (video_id, message) for sequences whose processing threw.
  std::vector<std::pair<std::string, std::string>> failures;
};

DatasetResult BuildDataset(std::span<const VideoSource> videos, const ExtractionConfig& config);

}  // namespace graspprior::extraction
