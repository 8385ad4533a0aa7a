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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "graspprior/extraction.h"
#include "graspprior/manifest.h"
#include "graspprior/types.h"

namespace graspprior::synth {

enum class ObjectShape { kDisk, kRect };

// A hand blob (disk plus two protruding fingers) approaching a rigid object
// along a straight line. Every quantity is measured in pixels and frames.
struct SynthSceneSpec {
  int width = 128;
  int height = 128;

  ObjectShape object_shape = ObjectShape::kDisk;
  double object_radius = 24.0;       // disk radius, or rect half-width
  double object_half_height = 24.0;  // rect only
  Point2D object_center{84.0, 64.0};  // at the contact frame
  Point2D object_velocity{0.0, 0.0};  // per frame
  std::array<std::uint8_t, 3> object_color{60, 110, 200};

  double hand_radius = 9.0;
  double finger_length = 5.0;
  double finger_spread = 6.0;          // half distance between fingertips
  Point2D approach_direction{1.0, 0.0};  // direction of hand travel
  double hand_speed = 3.0;             // pixels per frame
  int approach_frames = 40;            // frames before the contact frame
  int hover_frames = 0;                // pause inserted during the approach
  int hover_after = 4;                 // approach frames left after the pause
  int hold_frames = 5;                 // frames after contact
  bool hand_enters_at_contact = false;
  // Adds a high-confidence contact flag this many frames before real contact
  // (0 disables). Models segmenter false positives.
  int premature_contact_offset = 0;

  HandPose hand_pose;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  int contact_frame = -1;
  int prediction_frame = -1;
  FingertipPair contact_points_contact_frame;
  FingertipPair contact_points_prediction_frame;
  extraction::EventStatus status = extraction::EventStatus::kOk;
};

// A fully rendered sequence. Doubles as the perception oracle for it.
class ApproachSequence : public extraction::PerceptionOracle {
 public:
  explicit ApproachSequence(const SynthSceneSpec& spec);

  int num_frames() const override { return static_cast<int>(annotations_.size()); }
  extraction::FrameAnnotation Annotate(int frame) const override;
  extraction::HandObservation ObserveHand(int frame) const override;
  std::vector<std::vector<Point2D>> TrackBackward(std::span<const Point2D> points, int from_frame,
                                                  int max_frames) const override;
  Image RenderFrame(int frame) const override;

  const std::vector<extraction::FrameAnnotation>& annotations() const { return annotations_; }
  const GroundTruth& ground_truth() const { return truth_; }
  const SynthSceneSpec& spec() const { return spec_; }

 private:
  Point2D ObjectCenter(int frame) const;
  Point2D HandCenter(int frame) const;
  bool HandVisible(int frame) const;
  geometry::BinaryMask ObjectMask(int frame) const;
  geometry::BinaryMask HandMask(int frame) const;
  FingertipPair Fingertips(int frame) const;
  void ComputeGroundTruth();

  SynthSceneSpec spec_;
  std::vector<extraction::FrameAnnotation> annotations_;
  std::vector<bool> in_contact_;
  GroundTruth truth_;
};

// generate_approach_sequence. Throws Error(kInvalidSpec) on bad specs.
std::unique_ptr<ApproachSequence> GenerateApproachSequence(const SynthSceneSpec& spec);

// Mixed corpus used by the extraction checks. Entry i is deterministic in
// (seed, i); `timeout_every`/`degenerate_every`/`ratio_every` select which
// indices are constructed to be rejected (0 disables that kind).
struct ApproachCorpusSpec {
  int count = 20;
  int timeout_every = 0;
  int degenerate_every = 0;
  int ratio_every = 0;
  std::uint64_t seed = 0;
};
std::vector<SynthSceneSpec> MakeApproachCorpus(const ApproachCorpusSpec& corpus);

struct SynthPoseSpec {
  int num_prototypes = 50;
  double noise_scale = 0.02;
  int corpus_size = 5000;
  std::uint64_t seed = 0;
  // Selects the sampling stream; prototypes depend on `seed` only, so
  // different streams give held-out draws around the same prototypes.
  std::uint64_t sample_stream = 0;
};

struct PoseCorpus {
  std::vector<HandPose> prototypes;
  std::vector<HandPose> poses;
  std::vector<int> assignment;  // prototype index per pose
};

PoseCorpus GeneratePoseCorpus(const SynthPoseSpec& spec);

struct SynthPriorSpec {
  int image_size = 128;
  double min_radius = 10.0;
  double max_radius = 22.0;
  int num_colors = 6;
  bool draw_hand = true;
  std::uint64_t seed = 0;
};

// Bearings (radians, image frame) of the thumb and index contact points on
// the object boundary.
inline constexpr double kThumbBearing = 3.14159265358979323846;
inline constexpr double kIndexBearing = 0.0;

using TokenizeFn = std::function<TokenSequence(const HandPose&)>;

// Single-frame scenes with known contact points. Pose selection follows the
// object color so the hand head has a learnable signal. `tokenize` may be
// empty, leaving hand_tokens unset.
std::vector<PredictionSample> GeneratePriorDataset(const SynthPriorSpec& spec, const PoseCorpus& poses,
                                                   int n, const TokenizeFn& tokenize = {});

}  // namespace graspprior::synth
