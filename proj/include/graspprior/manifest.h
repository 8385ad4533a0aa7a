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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graspprior/types.h"

namespace graspprior {

// One training record: the prediction-frame image, the two future contact
// points in that frame, and the contact-frame hand pose.
struct PredictionSample {
  std::string sample_id;
  std::string video_id;
  int contact_frame = 0;
  int prediction_frame = 0;
  std::string image_path;  // relative to the manifest directory
  Image image;             // empty until loaded
  FingertipPair contact_points;
  HandPose raw_hand_pose;
  std::optional<TokenSequence> hand_tokens;
  std::string status = "ok";
};

// One JSON object per line with a fixed key order.
std::string ManifestLine(const PredictionSample& sample);
PredictionSample ParseManifestLine(const std::string& line);

void WriteManifest(const std::string& path, const std::vector<PredictionSample>& samples);
std::vector<PredictionSample> ReadManifest(const std::string& path, bool load_images);

// Writes images/<sample_id>.ppm next to manifest.jsonl inside `directory`,
// filling in image_path.
void WriteDataset(const std::string& directory, std::vector<PredictionSample>& samples);

}  // namespace graspprior
