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

#include "graspprior/manifest.h"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "graspprior/error.h"
#include "graspprior/image_io.h"

namespace graspprior {

using nlohmann::ordered_json;

std::string ManifestLine(const PredictionSample& s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["video_id"] = s.video_id;
  j["contact_frame"] = s.contact_frame;
  j["prediction_frame"] = s.prediction_frame;
  j["image_path"] = s.image_path;
  j["thumb_xy"] = {s.contact_points.first.x, s.contact_points.first.y};
  j["index_xy"] = {s.contact_points.second.x, s.contact_points.second.y};
  j["hand_pose"] = s.raw_hand_pose.joints;
  j["tokens"] = s.hand_tokens ? ordered_json(s.hand_tokens->tokens) : ordered_json(nullptr);
  j["status"] = s.status;
  return j.dump();
}

PredictionSample ParseManifestLine(const std::string& line) {
  PredictionSample s;
  try {
    const auto j = ordered_json::parse(line);
    s.sample_id = j.at("sample_id").get<std::string>();
    s.video_id = j.at("video_id").get<std::string>();
    s.contact_frame = j.at("contact_frame").get<int>();
    s.prediction_frame = j.at("prediction_frame").get<int>();
    s.image_path = j.at("image_path").get<std::string>();
    const auto& t = j.at("thumb_xy");
    const auto& i = j.at("index_xy");
    s.contact_points = {{t.at(0).get<double>(), t.at(1).get<double>()},
                        {i.at(0).get<double>(), i.at(1).get<double>()}};
    const auto& pose = j.at("hand_pose");
    if (pose.size() != kPoseDim) throw Error(ErrorCode::kShapeMismatch, "hand_pose needs 63 values");
    for (int k = 0; k < kPoseDim; ++k) s.raw_hand_pose.joints[k] = pose.at(k).get<double>();
    if (!j.at("tokens").is_null()) s.hand_tokens = TokenSequence{j.at("tokens").get<std::vector<int>>()};
    s.status = j.at("status").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed manifest record: ") + e.what());
  }
  return s;
}

void WriteManifest(const std::string& path, const std::vector<PredictionSample>& samples) {
  // Write to a sibling file first so a failure never leaves a partial manifest.
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp);
    for (const auto& s : samples) out << ManifestLine(s) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<PredictionSample> ReadManifest(const std::string& path, bool load_images) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  std::vector<PredictionSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    samples.push_back(ParseManifestLine(line));
    if (load_images) samples.back().image = ReadPpm((dir / samples.back().image_path).string());
  }
  return samples;
}

void WriteDataset(const std::string& directory, std::vector<PredictionSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(directory) / "images");
  for (auto& s : samples) {
    s.image_path = "images/" + s.sample_id + ".ppm";
    if (s.image.width == 0) throw Error(ErrorCode::kIo, "sample " + s.sample_id + " has no image");
    WritePpm(s.image, (fs::path(directory) / s.image_path).string());
  }
  WriteManifest((fs::path(directory) / "manifest.jsonl").string(), samples);
}

}  // namespace graspprior
