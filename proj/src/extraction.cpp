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

#include "graspprior/extraction.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graspprior/config_util.h"
#include "graspprior/error.h"
#include "graspprior/image_io.h"
#include "graspprior/seeding.h"

namespace graspprior::extraction {

using geometry::BinaryMask;

std::string ToString(EventStatus status) {
  switch (status) {
    case EventStatus::kOk: return "ok";
    case EventStatus::kDiscardedRatio: return "discarded_ratio";
    case EventStatus::kDiscardedTimeout: return "discarded_timeout";
    case EventStatus::kDiscardedDegenerateMask: return "discarded_degenerate_mask";
  }
  return "unknown";
}

EventStatus EventStatusFromString(const std::string& name) {
  for (auto s : {EventStatus::kOk, EventStatus::kDiscardedRatio, EventStatus::kDiscardedTimeout,
                 EventStatus::kDiscardedDegenerateMask}) {
    if (ToString(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown event status " + name);
}

void ExtractionConfig::Validate() const {
  if (!(confidence_threshold >= 0 && confidence_threshold <= 1) || erosion_iterations < 0 || dilation_iterations < 0 ||
      max_lookback < 1 || !(ratio_lo > 0 && ratio_lo < ratio_hi) || num_query_points < 0 || output_size < 0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid extraction config");
  }
}

nlohmann::ordered_json ExtractionConfig::ToJson() const {
  return {{"confidence_threshold", confidence_threshold},
          {"erosion_iterations", erosion_iterations},
          {"dilation_iterations", dilation_iterations},
          {"max_lookback", max_lookback},
          {"ratio_lo", ratio_lo},
          {"ratio_hi", ratio_hi},
          {"num_query_points", num_query_points},
          {"element", element == geometry::StructuringElement::kCross4 ? "cross4" : "square8"},
          {"output_size", output_size},
          {"seed", seed}};
}

ExtractionConfig ExtractionConfig::FromJson(const nlohmann::json& j) {
  ExtractionConfig c;
  RejectUnknownKeys(j, c.ToJson(), "extraction");
  if (j.is_null()) return c;
  c.confidence_threshold = j.value("confidence_threshold", c.confidence_threshold);
  c.erosion_iterations = j.value("erosion_iterations", c.erosion_iterations);
  c.dilation_iterations = j.value("dilation_iterations", c.dilation_iterations);
  c.max_lookback = j.value("max_lookback", c.max_lookback);
  c.ratio_lo = j.value("ratio_lo", c.ratio_lo);
  c.ratio_hi = j.value("ratio_hi", c.ratio_hi);
  c.num_query_points = j.value("num_query_points", c.num_query_points);
  const std::string element = j.value("element", std::string("cross4"));
  if (element == "cross4") {
    c.element = geometry::StructuringElement::kCross4;
  } else if (element == "square8") {
    c.element = geometry::StructuringElement::kSquare8;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown structuring element '" + element + "'");
  }
  c.output_size = j.value("output_size", c.output_size);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

namespace {

bool QualifiesAsContact(const FrameAnnotation& a, double threshold) {
  const bool right = a.right_hand_count == 1 && a.right_hand &&
                     a.right_hand->contact_confidence >= threshold;
  const bool left = a.left_hand && a.left_hand->contact_confidence >= threshold;
  return right && !left;
}

}  // namespace

std::vector<int> IdentifyContactFrames(std::span<const FrameAnnotation> annotations,
                                       double confidence_threshold) {
  std::vector<int> frames;
  bool previous = false;
  int previous_index = std::numeric_limits<int>::min();
  for (const auto& a : annotations) {
    const bool current = QualifiesAsContact(a, confidence_threshold);
    // A gap in frame indices breaks a run.
    const bool contiguous = a.frame_index == previous_index + 1;
    if (current && !(previous && contiguous)) frames.push_back(a.frame_index);
    previous = current;
    previous_index = a.frame_index;
  }
  return frames;
}

LabelResult ExtractContactLabels(const FrameAnnotation& frame, const PerceptionOracle& oracle,
                                 const ExtractionConfig& config) {
  LabelResult result;
  if (!frame.object_mask) {
    result.status = EventStatus::kDiscardedDegenerateMask;
    return result;
  }
  BinaryMask eroded = geometry::Erode(*frame.object_mask, config.erosion_iterations, config.element);
  const HandObservation hand = oracle.ObserveHand(frame.frame_index);
  FingertipPair projected;
  try {
    projected = {geometry::ProjectPointToMask(hand.thumb_tip, eroded),
                 geometry::ProjectPointToMask(hand.index_tip, eroded)};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyMask) throw;
    result.status = EventStatus::kDiscardedDegenerateMask;
    return result;
  }
  const FingertipPair tips{hand.thumb_tip, hand.index_tip};
  if (!geometry::DistanceRatioGate(tips, projected, config.ratio_lo, config.ratio_hi)) {
    result.status = EventStatus::kDiscardedRatio;
    return result;
  }
  result.labels = ContactLabels{tips, projected, hand.pose, std::move(eroded)};
  return result;
}

std::vector<Point2D> SampleQueryPoints(const BinaryMask& mask, int n, std::uint64_t /*seed*/) {
  std::vector<std::pair<int, int>> pixels;  // (y, x), raster order
  double cx = 0.0, cy = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        pixels.emplace_back(y, x);
        cx += x + 0.5;
        cy += y + 0.5;
      }
    }
  }
  if (pixels.empty()) throw Error(ErrorCode::kEmptyMask, "cannot sample query points from an empty mask");
  std::vector<Point2D> out;
  if (n <= 0) return out;
  if (static_cast<int>(pixels.size()) <= n) {
    for (auto [y, x] : pixels) out.push_back({x + 0.5, y + 0.5});
    return out;
  }
  cx /= pixels.size();
  cy /= pixels.size();
  auto sq = [](double a, double b) { return a * a + b * b; };
  size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pixels.size(); ++i) {
    const double d = sq(pixels[i].second + 0.5 - cx, pixels[i].first + 0.5 - cy);
    if (d < best) {
      best = d;
      first = i;
    }
  }
  // nearest[i]: squared distance from pixel i to the selected set.
  std::vector<double> nearest(pixels.size(), std::numeric_limits<double>::infinity());
  size_t pick = first;
  for (int k = 0; k < n; ++k) {
    const auto [py, px] = pixels[pick];
    out.push_back({px + 0.5, py + 0.5});
    size_t next = 0;
    double far = -1.0;
    for (size_t i = 0; i < pixels.size(); ++i) {
      nearest[i] = std::min(nearest[i], sq(pixels[i].second - px, pixels[i].first - py));
      if (nearest[i] > far) {
        far = nearest[i];
        next = i;
      }
    }
    pick = next;
  }
  return out;
}

ContactEvent FindPredictionFrame(const ContactEvent& stub, std::span<const Point2D> query_points,
                                 const PerceptionOracle& oracle, const ExtractionConfig& config) {
  ContactEvent event = stub;
  event.prediction_frame = -1;
  event.status = EventStatus::kDiscardedTimeout;

  std::vector<Point2D> tracked{stub.contact_points_contact_frame.first,
                               stub.contact_points_contact_frame.second};
  tracked.insert(tracked.end(), query_points.begin(), query_points.end());
  const auto rows = oracle.TrackBackward(tracked, stub.contact_frame, config.max_lookback);

  for (size_t k = 0; k < rows.size(); ++k) {
    const int frame = stub.contact_frame - 1 - static_cast<int>(k);
    const FrameAnnotation ann = oracle.Annotate(frame);
    const Point2D a = rows[k].at(0);
    const Point2D b = rows[k].at(1);
    const bool in_raster = [&] {
      const int w = ann.object_mask ? ann.object_mask->width()
                                    : (ann.right_hand ? ann.right_hand->mask.width() : 0);
      const int h = ann.object_mask ? ann.object_mask->height()
                                    : (ann.right_hand ? ann.right_hand->mask.height() : 0);
      if (w == 0) return true;
      return a.x >= 0 && a.y >= 0 && b.x >= 0 && b.y >= 0 && a.x < w && b.x < w && a.y < h && b.y < h;
    }();
    // Points that leave the raster count as lost tracks.
    if (!in_raster) return event;
    bool qualifies = true;
    if (ann.right_hand && ann.right_hand->mask.any()) {
      const BinaryMask hand =
          geometry::Dilate(ann.right_hand->mask, config.dilation_iterations, config.element);
      qualifies = !geometry::MaskContains(hand, a) && !geometry::MaskContains(hand, b);
    }
    if (qualifies) {
      event.prediction_frame = frame;
      event.contact_points_prediction_frame = {a, b};
      event.status = EventStatus::kOk;
      return event;
    }
  }
  return event;
}

std::vector<ContactEvent> ExtractSequence(const std::string& video_id, const PerceptionOracle& oracle,
                                          const ExtractionConfig& config) {
  std::vector<FrameAnnotation> annotations;
  annotations.reserve(oracle.num_frames());
  for (int t = 0; t < oracle.num_frames(); ++t) annotations.push_back(oracle.Annotate(t));

  std::vector<ContactEvent> events;
  for (int frame : IdentifyContactFrames(annotations, config.confidence_threshold)) {
    ContactEvent event;
    event.video_id = video_id;
    event.contact_frame = frame;
    const LabelResult labels = ExtractContactLabels(annotations[frame], oracle, config);
    if (!labels.labels) {
      event.status = labels.status;
      events.push_back(event);
      continue;
    }
    event.contact_points_contact_frame = labels.labels->contact_points;
    event.hand_pose = labels.labels->hand_pose;
    const auto queries =
        SampleQueryPoints(labels.labels->eroded_object, config.num_query_points,
                          DeriveSeed(config.seed, {HashString(video_id),
                                                   static_cast<std::uint64_t>(frame)}));
    events.push_back(FindPredictionFrame(event, queries, oracle, config));
  }
  return events;
}

DatasetResult BuildDataset(std::span<const VideoSource> videos, const ExtractionConfig& config) {
  DatasetResult result;
  for (auto s : {EventStatus::kOk, EventStatus::kDiscardedRatio, EventStatus::kDiscardedTimeout,
                 EventStatus::kDiscardedDegenerateMask}) {
    result.status_counts[ToString(s)] = 0;
  }
  std::vector<const VideoSource*> order;
  for (const auto& v : videos) order.push_back(&v);
  std::stable_sort(order.begin(), order.end(),
                   [](const VideoSource* a, const VideoSource* b) { return a->video_id < b->video_id; });

  for (const VideoSource* video : order) {
    std::vector<ContactEvent> events;
    std::vector<PredictionSample> samples;
    try {
      const auto oracle = video->open();
      events = ExtractSequence(video->video_id, *oracle, config);
      for (const auto& e : events) {
        if (e.status != EventStatus::kOk) continue;
        PredictionSample s;
        s.sample_id = e.video_id + "_" + std::to_string(e.contact_frame);
        s.video_id = e.video_id;
        s.contact_frame = e.contact_frame;
        s.prediction_frame = e.prediction_frame;
        s.raw_hand_pose = e.hand_pose;
        s.contact_points = e.contact_points_prediction_frame;
        Image frame = oracle->RenderFrame(e.prediction_frame);
        if (config.output_size > 0) {
          int ox = 0, oy = 0;
          const Image square = CenterCropSquare(frame, &ox, &oy);
          const double scale = static_cast<double>(config.output_size) / square.width;
          frame = ResizeBilinear(square, config.output_size, config.output_size);
          auto map = [&](Point2D p) {
            return Point2D{std::clamp((p.x - ox) * scale, 0.0, static_cast<double>(config.output_size)),
                           std::clamp((p.y - oy) * scale, 0.0, static_cast<double>(config.output_size))};
          };
          s.contact_points = {map(s.contact_points.first), map(s.contact_points.second)};
        }
        s.image = std::move(frame);
        samples.push_back(std::move(s));
      }
    } catch (const std::exception& e) {
      result.failures.emplace_back(video->video_id, e.what());
      continue;
    }
    for (const auto& e : events) ++result.status_counts[ToString(e.status)];
    result.events.insert(result.events.end(), events.begin(), events.end());
    result.samples.insert(result.samples.end(), std::make_move_iterator(samples.begin()),
                          std::make_move_iterator(samples.end()));
  }
  return result;
}

}  // namespace graspprior::extraction
