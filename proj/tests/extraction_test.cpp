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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "graspprior/error.h"
#include "graspprior/synth.h"

namespace graspprior::extraction {
namespace {

using geometry::BinaryMask;

FrameAnnotation Frame(int index, std::optional<double> right, std::optional<double> left = {},
                      int right_count = 1) {
  FrameAnnotation a;
  a.frame_index = index;
  if (right) a.right_hand = HandDetection{BinaryMask(4, 4), *right};
  if (left) a.left_hand = HandDetection{BinaryMask(4, 4), *left};
  a.right_hand_count = right ? right_count : 0;
  return a;
}

TEST(IdentifyContactFramesTest, FirstFrameOfRun) {
  const std::vector<FrameAnnotation> frames{Frame(0, 0.5), Frame(1, 0.95), Frame(2, 0.96)};
  EXPECT_EQ(IdentifyContactFrames(frames), std::vector<int>{1});
}

TEST(IdentifyContactFramesTest, LeftHandContactExcludes) {
  const std::vector<FrameAnnotation> frames{Frame(0, 0.95, 0.92)};
  EXPECT_TRUE(IdentifyContactFrames(frames).empty());
  const std::vector<FrameAnnotation> low_left{Frame(0, 0.95, 0.5)};
  EXPECT_EQ(IdentifyContactFrames(low_left), std::vector<int>{0});
}

TEST(IdentifyContactFramesTest, TwoRightHandsExclude) {
  const std::vector<FrameAnnotation> frames{Frame(0, 0.95, {}, 2)};
  EXPECT_TRUE(IdentifyContactFrames(frames).empty());
}

TEST(IdentifyContactFramesTest, SeparateRunsAndThreshold) {
  const std::vector<FrameAnnotation> frames{Frame(0, 0.9), Frame(1, 0.91), Frame(2, 0.2),
                                            Frame(3, 0.93), Frame(4, 0.89), Frame(5, {})};
  EXPECT_EQ(IdentifyContactFrames(frames), (std::vector<int>{0, 3}));
  EXPECT_TRUE(IdentifyContactFrames({}).empty());
}

// Hand-built oracle: fixed fingertips, per-frame hand masks, static tracks.
class FakeOracle : public PerceptionOracle {
 public:
  int num_frames() const override { return static_cast<int>(frames.size()); }
  FrameAnnotation Annotate(int frame) const override { return frames.at(frame); }
  HandObservation ObserveHand(int) const override { return {HandPose{}, thumb, index}; }
  std::vector<std::vector<Point2D>> TrackBackward(std::span<const Point2D> points, int from,
                                                  int max_frames) const override {
    std::vector<std::vector<Point2D>> rows;
    for (int k = 1; k <= max_frames && from - k >= 0; ++k) rows.emplace_back(points.begin(), points.end());
    return rows;
  }
  Image RenderFrame(int) const override { return Image(size, size); }

  int size = 64;
  std::vector<FrameAnnotation> frames;
  Point2D thumb, index;
};

BinaryMask Disk(int size, Point2D c, double r) {
  BinaryMask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (std::hypot(x + 0.5 - c.x, y + 0.5 - c.y) <= r) m.set(x, y);
  return m;
}

Point2D BruteProjection(Point2D p, const BinaryMask& m) {
  double best = std::numeric_limits<double>::infinity();
  Point2D out{};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      const double d = std::pow(x + 0.5 - p.x, 2) + std::pow(y + 0.5 - p.y, 2);
      if (d < best) best = d, out = {x + 0.5, y + 0.5};
    }
  return out;
}

TEST(ExtractContactLabelsTest, FingertipsInsideErodedMaskUnchanged) {
  FakeOracle oracle;
  FrameAnnotation a;
  a.object_mask = Disk(64, {32, 32}, 25);
  oracle.thumb = {30.5, 28.5};
  oracle.index = {34.5, 36.5};
  const LabelResult r = ExtractContactLabels(a, oracle);
  ASSERT_EQ(r.status, EventStatus::kOk);
  EXPECT_EQ(r.labels->contact_points.first, oracle.thumb);
  EXPECT_EQ(r.labels->contact_points.second, oracle.index);
}

TEST(ExtractContactLabelsTest, ErodedAwayObjectIsDegenerate) {
  FakeOracle oracle;
  FrameAnnotation a;
  a.object_mask = Disk(64, {32, 32}, 6);
  oracle.thumb = {30, 30};
  oracle.index = {36, 30};
  EXPECT_EQ(ExtractContactLabels(a, oracle).status, EventStatus::kDiscardedDegenerateMask);
  FrameAnnotation no_object;
  EXPECT_EQ(ExtractContactLabels(no_object, oracle).status, EventStatus::kDiscardedDegenerateMask);
}

TEST(ExtractContactLabelsTest, OutsideFingertipsProjectOntoErodedDisk) {
  FakeOracle oracle;
  FrameAnnotation a;
  const BinaryMask object = Disk(96, {48, 48}, 30);
  a.object_mask = object;
  // Five pixels outside the disk boundary, spread vertically.
  oracle.thumb = {48 - 35.0, 44.0};
  oracle.index = {48 - 35.0, 52.0};
  const LabelResult r = ExtractContactLabels(a, oracle);
  ASSERT_EQ(r.status, EventStatus::kOk);
  const BinaryMask eroded = geometry::Erode(object, 12);
  EXPECT_EQ(r.labels->contact_points.first, BruteProjection(oracle.thumb, eroded));
  EXPECT_EQ(r.labels->contact_points.second, BruteProjection(oracle.index, eroded));
  EXPECT_TRUE(geometry::MaskContains(eroded, r.labels->contact_points.first));
  // Boundary: a neighbour one pixel further out is not on the eroded mask.
  EXPECT_FALSE(geometry::MaskContains(eroded, {r.labels->contact_points.first.x - 1,
                                               r.labels->contact_points.first.y}));
}

TEST(ExtractContactLabelsTest, RatioGateRejects) {
  FakeOracle oracle;
  FrameAnnotation a;
  a.object_mask = Disk(64, {32, 32}, 14);  // erodes to a few pixels
  oracle.thumb = {10, 22};
  oracle.index = {10, 42};
  EXPECT_EQ(ExtractContactLabels(a, oracle).status, EventStatus::kDiscardedRatio);
}

// Naive greedy farthest-point selection, restated independently.
std::vector<Point2D> GreedyFarthestOracle(const BinaryMask& m, int n) {
  std::vector<Point2D> fg;
  double cx = 0, cy = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) fg.push_back({x + 0.5, y + 0.5}), cx += x + 0.5, cy += y + 0.5;
  cx /= fg.size();
  cy /= fg.size();
  Point2D start = fg[0];
  for (const auto& p : fg)
    if (std::pow(p.x - cx, 2) + std::pow(p.y - cy, 2) < std::pow(start.x - cx, 2) + std::pow(start.y - cy, 2))
      start = p;
  std::vector<Point2D> chosen{start};
  while (static_cast<int>(chosen.size()) < n) {
    Point2D best{};
    double best_d = -1;
    for (const auto& p : fg) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : chosen) d = std::min(d, std::pow(p.x - c.x, 2) + std::pow(p.y - c.y, 2));
      if (d > best_d) best_d = d, best = p;
    }
    chosen.push_back(best);
  }
  return chosen;
}

double MinPairwise(const std::vector<Point2D>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, Distance(pts[i], pts[j]));
  return best;
}

TEST(SampleQueryPointsTest, SmallMasksReturnAllPixels) {
  BinaryMask ten(16, 16);
  for (int i = 0; i < 10; ++i) ten.set(i, i % 3);
  const auto pts = SampleQueryPoints(ten, 10, 1);
  ASSERT_EQ(pts.size(), 10u);
  EXPECT_EQ(pts, SampleQueryPoints(ten, 10, 99));
  for (size_t i = 1; i < pts.size(); ++i) {
    EXPECT_TRUE(pts[i - 1].y < pts[i].y || (pts[i - 1].y == pts[i].y && pts[i - 1].x < pts[i].x));
  }
  BinaryMask three(16, 16);
  three.set(1, 1);
  three.set(5, 9);
  three.set(12, 3);
  EXPECT_EQ(SampleQueryPoints(three, 10, 0).size(), 3u);
  EXPECT_THROW(SampleQueryPoints(BinaryMask(4, 4), 10, 0), Error);
}

TEST(SampleQueryPointsTest, DiskMatchesGreedyOracle) {
  const BinaryMask disk = Disk(64, {31.3, 33.1}, 20);
  const auto pts = SampleQueryPoints(disk, 10, 5);
  const auto oracle = GreedyFarthestOracle(disk, 10);
  EXPECT_EQ(pts, oracle);
  EXPECT_DOUBLE_EQ(MinPairwise(pts), MinPairwise(oracle));
  std::set<std::pair<double, double>> unique;
  for (const auto& p : pts) {
    EXPECT_TRUE(geometry::MaskContains(disk, p));
    unique.insert({p.x, p.y});
  }
  EXPECT_EQ(unique.size(), 10u);
}

BinaryMask HandAt(int size, Point2D c) { return Disk(size, c, 6); }

ContactEvent Stub(int contact_frame, Point2D a, Point2D b) {
  ContactEvent e;
  e.video_id = "v";
  e.contact_frame = contact_frame;
  e.contact_points_contact_frame = {a, b};
  return e;
}

TEST(FindPredictionFrameTest, DistantHandQualifiesImmediately) {
  FakeOracle oracle;
  oracle.size = 200;
  for (int t = 0; t < 10; ++t) {
    FrameAnnotation a;
    a.frame_index = t;
    a.right_hand = HandDetection{HandAt(200, t == 9 ? Point2D{100, 100} : Point2D{10, 10}), 0.1};
    a.right_hand_count = 1;
    oracle.frames.push_back(a);
  }
  const ContactEvent e = FindPredictionFrame(Stub(9, {150, 150}, {160, 150}), {}, oracle);
  EXPECT_EQ(e.status, EventStatus::kOk);
  EXPECT_EQ(e.prediction_frame, 8);
  EXPECT_EQ(e.contact_points_prediction_frame.first, (Point2D{150, 150}));
}

TEST(FindPredictionFrameTest, RetreatingHandMatchesPerFrameL1Check) {
  FakeOracle oracle;
  oracle.size = 256;
  const int fc = 60;
  const Point2D a{200.5, 120.5}, b{200.5, 132.5};
  for (int t = 0; t <= fc; ++t) {
    FrameAnnotation ann;
    ann.frame_index = t;
    ann.right_hand = HandDetection{HandAt(256, {190.0 - 3.0 * (fc - t), 126.0}), 0.5};
    ann.right_hand_count = 1;
    oracle.frames.push_back(ann);
  }
  // Per-frame brute-force L1 distance from each point pixel to the hand.
  int expected = -1;
  for (int t = fc - 1; t >= 0 && t >= fc - 45; --t) {
    const auto& hand = oracle.frames[t].right_hand->mask;
    int da = std::numeric_limits<int>::max(), db = da;
    for (int y = 0; y < 256; ++y)
      for (int x = 0; x < 256; ++x)
        if (hand.at(x, y)) {
          da = std::min(da, std::abs(x - 200) + std::abs(y - 120));
          db = std::min(db, std::abs(x - 200) + std::abs(y - 132));
        }
    if (da > 75 && db > 75) {
      expected = t;
      break;
    }
  }
  ASSERT_GT(expected, fc - 45);
  const ContactEvent e = FindPredictionFrame(Stub(fc, a, b), {}, oracle);
  EXPECT_EQ(e.status, EventStatus::kOk);
  EXPECT_EQ(e.prediction_frame, expected);
}

TEST(FindPredictionFrameTest, LingeringHandTimesOut) {
  FakeOracle oracle;
  oracle.size = 128;
  for (int t = 0; t < 60; ++t) {
    FrameAnnotation ann;
    ann.frame_index = t;
    ann.right_hand = HandDetection{HandAt(128, {60, 60}), 0.5};
    ann.right_hand_count = 1;
    oracle.frames.push_back(ann);
  }
  const ContactEvent e = FindPredictionFrame(Stub(59, {70.5, 60.5}, {70.5, 66.5}), {}, oracle);
  EXPECT_EQ(e.status, EventStatus::kDiscardedTimeout);
  EXPECT_EQ(e.prediction_frame, -1);
}

TEST(FindPredictionFrameTest, AbsentHandQualifies) {
  FakeOracle oracle;
  for (int t = 0; t < 5; ++t) {
    FrameAnnotation ann;
    ann.frame_index = t;
    if (t >= 3) {
      ann.right_hand = HandDetection{HandAt(64, {30, 30}), 0.95};
      ann.right_hand_count = 1;
    }
    oracle.frames.push_back(ann);
  }
  const ContactEvent e = FindPredictionFrame(Stub(4, {33.5, 30.5}, {30.5, 33.5}), {}, oracle);
  EXPECT_EQ(e.status, EventStatus::kOk);
  EXPECT_EQ(e.prediction_frame, 2);
}

TEST(FindPredictionFrameTest, SequenceStartBeforeClearanceTimesOut) {
  FakeOracle oracle;
  for (int t = 0; t < 5; ++t) {
    FrameAnnotation ann;
    ann.frame_index = t;
    ann.right_hand = HandDetection{HandAt(64, {30, 30}), 0.5};
    ann.right_hand_count = 1;
    oracle.frames.push_back(ann);
  }
  EXPECT_EQ(FindPredictionFrame(Stub(4, {33.5, 30.5}, {30.5, 33.5}), {}, oracle).status,
            EventStatus::kDiscardedTimeout);
}

TEST(BuildDatasetTest, EmptyInput) {
  const DatasetResult r = BuildDataset({}, {});
  EXPECT_TRUE(r.samples.empty());
  for (const auto& [name, count] : r.status_counts) EXPECT_EQ(count, 0) << name;
}

std::vector<VideoSource> Sources(const std::vector<synth::SynthSceneSpec>& specs) {
  std::vector<VideoSource> out;
  for (size_t i = 0; i < specs.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "v%03zu", i);
    const auto spec = specs[i];
    out.push_back({id, [spec] { return std::unique_ptr<PerceptionOracle>(synth::GenerateApproachSequence(spec)); }});
  }
  return out;
}

TEST(BuildDatasetTest, TimeoutCorpusCounts) {
  const auto specs = synth::MakeApproachCorpus({.count = 20, .timeout_every = 4, .seed = 17});
  const DatasetResult r = BuildDataset(Sources(specs), {});
  EXPECT_EQ(r.samples.size(), 15u);
  EXPECT_EQ(r.status_counts.at("ok"), 15);
  EXPECT_EQ(r.status_counts.at("discarded_timeout"), 5);
  int total = 0;
  for (const auto& [name, count] : r.status_counts) total += count;
  EXPECT_EQ(total, static_cast<int>(r.events.size()));
}

TEST(BuildDatasetTest, OkEventsSatisfyContainmentInvariants) {
  const auto specs = synth::MakeApproachCorpus({.count = 8, .seed = 3});
  const ExtractionConfig config;
  const DatasetResult r = BuildDataset(Sources(specs), config);
  ASSERT_FALSE(r.events.empty());
  for (const auto& e : r.events) {
    if (e.status != EventStatus::kOk) continue;
    const auto seq = synth::GenerateApproachSequence(specs[std::stoi(e.video_id.substr(1))]);
    ASSERT_LT(e.prediction_frame, e.contact_frame);
    const auto eroded = geometry::Erode(*seq->Annotate(e.contact_frame).object_mask, 12);
    EXPECT_TRUE(geometry::MaskContains(eroded, e.contact_points_contact_frame.first));
    EXPECT_TRUE(geometry::MaskContains(eroded, e.contact_points_contact_frame.second));
    const std::vector<Point2D> pts{e.contact_points_contact_frame.first, e.contact_points_contact_frame.second};
    const auto rows = seq->TrackBackward(pts, e.contact_frame, 45);
    for (int t = e.prediction_frame; t < e.contact_frame; ++t) {
      const auto ann = seq->Annotate(t);
      const auto& row = rows[e.contact_frame - 1 - t];
      bool contained = false;
      if (ann.right_hand) {
        const auto hand = geometry::Dilate(ann.right_hand->mask, 75);
        contained = geometry::MaskContains(hand, row[0]) || geometry::MaskContains(hand, row[1]);
      }
      EXPECT_EQ(contained, t != e.prediction_frame) << e.video_id << " frame " << t;
    }
  }
}

TEST(BuildDatasetTest, FailingVideoDoesNotAbortBatch) {
  auto sources = Sources(synth::MakeApproachCorpus({.count = 2, .seed = 5}));
  sources.push_back({"broken", []() -> std::unique_ptr<PerceptionOracle> {
                       throw Error(ErrorCode::kIo, "unreadable video");
                     }});
  const DatasetResult r = BuildDataset(sources, {});
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].first, "broken");
  EXPECT_EQ(r.samples.size(), 2u);
}

TEST(BuildDatasetTest, DeterministicManifest) {
  const auto specs = synth::MakeApproachCorpus({.count = 6, .seed = 8});
  const auto a = BuildDataset(Sources(specs), {});
  const auto b = BuildDataset(Sources(specs), {});
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(ManifestLine(a.samples[i]), ManifestLine(b.samples[i]));
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
  }
}

TEST(BuildDatasetTest, ResizedOutputRescalesPoints) {
  const auto specs = synth::MakeApproachCorpus({.count = 3, .seed = 8});
  ExtractionConfig config;
  const auto native = BuildDataset(Sources(specs), config);
  config.output_size = 64;
  const auto small = BuildDataset(Sources(specs), config);
  ASSERT_EQ(native.samples.size(), small.samples.size());
  for (size_t i = 0; i < small.samples.size(); ++i) {
    EXPECT_EQ(small.samples[i].image.width, 64);
    EXPECT_DOUBLE_EQ(small.samples[i].contact_points.first.x, native.samples[i].contact_points.first.x / 2);
  }
}

}  // namespace
}  // namespace graspprior::extraction
