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

#include "graspprior/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "graspprior/error.h"
#include "graspprior/seeding.h"

namespace graspprior::synth {
namespace {

using extraction::EventStatus;
using geometry::BinaryMask;

// Construction rule the ground truth is computed under. These mirror the
// extraction defaults but are deliberately restated here.
constexpr int kTruthErosion = 12;
constexpr int kTruthDilation = 75;
constexpr int kTruthLookback = 45;
constexpr double kTruthRatioLo = 0.3;
constexpr double kTruthRatioHi = 1.7;

constexpr std::array<std::uint8_t, 3> kSkin{225, 180, 150};

std::uint8_t BackgroundValue(std::uint64_t seed, int x, int y) {
  const auto h = DeriveSeed(seed, {static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)});
  return static_cast<std::uint8_t>(92 + (h % 17));
}

void FillBackground(Image& image, std::uint64_t seed) {
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto v = BackgroundValue(seed, x, y);
      image.Set(x, y, {v, v, static_cast<std::uint8_t>(v + 6)});
    }
  }
}

bool InDisk(int x, int y, Point2D c, double r) {
  const double dx = x + 0.5 - c.x;
  const double dy = y + 0.5 - c.y;
  return dx * dx + dy * dy <= r * r;
}

void RasterizeDisk(BinaryMask& mask, Point2D c, double r) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)) - 1);
  const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(c.x + r)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)) - 1);
  const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(c.y + r)) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (InDisk(x, y, c, r)) mask.set(x, y);
    }
  }
}

void RasterizeSegment(BinaryMask& mask, Point2D a, Point2D b) {
  const int steps = std::max(2, static_cast<int>(std::ceil(Distance(a, b) * 4)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    mask.set(static_cast<int>(std::floor(a.x + t * (b.x - a.x))),
             static_cast<int>(std::floor(a.y + t * (b.y - a.y))));
  }
}

void PaintMask(Image& image, const BinaryMask& mask, std::array<std::uint8_t, 3> color) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) image.Set(x, y, color);
    }
  }
}

Point2D Normalized(Point2D v) {
  const double n = std::hypot(v.x, v.y);
  return {v.x / n, v.y / n};
}

// Brute-force erosion: a pixel survives when every pixel within L1 radius k
// lies inside the raster and on the mask.
BinaryMask NaiveErodeL1(const BinaryMask& mask, int k) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      bool keep = true;
      for (int dy = -k; dy <= k && keep; ++dy) {
        const int span = k - std::abs(dy);
        for (int dx = -span; dx <= span; ++dx) {
          if (!mask.at(x + dx, y + dy)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.set(x, y);
    }
  }
  return out;
}

Point2D NaiveProject(Point2D p, const BinaryMask& mask) {
  double best = std::numeric_limits<double>::infinity();
  Point2D out{-1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const double dx = x + 0.5 - p.x;
      const double dy = y + 0.5 - p.y;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        out = {x + 0.5, y + 0.5};
      }
    }
  }
  return out;
}

int MinL1ToMask(Point2D p, const BinaryMask& mask) {
  const int px = static_cast<int>(std::floor(p.x));
  const int py = static_cast<int>(std::floor(p.y));
  int best = std::numeric_limits<int>::max();
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) best = std::min(best, std::abs(x - px) + std::abs(y - py));
    }
  }
  return best;
}

bool InRaster(Point2D p, int w, int h) {
  return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h;
}

}  // namespace

ApproachSequence::ApproachSequence(const SynthSceneSpec& spec) : spec_(spec) {
  if (spec.width < 16 || spec.height < 16) throw Error(ErrorCode::kInvalidSpec, "image too small");
  if (spec.object_radius <= 0 || spec.hand_radius <= 0 || spec.hand_speed <= 0) {
    throw Error(ErrorCode::kInvalidSpec, "radii and speed must be positive");
  }
  if (spec.approach_frames < 1 || spec.hover_frames < 0 || spec.hold_frames < 0 ||
      spec.hover_after < 0) {
    throw Error(ErrorCode::kInvalidSpec, "frame counts must be non-negative");
  }
  if (std::hypot(spec.approach_direction.x, spec.approach_direction.y) == 0) {
    throw Error(ErrorCode::kInvalidSpec, "approach direction must be nonzero");
  }
  if (spec.object_shape == ObjectShape::kDisk && spec.finger_spread >= spec.object_radius - 1) {
    throw Error(ErrorCode::kInvalidSpec, "finger spread must be smaller than the object");
  }
  const int contact = spec.approach_frames + spec.hover_frames;
  const int total = contact + 1 + spec.hold_frames;
  annotations_.resize(total);
  in_contact_.assign(total, false);
  for (int t = 0; t < total; ++t) {
    auto& ann = annotations_[t];
    ann.frame_index = t;
    const BinaryMask object = ObjectMask(t);
    if (object.any()) ann.object_mask = object;
    if (HandVisible(t)) {
      const BinaryMask hand = HandMask(t);
      bool overlap = false;
      for (size_t i = 0; i < hand.bits().size(); ++i) {
        if (hand.bits()[i] && object.bits()[i]) {
          overlap = true;
          break;
        }
      }
      in_contact_[t] = overlap;
      if (spec.premature_contact_offset > 0 && t == contact - spec.premature_contact_offset) {
        in_contact_[t] = true;
      }
      ann.right_hand = extraction::HandDetection{hand, in_contact_[t] ? 0.95 : 0.2};
      ann.right_hand_count = 1;
    }
  }
  if (!in_contact_[contact]) {
    throw Error(ErrorCode::kInvalidSpec, "hand does not reach the object at the contact frame");
  }
  ComputeGroundTruth();
}

Point2D ApproachSequence::ObjectCenter(int frame) const {
  const int dt = frame - (spec_.approach_frames + spec_.hover_frames);
  return {spec_.object_center.x + spec_.object_velocity.x * dt,
          spec_.object_center.y + spec_.object_velocity.y * dt};
}

Point2D ApproachSequence::HandCenter(int frame) const {
  const Point2D u = Normalized(spec_.approach_direction);
  // Offset from the object center that puts both fingertips one pixel inside
  // the object along the approach line.
  double reach = 0.0;
  if (spec_.object_shape == ObjectShape::kDisk) {
    const double r = spec_.object_radius - 1.0;
    reach = std::sqrt(r * r - spec_.finger_spread * spec_.finger_spread);
  } else {
    reach = std::abs(u.x) * spec_.object_radius + std::abs(u.y) * spec_.object_half_height - 1.0;
  }
  const double standoff = spec_.hand_radius + spec_.finger_length + reach;
  const int k = spec_.approach_frames + spec_.hover_frames - frame;
  double travel = 0.0;
  if (k > 0) {
    const int f = spec_.hover_after;
    if (k <= f) {
      travel = spec_.hand_speed * k;
    } else if (k <= f + spec_.hover_frames) {
      travel = spec_.hand_speed * f;
    } else {
      travel = spec_.hand_speed * (k - spec_.hover_frames);
    }
  }
  const Point2D o = ObjectCenter(frame);
  return {o.x - u.x * (standoff + travel), o.y - u.y * (standoff + travel)};
}

FingertipPair ApproachSequence::Fingertips(int frame) const {
  const Point2D u = Normalized(spec_.approach_direction);
  const Point2D v{-u.y, u.x};
  const Point2D h = HandCenter(frame);
  const double ext = spec_.hand_radius + spec_.finger_length;
  const double s = spec_.finger_spread;
  return {{h.x + u.x * ext + v.x * s, h.y + u.y * ext + v.y * s},
          {h.x + u.x * ext - v.x * s, h.y + u.y * ext - v.y * s}};
}

bool ApproachSequence::HandVisible(int frame) const {
  if (spec_.hand_enters_at_contact && frame < spec_.approach_frames + spec_.hover_frames) {
    return false;
  }
  return HandMask(frame).any();
}

BinaryMask ApproachSequence::ObjectMask(int frame) const {
  BinaryMask mask(spec_.width, spec_.height);
  const Point2D o = ObjectCenter(frame);
  if (spec_.object_shape == ObjectShape::kDisk) {
    RasterizeDisk(mask, o, spec_.object_radius);
  } else {
    for (int y = 0; y < spec_.height; ++y) {
      for (int x = 0; x < spec_.width; ++x) {
        if (std::abs(x + 0.5 - o.x) <= spec_.object_radius &&
            std::abs(y + 0.5 - o.y) <= spec_.object_half_height) {
          mask.set(x, y);
        }
      }
    }
  }
  return mask;
}

BinaryMask ApproachSequence::HandMask(int frame) const {
  BinaryMask mask(spec_.width, spec_.height);
  const Point2D h = HandCenter(frame);
  RasterizeDisk(mask, h, spec_.hand_radius);
  const Point2D u = Normalized(spec_.approach_direction);
  const Point2D v{-u.y, u.x};
  const auto [thumb, index] = Fingertips(frame);
  const double base = spec_.hand_radius - 1.0;
  const double s = spec_.finger_spread * 0.6;
  RasterizeSegment(mask, {h.x + u.x * base + v.x * s, h.y + u.y * base + v.y * s}, thumb);
  RasterizeSegment(mask, {h.x + u.x * base - v.x * s, h.y + u.y * base - v.y * s}, index);
  return mask;
}

extraction::FrameAnnotation ApproachSequence::Annotate(int frame) const {
  if (frame < 0 || frame >= num_frames()) {
    throw Error(ErrorCode::kOutOfRange, "frame " + std::to_string(frame) + " outside sequence");
  }
  return annotations_[frame];
}

extraction::HandObservation ApproachSequence::ObserveHand(int frame) const {
  const auto tips = Fingertips(frame);
  return {spec_.hand_pose, tips.first, tips.second};
}

std::vector<std::vector<Point2D>> ApproachSequence::TrackBackward(std::span<const Point2D> points,
                                                                 int from_frame,
                                                                 int max_frames) const {
  std::vector<std::vector<Point2D>> rows;
  const Point2D origin = ObjectCenter(from_frame);
  for (int k = 1; k <= max_frames && from_frame - k >= 0; ++k) {
    const Point2D o = ObjectCenter(from_frame - k);
    std::vector<Point2D> row;
    row.reserve(points.size());
    for (const auto& p : points) row.push_back({p.x + (o.x - origin.x), p.y + (o.y - origin.y)});
    rows.push_back(std::move(row));
  }
  return rows;
}

Image ApproachSequence::RenderFrame(int frame) const {
  Image image(spec_.width, spec_.height);
  FillBackground(image, spec_.seed);
  PaintMask(image, ObjectMask(frame), spec_.object_color);
  if (HandVisible(frame)) PaintMask(image, HandMask(frame), kSkin);
  return image;
}

void ApproachSequence::ComputeGroundTruth() {
  int fc = spec_.approach_frames + spec_.hover_frames;
  while (fc > 0 && in_contact_[fc - 1]) --fc;
  truth_.contact_frame = fc;

  const BinaryMask eroded = NaiveErodeL1(ObjectMask(fc), kTruthErosion);
  if (!eroded.any()) {
    truth_.status = EventStatus::kDiscardedDegenerateMask;
    return;
  }
  const auto tips = Fingertips(fc);
  const FingertipPair projected{NaiveProject(tips.first, eroded), NaiveProject(tips.second, eroded)};
  truth_.contact_points_contact_frame = projected;
  const double base = Distance(tips.first, tips.second);
  const double ratio = base > 0 ? Distance(projected.first, projected.second) / base : -1.0;
  if (ratio < kTruthRatioLo || ratio > kTruthRatioHi) {
    truth_.status = EventStatus::kDiscardedRatio;
    return;
  }
  const Point2D origin = ObjectCenter(fc);
  truth_.status = EventStatus::kDiscardedTimeout;
  for (int k = 1; k <= kTruthLookback; ++k) {
    const int t = fc - k;
    if (t < 0) break;
    const Point2D o = ObjectCenter(t);
    const Point2D a{projected.first.x + (o.x - origin.x), projected.first.y + (o.y - origin.y)};
    const Point2D b{projected.second.x + (o.x - origin.x), projected.second.y + (o.y - origin.y)};
    if (!InRaster(a, spec_.width, spec_.height) || !InRaster(b, spec_.width, spec_.height)) break;
    bool qualifies = true;
    if (HandVisible(t)) {
      const BinaryMask hand = HandMask(t);
      qualifies = MinL1ToMask(a, hand) > kTruthDilation && MinL1ToMask(b, hand) > kTruthDilation;
    }
    if (qualifies) {
      truth_.status = EventStatus::kOk;
      truth_.prediction_frame = t;
      truth_.contact_points_prediction_frame = {a, b};
      return;
    }
  }
}

std::unique_ptr<ApproachSequence> GenerateApproachSequence(const SynthSceneSpec& spec) {
  return std::make_unique<ApproachSequence>(spec);
}

std::vector<SynthSceneSpec> MakeApproachCorpus(const ApproachCorpusSpec& corpus) {
  if (corpus.count < 0) throw Error(ErrorCode::kInvalidSpec, "corpus count must be >= 0");
  const PoseCorpus poses =
      GeneratePoseCorpus({.num_prototypes = 8, .noise_scale = 0.02, .corpus_size = 64, .seed = corpus.seed});
  auto every = [](int i, int n) { return n > 0 && i % n == n - 1; };
  std::vector<SynthSceneSpec> specs;
  for (int i = 0; i < corpus.count; ++i) {
    std::mt19937_64 rng(DeriveSeed(corpus.seed, {static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SynthSceneSpec spec;
    spec.seed = DeriveSeed(corpus.seed, {static_cast<std::uint64_t>(i), 1});
    spec.hand_pose = poses.poses[i % poses.poses.size()];
    const bool rect = i % 4 == 3;
    if (rect) {
      static constexpr Point2D kAxes[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      spec.object_shape = ObjectShape::kRect;
      spec.approach_direction = kAxes[rng() % 4];
      spec.object_radius = 18 + 6 * unit(rng);
      spec.object_half_height = 18 + 6 * unit(rng);
    } else {
      // Within 14 degrees of an axis. Cross4 erosion turns a disk into a
      // shape with corners on the diagonals, where projection collapses
      // fingertip pairs and the ratio gate rejects.
      const double angle = std::numbers::pi / 2 * static_cast<double>(rng() % 4) + 0.5 * (unit(rng) - 0.5);
      spec.approach_direction = {std::cos(angle), std::sin(angle)};
      spec.object_radius = 21 + 5 * unit(rng);
    }
    spec.hand_speed = 2.5 + 1.5 * unit(rng);
    spec.finger_spread = 5 + 2 * unit(rng);
    spec.object_color = {static_cast<std::uint8_t>(40 + rng() % 60), static_cast<std::uint8_t>(90 + rng() % 60),
                         static_cast<std::uint8_t>(160 + rng() % 80)};
    if (i % 3 == 1) spec.object_velocity = {unit(rng) - 0.5, unit(rng) - 0.5};
    if (every(i, corpus.timeout_every)) {
      spec.hover_frames = 50;
      spec.hover_after = 2;
    } else if (every(i, corpus.degenerate_every)) {
      spec.object_shape = ObjectShape::kDisk;
      spec.object_radius = 8.0;
      spec.finger_spread = 4.0;
    } else if (every(i, corpus.ratio_every)) {
      spec.object_shape = ObjectShape::kDisk;
      spec.object_radius = 14.0;
      spec.finger_spread = 7.0;
    }
    // Place the object so the hand at contact lies well inside the frame.
    const Point2D u = Normalized(spec.approach_direction);
    const double margin = std::max(spec.object_radius, spec.object_half_height) + 4;
    const double reach = spec.hand_radius + spec.finger_length + spec.object_radius + 2;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Point2D o{margin + (spec.width - 2 * margin) * unit(rng),
                      margin + (spec.height - 2 * margin) * unit(rng)};
      const Point2D h{o.x - u.x * reach, o.y - u.y * reach};
      const double m = spec.hand_radius + 2;
      const double drift = std::hypot(spec.object_velocity.x, spec.object_velocity.y) * spec.hold_frames;
      if (h.x > m && h.y > m && h.x < spec.width - m && h.y < spec.height - m && o.x - margin > drift &&
          o.y - margin > drift && o.x + margin + drift < spec.width && o.y + margin + drift < spec.height) {
        spec.object_center = o;
        break;
      }
    }
    specs.push_back(spec);
  }
  return specs;
}

namespace {

HandPose MakePrototype(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  static constexpr double kBaseAngle[5] = {-1.0, -0.35, 0.0, 0.3, 0.6};
  static constexpr double kBaseRadius[5] = {0.35, 0.9, 0.95, 0.9, 0.8};
  static constexpr double kSegments[5][3] = {
      {0.35, 0.3, 0.25}, {0.45, 0.3, 0.22}, {0.5, 0.32, 0.24}, {0.45, 0.3, 0.22}, {0.35, 0.24, 0.2}};
  static constexpr double kFlexShare[3] = {0.6, 1.0, 0.8};
  HandPose pose;
  const double yaw = 0.8 * (unit(rng) - 0.5);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  int joint = 1;
  for (int f = 0; f < 5; ++f) {
    const double a = kBaseAngle[f] + 0.2 * (unit(rng) - 0.5);
    const double curl = 1.5 * unit(rng);
    double p[3] = {kBaseRadius[f] * std::cos(a), kBaseRadius[f] * std::sin(a), 0.0};
    double theta = 0.0;
    auto emit = [&] {
      pose.at(joint, 0) = cy * p[0] - sy * p[1];
      pose.at(joint, 1) = sy * p[0] + cy * p[1];
      pose.at(joint, 2) = p[2];
      ++joint;
    };
    emit();
    for (int s = 0; s < 3; ++s) {
      theta += curl * kFlexShare[s];
      p[0] += kSegments[f][s] * std::cos(a) * std::cos(theta);
      p[1] += kSegments[f][s] * std::sin(a) * std::cos(theta);
      p[2] -= kSegments[f][s] * std::sin(theta);
      emit();
    }
  }
  return pose;
}

}  // namespace

PoseCorpus GeneratePoseCorpus(const SynthPoseSpec& spec) {
  if (spec.num_prototypes < 1 || spec.corpus_size < 0 || spec.noise_scale < 0) {
    throw Error(ErrorCode::kInvalidSpec, "pose corpus needs >= 1 prototype and non-negative sizes");
  }
  PoseCorpus corpus;
  std::mt19937_64 proto_rng(DeriveSeed(spec.seed, {0}));
  for (int p = 0; p < spec.num_prototypes; ++p) corpus.prototypes.push_back(MakePrototype(proto_rng));
  std::mt19937_64 rng(DeriveSeed(spec.seed, {1, spec.sample_stream}));
  std::uniform_int_distribution<int> pick(0, spec.num_prototypes - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  corpus.poses.reserve(spec.corpus_size);
  for (int i = 0; i < spec.corpus_size; ++i) {
    const int p = pick(rng);
    HandPose pose = corpus.prototypes[p];
    for (double& v : pose.joints) v += spec.noise_scale * noise(rng);
    corpus.poses.push_back(pose);
    corpus.assignment.push_back(p);
  }
  return corpus;
}

std::vector<PredictionSample> GeneratePriorDataset(const SynthPriorSpec& spec, const PoseCorpus& poses,
                                                   int n, const TokenizeFn& tokenize) {
  if (n < 0) throw Error(ErrorCode::kInvalidSpec, "sample count must be >= 0");
  if (spec.image_size < 32 || spec.min_radius <= 0 || spec.max_radius < spec.min_radius ||
      spec.max_radius * 2 + 8 > spec.image_size || spec.num_colors < 1) {
    throw Error(ErrorCode::kInvalidSpec, "invalid prior scene spec");
  }
  if (poses.prototypes.empty()) throw Error(ErrorCode::kInvalidSpec, "pose corpus has no prototypes");
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{{200, 40, 40},
                                                                        {40, 160, 60},
                                                                        {50, 80, 210},
                                                                        {220, 200, 40},
                                                                        {160, 60, 190},
                                                                        {40, 190, 200},
                                                                        {240, 130, 30},
                                                                        {20, 20, 20}}};
  std::vector<std::vector<int>> by_prototype(poses.prototypes.size());
  for (size_t i = 0; i < poses.assignment.size(); ++i) by_prototype[poses.assignment[i]].push_back(static_cast<int>(i));

  const int size = spec.image_size;
  std::vector<PredictionSample> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(DeriveSeed(spec.seed, {static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = spec.min_radius + (spec.max_radius - spec.min_radius) * unit(rng);
    const Point2D o{r + 2 + (size - 2 * r - 4) * unit(rng), r + 2 + (size - 2 * r - 4) * unit(rng)};
    const int color = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.num_colors));
    const int proto = color % static_cast<int>(poses.prototypes.size());

    Image image(size, size);
    FillBackground(image, DeriveSeed(spec.seed, {static_cast<std::uint64_t>(i), 7}));
    if (spec.draw_hand) {
      constexpr double kHandRadius = 8.0;
      for (int attempt = 0; attempt < 32; ++attempt) {
        const Point2D h{kHandRadius + (size - 2 * kHandRadius) * unit(rng),
                        kHandRadius + (size - 2 * kHandRadius) * unit(rng)};
        if (Distance(h, o) > r + kHandRadius + 12) {
          BinaryMask hand(size, size);
          RasterizeDisk(hand, h, kHandRadius);
          PaintMask(image, hand, kSkin);
          break;
        }
      }
    }
    BinaryMask object(size, size);
    RasterizeDisk(object, o, r);
    PaintMask(image, object, kPalette[color % kPalette.size()]);

    PredictionSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%06d", i);
    s.sample_id = id;
    s.video_id = "synth";
    s.contact_frame = 1;
    s.prediction_frame = 0;
    s.image = std::move(image);
    s.contact_points = {{o.x + r * std::cos(kThumbBearing), o.y + r * std::sin(kThumbBearing)},
                        {o.x + r * std::cos(kIndexBearing), o.y + r * std::sin(kIndexBearing)}};
    const auto& members = by_prototype[proto];
    s.raw_hand_pose = members.empty() ? poses.prototypes[proto]
                                      : poses.poses[members[rng() % members.size()]];
    if (tokenize) s.hand_tokens = tokenize(s.raw_hand_pose);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace graspprior::synth
