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
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace graspprior {

// Image-frame coordinates in pixels. Pixel (i, j) covers [i, i+1) x [j, j+1),
// so its center is (i + 0.5, j + 0.5).
struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double Distance(Point2D a, Point2D b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Thumb first, index second.
using FingertipPair = std::pair<Point2D, Point2D>;

inline constexpr int kNumJoints = 21;
inline constexpr int kPoseDim = kNumJoints * 3;

// Wrist-relative joint positions, row-major (joint, xyz).
struct HandPose {
  std::array<double, kPoseDim> joints{};

  double& at(int joint, int axis) { return joints[joint * 3 + axis]; }
  double at(int joint, int axis) const { return joints[joint * 3 + axis]; }
  bool IsFinite() const {
    for (double v : joints) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const HandPose&, const HandPose&) = default;
};

// Mean Euclidean distance between corresponding joints.
inline double MeanJointError(const HandPose& a, const HandPose& b) {
  double total = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    const double dx = a.at(j, 0) - b.at(j, 0);
    const double dy = a.at(j, 1) - b.at(j, 1);
    const double dz = a.at(j, 2) - b.at(j, 2);
    total += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return total / kNumJoints;
}

struct TokenSequence {
  std::vector<int> tokens;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &rgb[(static_cast<size_t>(y) * width + x) * 3];
  }
  void Set(int x, int y, std::array<std::uint8_t, 3> c) {
    auto* p = pixel(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace graspprior
