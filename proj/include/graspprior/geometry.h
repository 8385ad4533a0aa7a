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
#include <string>
#include <vector>

#include "graspprior/types.h"

namespace graspprior::geometry {

// Row-major boolean raster. Reads outside the raster return background.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty_raster() const { return width_ == 0 || height_ == 0; }

  bool at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
    return bits_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool value = true);

  int count() const;
  bool any() const { return count() > 0; }
  BinaryMask complement() const;
  // Foreground of *this is a subset of the foreground of other.
  bool IsSubsetOf(const BinaryMask& other) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class StructuringElement { kCross4, kSquare8 };

// Morphology over a k-iteration 3x3 element. Implemented with exact two-pass
// distance transforms (city-block for cross4, chessboard for square8).
BinaryMask Erode(const BinaryMask& mask, int iterations,
                 StructuringElement element = StructuringElement::kCross4);
BinaryMask Dilate(const BinaryMask& mask, int iterations,
                  StructuringElement element = StructuringElement::kCross4);

// Per-pixel distance to the nearest foreground pixel under the element's
// metric; -1 everywhere when the mask is empty.
std::vector<int> DistanceToForeground(const BinaryMask& mask, StructuringElement element);

// Center of the foreground pixel nearest to `point` (Euclidean), ties broken
// by smallest (y, x). Throws Error(kEmptyMask) on an empty mask.
Point2D ProjectPointToMask(Point2D point, const BinaryMask& mask);

// Accepts when lo <= |projected| / |original| <= hi. A zero original distance
// is rejected.
bool DistanceRatioGate(const FingertipPair& original, const FingertipPair& projected,
                       double lo = 0.3, double hi = 1.7);

// Floor-indexed lookup; out-of-raster points are background.
bool MaskContains(const BinaryMask& mask, Point2D point);

// 8-bit grayscale PGM, 0 = background, 255 = foreground.
void WriteMaskPgm(const BinaryMask& mask, const std::string& path);
BinaryMask ReadMaskPgm(const std::string& path);

}  // namespace graspprior::geometry
