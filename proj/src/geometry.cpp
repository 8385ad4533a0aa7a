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

#include "graspprior/geometry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "graspprior/error.h"

namespace graspprior::geometry {
namespace {

constexpr int kFar = std::numeric_limits<int>::max() / 4;

// Two-pass chamfer transform. `dist` holds 0 on sources and a finite upper
// bound elsewhere; the passes are exact for both 3x3 metrics.
void ChamferPasses(std::vector<int>& dist, int w, int h, StructuringElement element) {
  const bool diag = element == StructuringElement::kSquare8;
  auto at = [&](int x, int y) -> int& { return dist[static_cast<size_t>(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int d = at(x, y);
      if (x > 0) d = std::min(d, at(x - 1, y) + 1);
      if (y > 0) {
        d = std::min(d, at(x, y - 1) + 1);
        if (diag && x > 0) d = std::min(d, at(x - 1, y - 1) + 1);
        if (diag && x + 1 < w) d = std::min(d, at(x + 1, y - 1) + 1);
      }
      at(x, y) = d;
    }
  }
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      int d = at(x, y);
      if (x + 1 < w) d = std::min(d, at(x + 1, y) + 1);
      if (y + 1 < h) {
        d = std::min(d, at(x, y + 1) + 1);
        if (diag && x + 1 < w) d = std::min(d, at(x + 1, y + 1) + 1);
        if (diag && x > 0) d = std::min(d, at(x - 1, y + 1) + 1);
      }
      at(x, y) = d;
    }
  }
}

}  // namespace

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height), bits_(static_cast<size_t>(width) * height, 0) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kShapeMismatch, "mask dimensions must be positive");
  }
}

void BinaryMask::set(int x, int y, bool value) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  bits_[static_cast<size_t>(y) * width_ + x] = value ? 1 : 0;
}

int BinaryMask::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

bool BinaryMask::IsSubsetOf(const BinaryMask& other) const {
  if (width_ != other.width_ || height_ != other.height_) return false;
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

std::vector<int> DistanceToForeground(const BinaryMask& mask, StructuringElement element) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> dist(static_cast<size_t>(w) * h, kFar);
  if (!mask.any()) {
    std::fill(dist.begin(), dist.end(), -1);
    return dist;
  }
  for (size_t i = 0; i < dist.size(); ++i) {
    if (mask.bits()[i]) dist[i] = 0;
  }
  ChamferPasses(dist, w, h, element);
  return dist;
}

BinaryMask Dilate(const BinaryMask& mask, int iterations, StructuringElement element) {
  if (iterations < 0) throw Error(ErrorCode::kOutOfRange, "iterations must be >= 0");
  if (iterations == 0 || !mask.any()) return mask;
  const auto dist = DistanceToForeground(mask, element);
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (dist[static_cast<size_t>(y) * mask.width() + x] <= iterations) out.set(x, y);
    }
  }
  return out;
}

BinaryMask Erode(const BinaryMask& mask, int iterations, StructuringElement element) {
  if (iterations < 0) throw Error(ErrorCode::kOutOfRange, "iterations must be >= 0");
  if (iterations == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  // Distance to the nearest background pixel, where the ring just outside
  // the raster counts as background. Under either metric the nearest outside
  // pixel lies straight across the closest edge.
  std::vector<int> dist(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) {
        dist[static_cast<size_t>(y) * w + x] = std::min({x + 1, w - x, y + 1, h - y});
      }
    }
  }
  ChamferPasses(dist, w, h, element);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (dist[static_cast<size_t>(y) * w + x] > iterations) out.set(x, y);
    }
  }
  return out;
}

Point2D ProjectPointToMask(Point2D point, const BinaryMask& mask) {
  if (!std::isfinite(point.x) || !std::isfinite(point.y)) {
    throw Error(ErrorCode::kNonFiniteInput, "projection query must be finite");
  }
  const int w = mask.width();
  const int h = mask.height();
  // Rows are visited in order of increasing vertical gap so the search can
  // stop once the gap alone exceeds the best distance found.
  const int start_row = std::clamp(static_cast<int>(std::floor(point.y)), 0, h - 1);
  double best = std::numeric_limits<double>::infinity();
  int best_x = -1;
  int best_y = -1;
  auto consider_row = [&](int y) {
    const double dy = (y + 0.5) - point.y;
    const double dy2 = dy * dy;
    if (dy2 > best) return;
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const double dx = (x + 0.5) - point.x;
      const double d = dx * dx + dy2;
      if (d < best || (d == best && (y < best_y || (y == best_y && x < best_x)))) {
        best = d;
        best_x = x;
        best_y = y;
      }
    }
  };
  consider_row(start_row);
  // Vertical gaps grow monotonically with the offset on both sides.
  for (int off = 1; start_row - off >= 0 || start_row + off < h; ++off) {
    double nearest_gap = std::numeric_limits<double>::infinity();
    if (start_row - off >= 0) nearest_gap = std::abs(point.y - (start_row - off + 0.5));
    if (start_row + off < h) {
      nearest_gap = std::min(nearest_gap, std::abs((start_row + off + 0.5) - point.y));
    }
    if (nearest_gap * nearest_gap > best) break;
    if (start_row - off >= 0) consider_row(start_row - off);
    if (start_row + off < h) consider_row(start_row + off);
  }
  if (best_x < 0) throw Error(ErrorCode::kEmptyMask, "cannot project onto an empty mask");
  return {best_x + 0.5, best_y + 0.5};
}

bool DistanceRatioGate(const FingertipPair& original, const FingertipPair& projected, double lo,
                       double hi) {
  const double base = Distance(original.first, original.second);
  if (!(base > 0.0)) return false;
  const double ratio = Distance(projected.first, projected.second) / base;
  return ratio >= lo && ratio <= hi;
}

bool MaskContains(const BinaryMask& mask, Point2D point) {
  if (!std::isfinite(point.x) || !std::isfinite(point.y)) return false;
  const double fx = std::floor(point.x);
  const double fy = std::floor(point.y);
  if (fx < 0 || fy < 0 || fx >= mask.width() || fy >= mask.height()) return false;
  return mask.at(static_cast<int>(fx), static_cast<int>(fy));
}

void WriteMaskPgm(const BinaryMask& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (auto b : mask.bits()) out.put(static_cast<char>(b ? 255 : 0));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

BinaryMask ReadMaskPgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255) {
    throw Error(ErrorCode::kIo, "not an 8-bit binary PGM: " + path);
  }
  in.get();
  BinaryMask mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int v = in.get();
      if (v == std::char_traits<char>::eof()) throw Error(ErrorCode::kIo, "truncated PGM: " + path);
      mask.set(x, y, v >= 128);
    }
  }
  return mask;
}

}  // namespace graspprior::geometry
