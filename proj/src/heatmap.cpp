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

#include "graspprior/heatmap.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graspprior/error.h"

namespace graspprior::contact_eval {

double Heatmap::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

Heatmap RenderHeatmap(std::span<const Point2D> points, double sigma, int height, int width) {
  if (!(sigma > 0)) throw Error(ErrorCode::kOutOfRange, "sigma must be positive");
  if (width < 1 || height < 1) throw Error(ErrorCode::kShapeMismatch, "heatmap must have at least one cell");
  Heatmap map(width, height);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::kNonFiniteInput, "non-finite heatmap point");
    for (int y = 0; y < height; ++y) {
      const double dy = y + 0.5 - p.y;
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - p.x;
        map.at(x, y) += std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return map;
}

Point2D ImageToHeatmap(Point2D p, int image_width, int image_height, int grid_width, int grid_height) {
  return {p.x * grid_width / image_width, p.y * grid_height / image_height};
}

namespace {

void CheckShapes(const Heatmap& a, const Heatmap& b) {
  if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "heatmaps differ in shape");
  }
}

}  // namespace

double Sim(const Heatmap& m, const Heatmap& m_hat) {
  CheckShapes(m, m_hat);
  const double n = m.sum();
  const double n_hat = m_hat.sum();
  if (n == 0.0 || n_hat == 0.0) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < m.values.size(); ++i) total += std::min(m.values[i] / n, m_hat.values[i] / n_hat);
  return total;
}

double Nss(const Heatmap& m, const Heatmap& m_hat) {
  CheckShapes(m, m_hat);
  if (m.values.empty()) return 0.0;
  // Exact zero-variance test; the rounded mean of a constant map can differ
  // from its value.
  const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
  if (*lo == *hi) return 0.0;
  const double count = static_cast<double>(m.values.size());
  const double mean = m.sum() / count;
  double var = 0.0;
  for (double v : m.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  double total = 0.0;
  for (size_t i = 0; i < m.values.size(); ++i) {
    if (m_hat.values[i] > 0) total += (m.values[i] - mean) / sd;
  }
  return total;
}

Heatmap FixationMap(std::span<const Point2D> points, int height, int width) {
  Heatmap out(width, height);
  for (const Point2D& p : points) {
    const double x = std::floor(p.x), y = std::floor(p.y);
    if (x >= 0 && y >= 0 && x < width && y < height) out.at(static_cast<int>(x), static_cast<int>(y)) += 1.0;
  }
  return out;
}

}  // namespace graspprior::contact_eval
