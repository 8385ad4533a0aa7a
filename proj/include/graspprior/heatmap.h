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

#include <span>
#include <string>
#include <vector>

#include "graspprior/types.h"

namespace graspprior::contact_eval {

// Row-major non-negative grid. Cell (x, y) has its center at (x+0.5, y+0.5)
// in heatmap coordinates.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double sum() const;
};

// Sum of unnormalized isotropic Gaussians, one per point.
Heatmap RenderHeatmap(std::span<const Point2D> points, double sigma = 3.0, int height = 32, int width = 32);

// Image pixel coordinates to heatmap coordinates, scaling each axis.
Point2D ImageToHeatmap(Point2D p, int image_width, int image_height, int grid_width = 32, int grid_height = 32);

// Histogram intersection of the two maps after each is scaled to unit sum.
// 0 when either map sums to 0.
double Sim(const Heatmap& m, const Heatmap& m_hat);

// Sum over cells where m_hat > 0 of the standardized value of m (population
// statistics over every cell). 0 when m is constant or m_hat has no positive
// cell.
double Nss(const Heatmap& m, const Heatmap& m_hat);

// Count of points per cell (heatmap coordinates); points off the grid are
// dropped.
Heatmap FixationMap(std::span<const Point2D> points, int height = 32, int width = 32);

}  // namespace graspprior::contact_eval
