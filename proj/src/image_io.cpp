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

#include "graspprior/image_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "graspprior/error.h"

namespace graspprior {

void WritePpm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

Image ReadPpm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w < 1 || h < 1 || maxval != 255) {
    throw Error(ErrorCode::kIo, "not an 8-bit binary PPM: " + path);
  }
  in.get();
  Image image(w, h);
  in.read(reinterpret_cast<char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.rgb.size())) {
    throw Error(ErrorCode::kIo, "truncated PPM: " + path);
  }
  return image;
}

Image ResizeBilinear(const Image& image, int width, int height) {
  if (width == image.width && height == image.height) return image;
  Image out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - wy) * ((1 - wx) * image.pixel(x0, y0)[c] + wx * image.pixel(x1, y0)[c]) +
                         wy * ((1 - wx) * image.pixel(x0, y1)[c] + wx * image.pixel(x1, y1)[c]);
        out.pixel(x, y)[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Image CenterCropSquare(const Image& image, int* offset_x, int* offset_y) {
  const int side = std::min(image.width, image.height);
  const int ox = (image.width - side) / 2;
  const int oy = (image.height - side) / 2;
  if (offset_x) *offset_x = ox;
  if (offset_y) *offset_y = oy;
  Image out(side, side);
  for (int y = 0; y < side; ++y) {
    std::copy_n(image.pixel(ox, oy + y), side * 3, out.pixel(0, y));
  }
  return out;
}

}  // namespace graspprior
