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

#include <string>

#include "graspprior/types.h"

namespace graspprior {

// Binary PPM (P6), 8 bits per channel.
void WritePpm(const Image& image, const std::string& path);
Image ReadPpm(const std::string& path);

// Bilinear resample with pixel-center alignment.
Image ResizeBilinear(const Image& image, int width, int height);

// Largest centered square crop.
Image CenterCropSquare(const Image& image, int* offset_x = nullptr, int* offset_y = nullptr);

}  // namespace graspprior
