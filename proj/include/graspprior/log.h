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

// Thin wrapper over spdlog. Callers that include libtorch cannot include
// spdlog directly because libtorch ships its own fmt headers.
namespace graspprior::log {

// Throws kInvalidConfig for names other than trace, debug, info, warn,
// error and off.
void SetLevel(const std::string& name);
void Info(const std::string& message);
void Debug(const std::string& message);

// printf-style formatting into a std::string.
[[gnu::format(printf, 1, 2)]] std::string Format(const char* format, ...);

}  // namespace graspprior::log
