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

#include "graspprior/error.h"
#include "json.hpp"

namespace graspprior {

// Throws kInvalidConfig if `given` is not an object or holds a key that
// `defaults` lacks.
inline void RejectUnknownKeys(const nlohmann::json& given, const nlohmann::ordered_json& defaults,
                              const std::string& section) {
  if (given.is_null()) return;
  if (!given.is_object()) throw Error(ErrorCode::kInvalidConfig, section + " config must be an object");
  for (const auto& [key, value] : given.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::kInvalidConfig, "unknown " + section + " key '" + key + "'");
  }
}

}  // namespace graspprior
