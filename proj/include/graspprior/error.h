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

#include <stdexcept>
#include <string>
#include <string_view>

namespace graspprior {

enum class ErrorCode {
  kEmptyMask,
  kOutOfRange,
  kTokenOutOfRange,
  kNonFiniteInput,
  kShapeMismatch,
  kModeMismatch,
  kDimensionMismatch,
  kEmptyCorpus,
  kEmptyDataset,
  kInvalidSpec,
  kInvalidConfig,
  kMissingAnnotation,
  kIo,
  kEnvironment,
};

std::string_view ToString(ErrorCode code);

// Every failure raised by the library carries a code so callers can map it
// to a rejection status or an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace graspprior
