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

#include "json.hpp"

namespace graspprior::cli {

// Environment variable naming the default output directory.
inline constexpr char kOutputEnvVar[] = "GRASPPRIOR_OUT";

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;  // --seed overrides every section seed when set
  std::string out_dir;
  std::string device = "cpu";
  std::string log_level = "info";
  // Parsed --config file: one object per section.
  nlohmann::json config = nlohmann::json::object();
  // "section.key=value" overrides applied after the file; values parse as
  // JSON and fall back to plain strings.
  std::vector<std::string> overrides;
};

// --out, else $GRASPPRIOR_OUT, else "runs".
std::string DefaultOutputDir(const std::string& flag_value);
nlohmann::json LoadConfigFile(const std::string& path);
// Validates device and log level and installs the log level.
void ApplyGlobalOptions(const GlobalOptions& global);

struct ExtractOptions {
  std::string input;  // corpus spec JSON; empty uses the "corpus" section
};

struct TrainTokenizerOptions {
  std::string manifest;  // hand poses from an extracted manifest; empty uses the "poses" section
};

struct TrainPriorOptions {
  std::string manifest;
  std::string eval_manifest;
  int synthetic = 0;  // generate this many scenes instead of reading a manifest
  std::string tokenizer;
  std::string resume;
  bool no_contact_loss = false;
  bool no_hand_loss = false;
  bool hand_regression = false;
};

struct EvalContactOptions {
  std::string manifest;
  std::string eval_manifest;
  int synthetic = 0;
  std::string checkpoint;  // prior checkpoint whose encoder is evaluated; empty uses pooled pixels
  int overlays = 8;
};

struct TrainPolicyOptions {
  std::string checkpoint;  // prior checkpoint encoder; empty uses pooled pixels
};

struct ReportOptions {
  std::vector<std::string> runs;  // run directories holding logs
};

// Each command writes into global.out_dir, starting with config.json, and
// throws graspprior::Error on invalid input before writing anything else.
void RunExtract(const GlobalOptions& global, const ExtractOptions& options);
void RunTrainTokenizer(const GlobalOptions& global, const TrainTokenizerOptions& options);
void RunTrainPrior(const GlobalOptions& global, const TrainPriorOptions& options);
void RunEvalContact(const GlobalOptions& global, const EvalContactOptions& options);
void RunTrainPolicy(const GlobalOptions& global, const TrainPolicyOptions& options);
void RunReport(const GlobalOptions& global, const ReportOptions& options);

}  // namespace graspprior::cli
