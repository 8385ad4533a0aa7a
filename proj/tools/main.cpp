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

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "graspprior/commands.h"
#include "graspprior/error.h"

namespace cli = graspprior::cli;

int main(int argc, char** argv) {
  CLI::App app{"graspprior: manipulation priors from egocentric approach sequences"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions global;
  std::string out_flag, config_path;
  app.add_option("--seed", global.seed, "Base seed; overrides every section seed");
  app.add_option("--out", out_flag, std::string("Output directory (default $") + cli::kOutputEnvVar + " or runs)");
  app.add_option("--config", config_path, "JSON config file, one object per section");
  app.add_option("--set", global.overrides, "Override one config value: section.key=value")->take_all();
  app.add_option("--log-level", global.log_level, "trace, debug, info, warn, error or off");
  app.add_option("--device", global.device, "Compute device; only cpu is supported");

  cli::ExtractOptions extract;
  auto* extract_cmd = app.add_subcommand("extract", "Extract contact events into a manifest and images");
  extract_cmd->add_option("--input", extract.input, "Synthetic corpus spec JSON");

  cli::TrainTokenizerOptions tokenizer;
  auto* tokenizer_cmd = app.add_subcommand("train-tokenizer", "Train the hand-pose tokenizer");
  tokenizer_cmd->add_option("--manifest", tokenizer.manifest, "Take poses from this manifest and write a tokenized copy");

  cli::TrainPriorOptions prior;
  auto* prior_cmd = app.add_subcommand("train-prior", "Train the prior model");
  prior_cmd->add_option("--manifest", prior.manifest, "Training manifest");
  prior_cmd->add_option("--eval-manifest", prior.eval_manifest, "Held-out manifest");
  prior_cmd->add_option("--synthetic", prior.synthetic, "Generate this many synthetic scenes instead");
  prior_cmd->add_option("--tokenizer", prior.tokenizer, "Tokenizer checkpoint");
  prior_cmd->add_option("--resume", prior.resume, "Continue from this training checkpoint");
  prior_cmd->add_flag("--no-contact-loss", prior.no_contact_loss, "Disable the contact head");
  prior_cmd->add_flag("--no-hand-loss", prior.no_hand_loss, "Disable the hand head");
  prior_cmd->add_flag("--hand-regression", prior.hand_regression, "Regress raw hand poses instead of tokens");

  cli::EvalContactOptions eval;
  auto* eval_cmd = app.add_subcommand("eval-contact", "Score a frozen encoder with the contact cVAE");
  eval_cmd->add_option("--manifest", eval.manifest, "Training manifest");
  eval_cmd->add_option("--eval-manifest", eval.eval_manifest, "Evaluation manifest");
  eval_cmd->add_option("--synthetic", eval.synthetic, "Generate this many synthetic scenes instead");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Prior checkpoint; pooled pixels when omitted");
  eval_cmd->add_option("--overlays", eval.overlays, "Number of overlay images to write");

  cli::TrainPolicyOptions policy;
  auto* policy_cmd = app.add_subcommand("train-policy", "Behavior cloning over a frozen encoder");
  policy_cmd->add_option("--checkpoint", policy.checkpoint, "Prior checkpoint; pooled pixels when omitted");

  cli::ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Tables and curves from run directories");
  report_cmd->add_option("runs", report.runs, "Run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    global.seed_given = app.count("--seed") > 0;
    global.out_dir = cli::DefaultOutputDir(out_flag);
    if (!config_path.empty()) global.config = cli::LoadConfigFile(config_path);
    cli::ApplyGlobalOptions(global);
    if (extract_cmd->parsed()) cli::RunExtract(global, extract);
    if (tokenizer_cmd->parsed()) cli::RunTrainTokenizer(global, tokenizer);
    if (prior_cmd->parsed()) cli::RunTrainPrior(global, prior);
    if (eval_cmd->parsed()) cli::RunEvalContact(global, eval);
    if (policy_cmd->parsed()) cli::RunTrainPolicy(global, policy);
    if (report_cmd->parsed()) cli::RunReport(global, report);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
