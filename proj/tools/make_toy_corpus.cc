// Copyright (c) 2026 The prosody-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes a synthetic multispeaker corpus with its manifests and a matching
// experiment config.
//
//   make_toy_corpus --output toy --speakers 4 --utterances 10

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "vc/config.h"
#include "vc/toy_corpus.h"

int main(int argc, char** argv) {
  CLI::App app{"synthetic toy corpus for the voice conversion pipeline"};
  std::string output;
  vc::ToyExperimentSpec spec;
  vc::ExperimentConfig config;
  std::string strategy = "ttp";
  app.add_option("--output", output, "directory to create")->required();
  app.add_option("--speakers", spec.tts_speakers, "TTS pretraining speakers")
      ->check(CLI::PositiveNumber);
  app.add_option("--utterances", spec.tts_utterances, "utterances per TTS speaker")
      ->check(CLI::PositiveNumber);
  app.add_option("--target-utterances", spec.target_utterances)->check(CLI::PositiveNumber);
  app.add_option("--source-utterances", spec.source_utterances)->check(CLI::PositiveNumber);
  app.add_option("--seed", spec.seed, "corpus and experiment seed");
  app.add_option("--strategy", strategy)->check(CLI::IsMember({"baseline", "spt", "ttp"}));
  app.add_option("--pretrain-steps", config.training.pretrain_steps);
  app.add_option("--tp-steps", config.training.tp_pretrain_steps);
  app.add_option("--finetune-steps", config.training.finetune_steps);
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  try {
    const vc::ToyExperiment toy = vc::WriteToyExperiment(output, spec);
    auto rel = [&](const std::string& p) { return fs::relative(p, output).string(); };
    config.name = "toy";
    config.seed = spec.seed;
    config.strategy = vc::ParseStrategy(strategy);
    config.output_dir = "runs/" + strategy;
    config.manifests = {{"tts", rel(toy.tts_manifest)},
                        {"target", rel(toy.target_manifest)},
                        {"source", rel(toy.source_manifest)},
                        {"reference", rel(toy.reference_manifest)}};
    config.recognizer.charset = vc::kToyCharset;
    config.Validate();
    const std::string path = (fs::path(output) / "config.json").string();
    vc::WriteFileAtomic(path, vc::ConfigToJson(config) + "\n");
    std::cout << "wrote " << path << " (target speaker " << toy.target_speaker << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
