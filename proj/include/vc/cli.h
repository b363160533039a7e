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

#ifndef VC_CLI_H_
#define VC_CLI_H_

#include <optional>
#include <string>
#include <vector>

#include "vc/config.h"
#include "vc/eval.h"
#include "vc/viz.h"

namespace vc::cli {

// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::string> strategy;
  bool freeze_refenc = false;
  std::optional<std::string> representation;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output;
};

ExperimentConfig ResolveConfig(const std::string& config_path, const Overrides& overrides);

// Artifact locations under an output directory.
std::string StageCheckpointPath(const std::string& output_dir, int stage,
                                const std::string& stage_name);
std::string StageLogPath(const std::string& output_dir, int stage, const std::string& stage_name);
std::string FinalCheckpointPath(const std::string& output_dir);
// Tab-separated silhouette of RefEnc embeddings over the TTS corpus, one row
// per stage trained by a model with GST.
std::string SpeakerSeparationPath(const std::string& output_dir);
std::string MelArtifactPath(const std::string& dir, const std::string& utterance_id);

struct TrainSummary {
  std::string final_checkpoint;
  int stages_run = 0;
  int stages_resumed = 0;  // loaded from matching stage checkpoints
};

// Runs every stage of the strategy's plan. A stage checkpoint left by an
// earlier run with the same config hash is reused instead of retrained.
TrainSummary Train(const ExperimentConfig& config);

struct ConvertSummary {
  int converted = 0;
  int failed = 0;
  std::string traces_path;
};

// Writes one mel artifact per source utterance plus traces.jsonl. A failing
// utterance gets an error trace and the rest of the set still runs.
ConvertSummary Convert(const ExperimentConfig& config, const std::string& checkpoint_path,
                       const std::string& source_manifest, const std::string& output_dir);

// Scores every reference utterance that has a converted artifact and writes
// report.txt and report.jsonl.
MetricReport Evaluate(const ExperimentConfig& config, const std::string& converted_dir,
                      const std::string& reference_manifest, const std::string& output_dir);

struct VisualizeSummary {
  EmbeddingSet embeddings;
  Matrix coordinates;
  double clusterness = 0.0;
};

// Writes <mode>_<method>.tsv, .svg and .json under output_dir.
VisualizeSummary Visualize(const ExperimentConfig& config, const std::string& checkpoint_path,
                           const std::string& manifest, EmbeddingSource source,
                           ProjectionMethod method, const std::string& output_dir);

// Parses argv and dispatches. Returns 0 on success, 2 on usage errors and 1
// on runtime failures.
int Run(int argc, const char* const* argv);

}  // namespace vc::cli

#endif  // VC_CLI_H_
