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

#ifndef VC_CONFIG_H_
#define VC_CONFIG_H_

// Experiment configuration: one JSON file describes features, model, stage
// budgets, synthesis and evaluation. Unknown keys and ill-typed values are
// rejected at load time, before any compute.

#include <cstdint>
#include <map>
#include <string>

#include "vc/data.h"
#include "vc/model.h"
#include "vc/recognizer.h"

namespace vc {

struct RecognizerConfig {
  std::string charset = "abcdefghijklmnopqrstuvwxyz '";
  int num_codes = 32;             // frame-code vocabulary
  int codebook_iterations = 50;
  double noise_rate = 0.0;        // symbol substitution rate at conversion
};

struct TrainingConfig {
  int pretrain_steps = 2000;      // GST-TTS / baseline stage 1
  int tp_pretrain_steps = 500;    // TTP stage 2
  int finetune_steps = 300;       // every target-speaker stage
  double learning_rate = 3e-3;
  double finetune_lr_scale = 0.1;
  int warmup_steps = 50;
  double final_lr_fraction = 0.05;
  double grad_clip = 1.0;
  int batch_size = 0;             // 0: the whole corpus every step
  int log_every = 50;
};

struct SynthesisConfig {
  int max_frames = 400;
  int griffin_lim_iterations = 32;
};

enum class SelectionMode { kParallelReference, kNoReference };
const char* SelectionModeName(SelectionMode mode);
SelectionMode ParseSelectionMode(const std::string& name);

struct EvaluationConfig {
  int cepstrum_order = 24;
  double f0_min = 60.0;
  double f0_max = 500.0;
  bool log_f0 = false;
  SelectionMode selection = SelectionMode::kParallelReference;
  std::string hypotheses;  // optional JSON Lines of {utterance_id, text}
};

enum class Strategy { kBaseline, kSpt, kTtp };
const char* StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);  // throws ValidationError

struct ExperimentConfig {
  std::string name = "experiment";
  uint64_t seed = 1;
  Strategy strategy = Strategy::kTtp;
  bool freeze_refenc = false;
  ContentKind representation = ContentKind::kText;
  std::string output_dir = "runs/experiment";
  int workers = 1;
  // Manifest path per role name ("asr", "tts", "target", "source") plus an
  // optional "reference" set holding target renditions for evaluation.
  std::map<std::string, std::string> manifests;
  FeatureConfig features;
  RecognizerConfig recognizer;
  ModelConfig model;
  TrainingConfig training;
  SynthesisConfig synthesis;
  EvaluationConfig evaluation;

  void Validate() const;
  bool has_manifest(const std::string& role) const { return manifests.count(role) > 0; }
  const std::string& manifest(const std::string& role) const;
};

// Parses and validates. Relative manifest and hypothesis paths are resolved
// against the config file's directory; so is output_dir unless the
// VC_OUTPUT_ROOT environment variable is set, in which case output_dir is
// taken relative to that root.
ExperimentConfig LoadConfig(const std::string& path);
ExperimentConfig ParseConfig(const std::string& json_text,
                             const std::string& base_dir = ".");

// Canonical serialization. Paths are written as stored.
std::string ConfigToJson(const ExperimentConfig& config);

// Hash of everything that can influence a result: output_dir and workers
// are excluded.
std::string ConfigHash(const ExperimentConfig& config);

// Model config (de)serialization, shared with checkpoints.
std::string ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const std::string& json_text);

}  // namespace vc

#endif  // VC_CONFIG_H_
