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

#ifndef VC_PIPELINES_H_
#define VC_PIPELINES_H_

// Stage ledgers for the baseline, SPT and TTP strategies and the matching
// conversion procedures.

#include <string>
#include <vector>

#include "vc/checkpoint.h"
#include "vc/config.h"
#include "vc/data.h"
#include "vc/gst.h"
#include "vc/synthesizer.h"

namespace vc {

enum class LossKind { kGst, kTp };
const char* LossName(LossKind loss);  // "L_GST" / "L_TP"

struct StageSpec {
  std::string name;
  DatasetRole corpus = DatasetRole::kTtsPretrain;
  LossKind loss = LossKind::kGst;
  bool stop_gradient = false;  // gradients reach tp.* only
  std::vector<std::string> trainable;
  std::vector<std::string> frozen;
  int steps = 0;
  double learning_rate = 0.0;
};

struct StagePlan {
  Strategy strategy = Strategy::kTtp;
  bool freeze_refenc = false;
  std::vector<StageSpec> stages;

  // Stage counts per strategy and the trainable/frozen partition of every
  // group present at each stage.
  void Validate() const;
};

// Parameter groups that exist in a model at a given stage of a strategy.
std::vector<std::string> StageGroups(Strategy strategy, int stage_index);

StagePlan MakeStagePlan(Strategy strategy, bool freeze_refenc,
                        const TrainingConfig& training);

// Utterances with their extracted features, in manifest order.
struct Corpus {
  std::vector<UtteranceRecord> records;
  std::vector<MelFeatures> mels;
  size_t size() const { return records.size(); }
};

Corpus LoadCorpus(const std::vector<UtteranceRecord>& records,
                  const FeatureConfig& features, int workers = 1);

// Content front end of a checkpoint: the oracle text recognizer or the
// frame-code quantizer it was trained with.
ContentSequence RecognizeContent(const Checkpoint& ckpt, const UtteranceRecord& record,
                                 const MelFeatures& mel);

struct StageLog {
  std::vector<double> loss;  // per step, as optimized
  std::vector<double> l1;
  double initial_l1 = 0.0;   // teacher-forced, before the first update
  double final_l1 = 0.0;     // teacher-forced, after the last update
  // (step, mean |TP(Y) - RefEnc(X)|_1) samples, TP stages with GST only.
  std::vector<std::pair<int, double>> style_distance;
};

// Fresh model plus recognizer assets and feature statistics for |d_tts|.
// The frame-code codebook is trained on |asr| when given, else on |d_tts|.
Checkpoint InitCheckpoint(const Corpus& d_tts, const ExperimentConfig& config,
                          bool with_gst, const Corpus* asr = nullptr);

// Runs one stage of |plan| (0-based index) starting from |ckpt|.
Checkpoint RunStage(const StagePlan& plan, int stage, const Corpus& corpus,
                    const Checkpoint& ckpt, const ExperimentConfig& config,
                    StageLog* log = nullptr);

// Named stages. Stage budgets and rates come from config.training.
Checkpoint PretrainGstTts(const Corpus& d_tts, const ExperimentConfig& config,
                          StageLog* log = nullptr, const Corpus* asr = nullptr);
Checkpoint FinetuneSpt(const Corpus& d_trg, const Checkpoint& ckpt, bool freeze_refenc,
                       const ExperimentConfig& config, StageLog* log = nullptr);
Checkpoint PretrainTp(const Corpus& d_tts, const Checkpoint& ckpt,
                      const ExperimentConfig& config, StageLog* log = nullptr);
Checkpoint FinetuneTtp(const Corpus& d_trg, const Checkpoint& ckpt,
                       const ExperimentConfig& config, StageLog* log = nullptr);
Checkpoint PretrainBaseline(const Corpus& d_tts, const ExperimentConfig& config,
                            StageLog* log = nullptr, const Corpus* asr = nullptr);
Checkpoint FinetuneBaseline(const Corpus& d_trg, const Checkpoint& ckpt,
                            const ExperimentConfig& config, StageLog* log = nullptr);

// Mean over |corpus| of |TP(Y) - RefEnc(X)|_1.
double MeanStyleDistance(const Corpus& corpus, const Checkpoint& ckpt);

// Teacher-forced losses of |corpus| under |ckpt| with the given style source.
LossValue EvaluateLoss(const Corpus& corpus, const Checkpoint& ckpt, StyleSource style);

struct ConversionTrace {
  std::string utterance_id;
  std::string strategy;
  std::string style_source;               // "zero", "refenc" or "tp"
  std::vector<std::string> style_inputs;  // what the style encoder read
  std::string content_kind;
  int content_length = 0;
  std::string target_speaker;
  int frames = 0;
  bool truncated = false;
  // Content symbols read back from the decoder's attention path (text only).
  std::string attention_transcript;
  std::string error;  // non-empty when conversion failed
};

struct Conversion {
  SynthOutput output;
  StyleEmbedding style;
  ContentSequence content;
  ConversionTrace trace;
};

// Recognize, pick the style per strategy, synthesize with the checkpoint's
// target speaker.
Conversion Convert(Strategy strategy, const UtteranceRecord& source,
                   const MelFeatures& source_mel, const Checkpoint& ckpt,
                   const ExperimentConfig& config);

// Collapses the per-frame attention argmax into visited content positions
// and spells them with |charset|.
std::string AttentionTranscript(const Matrix& attention, const ContentSequence& content,
                                const std::vector<std::string>& charset);

}  // namespace vc

#endif  // VC_PIPELINES_H_
