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

#ifndef VC_SYNTHESIZER_H_
#define VC_SYNTHESIZER_H_

// Speaker- and style-conditioned attention encoder-decoder producing mel
// frames from a content sequence.
//
// Encoder: symbol embedding followed by two kernel-3 tanh convolutions with
// a residual connection. Fusion: the style vector and speaker vector are
// projected to the encoder width and added to every encoder state. Decoder:
// one mel frame per step; a two-layer ReLU prenet on the previous frame and
// the previous attention context drive a GRU, whose state sets a Gaussian
// window that advances monotonically over the encoder states plus a
// content-matching term. Frames and stop logits are read from the GRU state
// and the new context.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vc/autograd.h"
#include "vc/data.h"
#include "vc/gst.h"
#include "vc/model.h"
#include "vc/recognizer.h"

namespace vc {

struct SpeakerEmbedding {
  RowVector vector;  // (1, speaker_dim)
  std::string speaker_id;
};

struct EncoderStates {
  Matrix states;  // (L, encoder_dim)
};

struct SynthOutput {
  MelFeatures mel;           // raw log-mel (denormalized)
  Vector stop_probabilities;  // (T)
  Matrix attention;          // (T, L), rows sum to one
  bool truncated = false;    // decoding hit max_frames without stopping
};

ag::Var EncodeContentVar(ag::Graph& g, const ContentSequence& content,
                         const ModelConfig& config);

struct DecoderTrace {
  ag::Var frames;       // (T, D) normalized mel
  ag::Var stop_logits;  // (T, 1)
  Matrix attention;     // (T, L)
};

// Teacher-forced decoding of |target| (normalized mel, T x D).
DecoderTrace DecodeTeacherForcedVar(ag::Graph& g, const ag::Var& states,
                                    const ag::Var& speaker, const ag::Var& style,
                                    const Matrix& target, const ModelConfig& config,
                                    std::mt19937_64* dropout_rng = nullptr);

EncoderStates EncodeContent(const ContentSequence& content, const VcModel& model);
SpeakerEmbedding LookupSpeaker(const VcModel& model, const std::string& speaker_id);

// Autoregressive inference. Stops after the first frame whose stop
// probability exceeds 0.5, or after |max_frames| frames (truncated).
SynthOutput Synthesize(const ContentSequence& content,
                       const SpeakerEmbedding& speaker,
                       const StyleEmbedding& style, const VcModel& model,
                       int max_frames);

// One training utterance; |target| is the normalized mel.
struct TrainingExample {
  std::string utterance_id;
  ContentSequence content;
  int speaker_index = 0;
  Matrix target;
};

struct LossValue {
  double l1 = 0.0;    // mean absolute error per element
  double stop = 0.0;  // mean stop-token cross-entropy per frame
  double total = 0.0; // l1 + stop_weight * stop
};

enum class StyleSource {
  kZero,    // no prosody modeling
  kRefEnc,  // reference encoding of the target itself
  kTp,      // text prediction from the content encoding
  kFixed,   // caller-supplied vectors
};

struct LossOptions {
  StyleSource style = StyleSource::kRefEnc;
  // Only these groups receive gradients; empty means every group.
  std::vector<std::string> grad_groups;
  std::vector<RowVector> fixed_styles;  // one per example for kFixed
  // Enables prenet dropout (training only) with masks drawn from this seed.
  std::optional<uint64_t> dropout_seed;
};

// Batch loss; when |grads| is non-null the parameter gradients of the total
// loss are accumulated into it (per-utterance, in batch order).
LossValue ComputeLoss(const std::vector<TrainingExample>& batch,
                      const VcModel& model, const LossOptions& options,
                      Gradients* grads);

// Reconstruction loss with the style taken from the reference encoding of
// each target (zero style when the model has no GST attachment).
LossValue GstLoss(const std::vector<TrainingExample>& batch, const VcModel& model,
                  Gradients* grads,
                  std::optional<uint64_t> dropout_seed = std::nullopt);

// Reconstruction loss with the style predicted from the content. With
// |stop_gradient| only tp.* parameters receive gradients; gradients still
// pass through the synthesizer to reach them.
LossValue TpLoss(const std::vector<TrainingExample>& batch, const VcModel& model,
                 bool stop_gradient, Gradients* grads,
                 std::optional<uint64_t> dropout_seed = std::nullopt);

// Mean absolute error per element over a batch of (prediction, target)
// pairs; the reconstruction term of both losses.
double L1Term(const std::vector<Matrix>& predictions,
              const std::vector<Matrix>& targets);

// Teacher-forced prediction (normalized space) for one example.
Matrix TeacherForcedPrediction(const TrainingExample& example,
                               const RowVector& style, const VcModel& model);

}  // namespace vc

#endif  // VC_SYNTHESIZER_H_
