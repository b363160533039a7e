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

#ifndef VC_MODEL_H_
#define VC_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vc/common.h"
#include "vc/params.h"

namespace vc {

enum class TpTarget { kEmbedding, kWeights };

// Sizes and loss weights of the synthesizer and its prosody attachments.
struct ModelConfig {
  int mel_dim = 80;
  int vocab_size = 0;  // set from the representation
  int encoder_dim = 64;
  int speaker_dim = 16;
  int prenet_dim1 = 64;
  int prenet_dim2 = 32;
  double prenet_dropout = 0.5;  // applied only when training asks for it
  int decoder_dim = 96;
  double min_attention_sigma = 0.3;

  // Reference encoder and style tokens.
  int refenc_channels = 64;
  int query_dim = 128;
  int num_tokens = 10;
  int style_dim = 128;
  int style_attention_dim = 64;

  int tp_hidden = 64;
  TpTarget tp_target = TpTarget::kEmbedding;

  double stop_weight = 0.1;
  double stop_pos_weight = 5.0;

  void Validate() const;
};

// Parameter group names. Stage plans freeze and train these units.
inline constexpr const char* kGroupEncoder = "tts.encoder";
inline constexpr const char* kGroupDecoder = "tts.decoder";
inline constexpr const char* kGroupSpeakerTable = "tts.speaker_table";
inline constexpr const char* kGroupTokens = "gst.tokens";
inline constexpr const char* kGroupRefEnc = "gst.refenc";
inline constexpr const char* kGroupTp = "tp.predictor";

// Seeded Gaussian initializer; draws are sequential so the creation order of
// parameters fixes their values.
class Initializer {
 public:
  explicit Initializer(uint64_t seed);
  // N(0, scale^2) entries.
  Matrix Normal(Eigen::Index rows, Eigen::Index cols, double scale);
  // N(0, 1 / fan_in) entries.
  Matrix Fan(Eigen::Index rows, Eigen::Index cols);

 private:
  uint64_t state_;
  double NextGaussian();
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// The synthesizer with its optional GST and TP attachments, plus the feature
// normalization and speaker index it was trained with.
class VcModel {
 public:
  ModelConfig config;
  ParameterStore params;
  std::vector<std::string> speakers;  // row order of the speaker table
  RowVector feature_mean;             // (1, mel_dim)
  RowVector feature_std;              // (1, mel_dim)

  bool has_gst() const { return params.HasGroup("gst.*"); }
  bool has_tp() const { return params.HasGroup("tp.*"); }

  // Returns -1 when the speaker has no table row.
  int SpeakerIndex(const std::string& speaker_id) const;
  // Appends a row initialized to the mean of the existing rows.
  int AddSpeaker(const std::string& speaker_id);

  Matrix Normalize(const Matrix& log_mel) const;
  Matrix Denormalize(const Matrix& normalized) const;
};

// Creates every parameter for the requested attachments. Speaker rows are
// created for |speakers|; feature statistics default to identity.
VcModel InitModel(const ModelConfig& config,
                  const std::vector<std::string>& speakers, bool with_gst,
                  bool with_tp, uint64_t seed);

// Adds freshly initialized tp.* parameters to a model that has none.
void AttachTp(VcModel* model, uint64_t seed);

}  // namespace vc

#endif  // VC_MODEL_H_
