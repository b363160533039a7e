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

#include "vc/model.h"

#include <cmath>
#include <numbers>

namespace vc {

void ModelConfig::Validate() const {
  auto pos = [](int v, const char* name) {
    if (v < 1) throw ValidationError(std::string("model.") + name + " must be >= 1");
  };
  pos(mel_dim, "mel_dim");
  pos(vocab_size, "vocab_size");
  pos(encoder_dim, "encoder_dim");
  pos(speaker_dim, "speaker_dim");
  pos(prenet_dim1, "prenet_dim1");
  pos(prenet_dim2, "prenet_dim2");
  pos(decoder_dim, "decoder_dim");
  pos(refenc_channels, "refenc_channels");
  pos(query_dim, "query_dim");
  pos(num_tokens, "num_tokens");
  pos(style_dim, "style_dim");
  pos(style_attention_dim, "style_attention_dim");
  pos(tp_hidden, "tp_hidden");
  if (!(min_attention_sigma > 0.0))
    throw ValidationError("model.min_attention_sigma must be > 0");
  if (stop_weight < 0.0 || stop_pos_weight <= 0.0)
    throw ValidationError("stop-token weights must be non-negative");
  if (prenet_dropout < 0.0 || prenet_dropout >= 1.0)
    throw ValidationError("model.prenet_dropout must be in [0, 1)");
}

Initializer::Initializer(uint64_t seed) : state_(seed) {}

double Initializer::NextGaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  auto next_unit = [this]() {
    // splitmix64, mapped to (0, 1).
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return (static_cast<double>(z >> 11) + 0.5) / 9007199254740992.0;
  };
  const double u1 = next_unit(), u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

Matrix Initializer::Normal(Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * NextGaussian();
  return m;
}

Matrix Initializer::Fan(Eigen::Index rows, Eigen::Index cols) {
  return Normal(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
}

int VcModel::SpeakerIndex(const std::string& speaker_id) const {
  for (size_t i = 0; i < speakers.size(); ++i)
    if (speakers[i] == speaker_id) return static_cast<int>(i);
  return -1;
}

int VcModel::AddSpeaker(const std::string& speaker_id) {
  if (SpeakerIndex(speaker_id) >= 0)
    throw ValidationError("speaker '" + speaker_id + "' already has a row");
  Matrix& table = params.mutable_value(std::string(kGroupSpeakerTable) + "/table");
  Matrix grown(table.rows() + 1, table.cols());
  grown.topRows(table.rows()) = table;
  grown.row(table.rows()) =
      table.rows() > 0 ? RowVector(table.colwise().mean()) : RowVector::Zero(table.cols());
  table = std::move(grown);
  speakers.push_back(speaker_id);
  return static_cast<int>(speakers.size()) - 1;
}

Matrix VcModel::Normalize(const Matrix& log_mel) const {
  if (log_mel.cols() != feature_mean.cols())
    throw DimensionError("mel dimension does not match model features");
  Matrix out = log_mel.rowwise() - feature_mean;
  return out.array().rowwise() / feature_std.array();
}

Matrix VcModel::Denormalize(const Matrix& normalized) const {
  if (normalized.cols() != feature_mean.cols())
    throw DimensionError("mel dimension does not match model features");
  Matrix out = normalized.array().rowwise() * feature_std.array();
  return out.rowwise() + feature_mean;
}

namespace {

double InverseSoftplus(double y) { return std::log(std::expm1(y)); }

}  // namespace

VcModel InitModel(const ModelConfig& config,
                  const std::vector<std::string>& speakers, bool with_gst,
                  bool with_tp, uint64_t seed) {
  config.Validate();
  if (speakers.empty()) throw ValidationError("model needs at least one speaker");
  if (with_tp && config.tp_target == TpTarget::kWeights && !with_gst)
    throw ValidationError("TP weights mode needs the style token bank (gst.*)");
  VcModel m;
  m.config = config;
  m.speakers = speakers;
  m.feature_mean = RowVector::Zero(config.mel_dim);
  m.feature_std = RowVector::Ones(config.mel_dim);
  Initializer init(seed);
  ParameterStore& p = m.params;
  const int H = config.encoder_dim, D = config.mel_dim, G = config.decoder_dim;
  const int E = config.style_dim, S = config.speaker_dim;

  p.Add(kGroupEncoder, "embedding", init.Normal(config.vocab_size, H, 0.5));
  p.Add(kGroupEncoder, "conv1/w", init.Fan(3 * H, H));
  p.Add(kGroupEncoder, "conv1/b", Matrix::Zero(1, H));
  p.Add(kGroupEncoder, "conv2/w", init.Fan(3 * H, H));
  p.Add(kGroupEncoder, "conv2/b", Matrix::Zero(1, H));

  p.Add(kGroupSpeakerTable, "table",
        init.Normal(static_cast<Eigen::Index>(speakers.size()), S, 0.5));

  p.Add(kGroupDecoder, "style_proj/w", init.Fan(E, H));
  p.Add(kGroupDecoder, "speaker_proj/w", init.Fan(S, H));
  p.Add(kGroupDecoder, "fusion/b", Matrix::Zero(1, H));
  p.Add(kGroupDecoder, "prenet1/w", init.Fan(D, config.prenet_dim1));
  p.Add(kGroupDecoder, "prenet1/b", Matrix::Constant(1, config.prenet_dim1, 0.1));
  p.Add(kGroupDecoder, "prenet2/w", init.Fan(config.prenet_dim1, config.prenet_dim2));
  p.Add(kGroupDecoder, "prenet2/b", Matrix::Constant(1, config.prenet_dim2, 0.1));
  p.Add(kGroupDecoder, "gru/w_prenet", init.Fan(config.prenet_dim2, 3 * G));
  p.Add(kGroupDecoder, "gru/w_context", init.Fan(H, 3 * G));
  p.Add(kGroupDecoder, "gru/b", Matrix::Zero(1, 3 * G));
  p.Add(kGroupDecoder, "gru/u", init.Fan(G, 3 * G));
  Matrix att_b = Matrix::Zero(1, 2 + H);
  att_b(0, 0) = InverseSoftplus(0.3);
  att_b(0, 1) = InverseSoftplus(1.0);
  p.Add(kGroupDecoder, "attention/w", init.Normal(G, 2 + H, 0.01));
  p.Add(kGroupDecoder, "attention/b", att_b);
  p.Add(kGroupDecoder, "output/w", init.Fan(G + H, D));
  p.Add(kGroupDecoder, "output/b", Matrix::Zero(1, D));
  p.Add(kGroupDecoder, "stop/w", init.Fan(G + H, 1));
  p.Add(kGroupDecoder, "stop/b", Matrix::Constant(1, 1, -3.0));

  if (with_gst) {
    const int C = config.refenc_channels, Q = config.query_dim;
    const int A = config.style_attention_dim;
    p.Add(kGroupRefEnc, "conv1/w", init.Fan(3 * D, C));
    p.Add(kGroupRefEnc, "conv1/b", Matrix::Zero(1, C));
    p.Add(kGroupRefEnc, "conv2/w", init.Fan(3 * C, C));
    p.Add(kGroupRefEnc, "conv2/b", Matrix::Zero(1, C));
    p.Add(kGroupRefEnc, "query/w", init.Fan(C, Q));
    p.Add(kGroupRefEnc, "query/b", Matrix::Zero(1, Q));
    p.Add(kGroupRefEnc, "attn_q/w", init.Fan(Q, A));
    p.Add(kGroupRefEnc, "attn_k/w", init.Fan(E, A));
    p.Add(kGroupTokens, "tokens", init.Normal(config.num_tokens, E, 1.0));
  }
  if (with_tp) AttachTp(&m, seed);
  return m;
}

void AttachTp(VcModel* model, uint64_t seed) {
  const ModelConfig& config = model->config;
  if (model->has_tp()) throw ValidationError("model already has a TP module");
  if (config.tp_target == TpTarget::kWeights && !model->has_gst())
    throw ValidationError("TP weights mode needs the style token bank (gst.*)");
  Initializer init(seed ^ 0x7470ULL);
  const int out =
      config.tp_target == TpTarget::kEmbedding ? config.style_dim : config.num_tokens;
  ParameterStore& p = model->params;
  p.Add(kGroupTp, "hidden/w", init.Fan(config.encoder_dim, config.tp_hidden));
  p.Add(kGroupTp, "hidden/b", Matrix::Zero(1, config.tp_hidden));
  p.Add(kGroupTp, "out/w", init.Normal(config.tp_hidden, out, 0.1 / std::sqrt(config.tp_hidden)));
  p.Add(kGroupTp, "out/b", Matrix::Zero(1, out));
}

}  // namespace vc
