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

#include "vc/synthesizer.h"

#include <algorithm>
#include <cmath>

#include "vc/tp.h"

namespace vc {

namespace {

const std::string kEnc = kGroupEncoder;
const std::string kDec = kGroupDecoder;

// Kernel-3 convolution with zero padding at the sequence edges.
ag::Var ZeroPadConv(ag::Graph& g, const ag::Var& x, const std::string& prefix) {
  const int L = static_cast<int>(x.rows());
  std::vector<int> prev(L), next(L);
  for (int t = 0; t < L; ++t) {
    prev[t] = t - 1;
    next[t] = t + 1 < L ? t + 1 : -1;
  }
  ag::Var stacked =
      ag::ConcatCols({ag::GatherRows(x, prev), x, ag::GatherRows(x, next)});
  return ag::Tanh(ag::AddRow(ag::MatMul(stacked, g.Param(prefix + "/w")),
                             g.Param(prefix + "/b")));
}

// Inverted-dropout mask with keep probability 1 - rate.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                   std::mt19937_64* rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = keep(*rng) ? 1.0 / (1.0 - rate) : 0.0;
  return m;
}

ag::Var Prenet(ag::Graph& g, const ag::Var& frames, double dropout = 0.0,
               std::mt19937_64* rng = nullptr) {
  ag::Var h = ag::Relu(ag::AddRow(ag::MatMul(frames, g.Param(kDec + "/prenet1/w")),
                                  g.Param(kDec + "/prenet1/b")));
  if (rng != nullptr)
    h = ag::Mul(h, g.Constant(DropoutMask(h.rows(), h.cols(), dropout, rng)));
  h = ag::Relu(ag::AddRow(ag::MatMul(h, g.Param(kDec + "/prenet2/w")),
                          g.Param(kDec + "/prenet2/b")));
  if (rng != nullptr)
    h = ag::Mul(h, g.Constant(DropoutMask(h.rows(), h.cols(), dropout, rng)));
  // Input projection of the GRU, bias included.
  return ag::AddRow(ag::MatMul(h, g.Param(kDec + "/gru/w_prenet")),
                    g.Param(kDec + "/gru/b"));
}

struct DecoderState {
  ag::Var hidden;   // (1, G)
  ag::Var context;  // (1, H)
  ag::Var position; // (1, 1)
};

struct Memory {
  ag::Var states;     // (L, H) fused encoder states
  ag::Var states_t;   // (H, L)
};

Memory Fuse(ag::Graph& g, const ag::Var& states, const ag::Var& speaker,
            const ag::Var& style, const ModelConfig& config) {
  if (style.rows() != 1 || style.cols() != config.style_dim)
    throw DimensionError("style vector must be (1 x style_dim)");
  if (speaker.rows() != 1 || speaker.cols() != config.speaker_dim)
    throw DimensionError("speaker vector must be (1 x speaker_dim)");
  ag::Var cond = ag::MatMul(style, g.Param(kDec + "/style_proj/w")) +
                 ag::MatMul(speaker, g.Param(kDec + "/speaker_proj/w"));
  cond = ag::Add(cond, g.Param(kDec + "/fusion/b"));
  Memory m;
  m.states = ag::AddRow(states, cond);
  m.states_t = ag::Transpose(m.states);
  return m;
}

DecoderState InitialState(ag::Graph& g, const ModelConfig& config) {
  return {g.Constant(Matrix::Zero(1, config.decoder_dim)),
          g.Constant(Matrix::Zero(1, config.encoder_dim)),
          g.Constant(Matrix::Zero(1, 1))};
}

// Advances the decoder by one frame given the prenet projection of the
// previous frame. Returns the attention row.
ag::Var Step(ag::Graph& g, const Memory& mem, const ag::Var& prenet_row,
             const ModelConfig& config, DecoderState* s) {
  const Eigen::Index L = mem.states.rows();
  const int H = config.encoder_dim;
  ag::Var gates = prenet_row + ag::MatMul(s->context, g.Param(kDec + "/gru/w_context"));
  s->hidden = ag::GruCell(gates, s->hidden, g.Param(kDec + "/gru/u"));
  ag::Var att = ag::AddRow(ag::MatMul(s->hidden, g.Param(kDec + "/attention/w")),
                           g.Param(kDec + "/attention/b"));
  ag::Var advance = ag::Softplus(ag::SliceCols(att, 0, 1));
  ag::Var sigma = ag::AddScalar(ag::Softplus(ag::SliceCols(att, 1, 1)),
                                config.min_attention_sigma);
  ag::Var query = ag::SliceCols(att, 2, H);
  s->position = s->position + advance;
  ag::Var scores = ag::GaussianScores(s->position, sigma, L) +
                   ag::MatMul(query, mem.states_t);
  ag::Var weights = ag::SoftmaxRows(scores);
  s->context = ag::MatMul(weights, mem.states);
  return weights;
}

struct Readout {
  ag::Var frames;
  ag::Var stop_logits;
};

Readout Read(ag::Graph& g, const ag::Var& hidden, const ag::Var& context) {
  ag::Var o = ag::ConcatCols({hidden, context});
  return {ag::AddRow(ag::MatMul(o, g.Param(kDec + "/output/w")), g.Param(kDec + "/output/b")),
          ag::AddRow(ag::MatMul(o, g.Param(kDec + "/stop/w")), g.Param(kDec + "/stop/b"))};
}

ag::Var SpeakerRow(ag::Graph& g, int index) {
  ag::Var table = g.Param(std::string(kGroupSpeakerTable) + "/table");
  if (index < 0 || index >= table.rows())
    throw ValidationError("speaker index " + std::to_string(index) + " out of range");
  return ag::GatherRows(table, {index});
}

}  // namespace

ag::Var EncodeContentVar(ag::Graph& g, const ContentSequence& content,
                         const ModelConfig& config) {
  if (content.symbols.empty()) throw ValidationError("content sequence is empty");
  if (content.vocabulary_size != config.vocab_size)
    throw ValidationError("content vocabulary size " +
                          std::to_string(content.vocabulary_size) +
                          " != model vocabulary size " +
                          std::to_string(config.vocab_size));
  for (int s : content.symbols)
    if (s < 0 || s >= config.vocab_size)
      throw ValidationError("symbol id " + std::to_string(s) + " out of vocabulary");
  ag::Var emb = ag::GatherRows(g.Param(kEnc + "/embedding"), content.symbols);
  ag::Var h = ZeroPadConv(g, emb, kEnc + "/conv1");
  h = ZeroPadConv(g, h, kEnc + "/conv2");
  return emb + h;
}

DecoderTrace DecodeTeacherForcedVar(ag::Graph& g, const ag::Var& states,
                                    const ag::Var& speaker, const ag::Var& style,
                                    const Matrix& target, const ModelConfig& config,
                                    std::mt19937_64* dropout_rng) {
  if (target.rows() == 0 || target.cols() != config.mel_dim)
    throw DimensionError("teacher-forcing target must be (T x mel_dim), T >= 1");
  const Memory mem = Fuse(g, states, speaker, style, config);
  const Eigen::Index T = target.rows();
  Matrix shifted = Matrix::Zero(T, target.cols());
  if (T > 1) shifted.bottomRows(T - 1) = target.topRows(T - 1);
  ag::Var pre = Prenet(g, g.Constant(std::move(shifted)), config.prenet_dropout,
                       config.prenet_dropout > 0.0 ? dropout_rng : nullptr);

  DecoderState s = InitialState(g, config);
  std::vector<ag::Var> hiddens, contexts;
  DecoderTrace trace;
  trace.attention.resize(T, mem.states.rows());
  for (Eigen::Index t = 0; t < T; ++t) {
    ag::Var w = Step(g, mem, ag::GatherRows(pre, {static_cast<int>(t)}), config, &s);
    trace.attention.row(t) = w.value();
    hiddens.push_back(s.hidden);
    contexts.push_back(s.context);
  }
  Readout r = Read(g, ag::ConcatRows(hiddens), ag::ConcatRows(contexts));
  trace.frames = r.frames;
  trace.stop_logits = r.stop_logits;
  return trace;
}

EncoderStates EncodeContent(const ContentSequence& content, const VcModel& model) {
  ag::Graph g(&model.params);
  return {EncodeContentVar(g, content, model.config).value()};
}

SpeakerEmbedding LookupSpeaker(const VcModel& model, const std::string& speaker_id) {
  const int i = model.SpeakerIndex(speaker_id);
  if (i < 0) throw ValidationError("no speaker embedding for '" + speaker_id + "'");
  const Matrix& table =
      model.params.value(std::string(kGroupSpeakerTable) + "/table");
  return {table.row(i), speaker_id};
}

SynthOutput Synthesize(const ContentSequence& content,
                       const SpeakerEmbedding& speaker,
                       const StyleEmbedding& style, const VcModel& model,
                       int max_frames) {
  if (max_frames < 1) throw ValidationError("max_frames must be >= 1");
  const ModelConfig& config = model.config;
  ag::Graph g(&model.params);
  ag::Var states = EncodeContentVar(g, content, config);
  const Memory mem = Fuse(g, states, g.Constant(speaker.vector),
                          g.Constant(style.vector), config);
  DecoderState s = InitialState(g, config);
  Matrix prev = Matrix::Zero(1, config.mel_dim);
  std::vector<RowVector> frames, att_rows;
  std::vector<double> stops;
  bool stopped = false;
  for (int t = 0; t < max_frames; ++t) {
    ag::Var w = Step(g, mem, Prenet(g, g.Constant(prev)), config, &s);
    Readout r = Read(g, s.hidden, s.context);
    prev = r.frames.value();
    frames.push_back(prev.row(0));
    att_rows.push_back(w.value().row(0));
    const double logit = r.stop_logits.value()(0, 0);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    stops.push_back(p);
    if (p > 0.5) {
      stopped = true;
      break;
    }
  }
  const auto T = static_cast<Eigen::Index>(frames.size());
  Matrix normalized(T, config.mel_dim);
  SynthOutput out;
  out.attention.resize(T, mem.states.rows());
  out.stop_probabilities.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    normalized.row(t) = frames[t];
    out.attention.row(t) = att_rows[t];
    out.stop_probabilities(t) = stops[t];
  }
  out.mel.frames = model.Denormalize(normalized);
  out.truncated = !stopped;
  return out;
}

double L1Term(const std::vector<Matrix>& predictions,
              const std::vector<Matrix>& targets) {
  if (predictions.size() != targets.size() || predictions.empty())
    throw DimensionError("L1Term: batch sizes differ or batch empty");
  double sum = 0.0, count = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].rows() != targets[i].rows() ||
        predictions[i].cols() != targets[i].cols())
      throw DimensionError("L1Term: prediction/target shape mismatch");
    sum += (predictions[i] - targets[i]).cwiseAbs().sum();
    count += static_cast<double>(targets[i].size());
  }
  return sum / count;
}

Matrix TeacherForcedPrediction(const TrainingExample& example,
                               const RowVector& style, const VcModel& model) {
  ag::Graph g(&model.params);
  ag::Var states = EncodeContentVar(g, example.content, model.config);
  DecoderTrace tr = DecodeTeacherForcedVar(g, states, SpeakerRow(g, example.speaker_index),
                                           g.Constant(style), example.target,
                                           model.config);
  return tr.frames.value();
}

LossValue ComputeLoss(const std::vector<TrainingExample>& batch,
                      const VcModel& model, const LossOptions& options,
                      Gradients* grads) {
  if (batch.empty()) throw ValidationError("empty training batch");
  const ModelConfig& config = model.config;
  if (options.style == StyleSource::kRefEnc && !model.has_gst())
    throw ValidationError("reference-encoded style needs gst.* parameters");
  if (options.style == StyleSource::kTp && !model.has_tp())
    throw ValidationError("TP loss needs a TP module (tp.* parameters)");
  if (options.style == StyleSource::kFixed && options.fixed_styles.size() != batch.size())
    throw ValidationError("need one fixed style per example");

  double elements = 0.0, frames = 0.0;
  for (const auto& ex : batch) {
    if (ex.target.cols() != config.mel_dim || ex.target.rows() == 0)
      throw DimensionError("target of '" + ex.utterance_id + "' has wrong shape");
    elements += static_cast<double>(ex.target.size());
    frames += static_cast<double>(ex.target.rows());
  }

  LossValue total;
  for (size_t i = 0; i < batch.size(); ++i) {
    const TrainingExample& ex = batch[i];
    ag::Graph g(&model.params);
    if (!options.grad_groups.empty()) g.SetGradGroups(options.grad_groups);
    ag::Var states = EncodeContentVar(g, ex.content, config);
    ag::Var style;
    switch (options.style) {
      case StyleSource::kZero:
        style = g.Constant(Matrix::Zero(1, config.style_dim));
        break;
      case StyleSource::kRefEnc:
        style = RefEncVar(g, g.Constant(ex.target), config).embedding;
        break;
      case StyleSource::kTp:
        style = PredictStyleVar(g, states, config).embedding;
        break;
      case StyleSource::kFixed:
        style = g.Constant(options.fixed_styles[i]);
        break;
    }
    std::mt19937_64 rng(options.dropout_seed.value_or(0) * 1000003ULL + i);
    DecoderTrace tr = DecodeTeacherForcedVar(g, states, SpeakerRow(g, ex.speaker_index),
                                             style, ex.target, config,
                                             options.dropout_seed ? &rng : nullptr);
    Matrix stop_targets = Matrix::Zero(ex.target.rows(), 1);
    stop_targets(ex.target.rows() - 1, 0) = 1.0;
    ag::Var l1 = ag::AbsDiffSum(tr.frames, ex.target);
    ag::Var bce = ag::BceWithLogitsSum(tr.stop_logits, stop_targets, config.stop_pos_weight);
    ag::Var loss = ag::Scale(l1, 1.0 / elements) +
                   ag::Scale(bce, config.stop_weight / frames);
    total.l1 += l1.value()(0, 0) / elements;
    total.stop += bce.value()(0, 0) / frames;
    if (grads != nullptr) {
      g.Backward(loss);
      AccumulateGradients(g.ParamGradients(), grads);
    }
  }
  total.total = total.l1 + config.stop_weight * total.stop;
  return total;
}

LossValue GstLoss(const std::vector<TrainingExample>& batch, const VcModel& model,
                  Gradients* grads, std::optional<uint64_t> dropout_seed) {
  LossOptions opt;
  opt.dropout_seed = dropout_seed;
  opt.style = model.has_gst() ? StyleSource::kRefEnc : StyleSource::kZero;
  return ComputeLoss(batch, model, opt, grads);
}

LossValue TpLoss(const std::vector<TrainingExample>& batch, const VcModel& model,
                 bool stop_gradient, Gradients* grads,
                 std::optional<uint64_t> dropout_seed) {
  LossOptions opt;
  opt.dropout_seed = dropout_seed;
  opt.style = StyleSource::kTp;
  if (stop_gradient) opt.grad_groups = {"tp.*"};
  return ComputeLoss(batch, model, opt, grads);
}

}  // namespace vc
