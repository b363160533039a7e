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

#include "vc/gst.h"

#include <algorithm>
#include <cmath>

namespace vc {

namespace {

// Kernel-3 convolution over rows with edge replication.
ag::Var ReplicateConv(ag::Graph& g, const ag::Var& x, const std::string& prefix) {
  const int T = static_cast<int>(x.rows());
  std::vector<int> prev(T), next(T), same(T);
  for (int t = 0; t < T; ++t) {
    prev[t] = std::max(t - 1, 0);
    same[t] = t;
    next[t] = std::min(t + 1, T - 1);
  }
  ag::Var stacked = ag::ConcatCols(
      {ag::GatherRows(x, prev), x, ag::GatherRows(x, next)});
  return ag::Relu(ag::AddRow(ag::MatMul(stacked, g.Param(prefix + "/w")),
                             g.Param(prefix + "/b")));
}

void RequireGst(const VcModel& model) {
  if (!model.has_gst())
    throw ValidationError("model has no gst.* parameter groups");
}

}  // namespace

ag::Var ReferenceEncodeVar(ag::Graph& g, const ag::Var& mel) {
  if (mel.rows() == 0) throw ValidationError("reference mel is empty");
  const std::string p = kGroupRefEnc;
  ag::Var h = ReplicateConv(g, mel, p + "/conv1");
  h = ReplicateConv(g, h, p + "/conv2");
  ag::Var pooled = ag::MeanRows(h);
  return ag::Tanh(ag::AddRow(ag::MatMul(pooled, g.Param(p + "/query/w")),
                             g.Param(p + "/query/b")));
}

StyleAttention StyleAttendVar(ag::Graph& g, const ag::Var& query,
                              const ModelConfig& config) {
  const std::string p = kGroupRefEnc;
  if (query.rows() != 1 || query.cols() != config.query_dim)
    throw DimensionError("style query must be (1 x query_dim)");
  ag::Var tokens = g.Param(std::string(kGroupTokens) + "/tokens");
  ag::Var q = ag::MatMul(query, g.Param(p + "/attn_q/w"));
  ag::Var keys = ag::MatMul(tokens, g.Param(p + "/attn_k/w"));
  ag::Var scores = ag::Scale(ag::MatMul(q, ag::Transpose(keys)),
                             1.0 / std::sqrt(static_cast<double>(config.style_attention_dim)));
  StyleAttention out;
  out.weights = ag::SoftmaxRows(scores);
  out.embedding = ag::MatMul(out.weights, tokens);
  return out;
}

StyleAttention RefEncVar(ag::Graph& g, const ag::Var& mel, const ModelConfig& config) {
  return StyleAttendVar(g, ReferenceEncodeVar(g, mel), config);
}

ReferenceQuery ReferenceEncode(const MelFeatures& mel, const VcModel& model) {
  RequireGst(model);
  if (mel.num_frames() == 0) throw ValidationError("reference mel is empty");
  ag::Graph g(&model.params);
  ag::Var q = ReferenceEncodeVar(g, g.Constant(model.Normalize(mel.frames)));
  return {q.value()};
}

StyleEmbedding StyleAttend(const ReferenceQuery& query, const VcModel& model) {
  RequireGst(model);
  ag::Graph g(&model.params);
  StyleAttention a = StyleAttendVar(g, g.Constant(query.vector), model.config);
  return {a.embedding.value(), RowVector(a.weights.value())};
}

StyleEmbedding RefEnc(const MelFeatures& mel, const VcModel& model) {
  return StyleAttend(ReferenceEncode(mel, model), model);
}

RowVector AttentionWeights(const RowVector& scores) {
  if (scores.size() == 0) throw DimensionError("no attention scores");
  RowVector e = (scores.array() - scores.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace vc
