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

#ifndef VC_GST_H_
#define VC_GST_H_

// Global style tokens: a reference encoder summarizing an utterance into a
// fixed-size query, single-head attention of that query over a bank of
// trainable tokens, and their composition (the reference-encoding function).
//
// The reference encoder is two kernel-3 convolutions with replicate padding
// and ReLU, mean pooling over time, and a tanh projection to the query size.
// Replicate padding keeps a constant input constant through the convolutions,
// so the query of a constant utterance does not depend on its length.

#include <optional>

#include "vc/autograd.h"
#include "vc/data.h"
#include "vc/model.h"

namespace vc {

struct ReferenceQuery {
  RowVector vector;  // (1, query_dim)
};

struct StyleEmbedding {
  RowVector vector;                  // (1, style_dim)
  std::optional<RowVector> weights;  // (1, num_tokens) when attention-made

  bool operator==(const StyleEmbedding& o) const {
    return vector == o.vector && weights == o.weights;
  }
};

struct StyleAttention {
  ag::Var weights;    // (1, K)
  ag::Var embedding;  // (1, E)
};

// Graph-level building blocks. |mel| is in the model's normalized space.
ag::Var ReferenceEncodeVar(ag::Graph& g, const ag::Var& mel);
StyleAttention StyleAttendVar(ag::Graph& g, const ag::Var& query,
                              const ModelConfig& config);
StyleAttention RefEncVar(ag::Graph& g, const ag::Var& mel,
                         const ModelConfig& config);

// Value-level API over a model's current parameters. Mels are raw log-mel
// features; normalization is applied internally.
ReferenceQuery ReferenceEncode(const MelFeatures& mel, const VcModel& model);
StyleEmbedding StyleAttend(const ReferenceQuery& query, const VcModel& model);
StyleEmbedding RefEnc(const MelFeatures& mel, const VcModel& model);

// Softmax of one row of attention scores.
RowVector AttentionWeights(const RowVector& scores);

}  // namespace vc

#endif  // VC_GST_H_
