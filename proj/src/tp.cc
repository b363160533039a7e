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

#include "vc/tp.h"

namespace vc {

TpPrediction PredictStyleVar(ag::Graph& g, const ag::Var& states,
                             const ModelConfig& config) {
  if (states.rows() == 0) throw ValidationError("TP input states are empty");
  const std::string p = kGroupTp;
  ag::Var pooled = ag::MeanRows(states);
  ag::Var hidden = ag::Tanh(
      ag::AddRow(ag::MatMul(pooled, g.Param(p + "/hidden/w")), g.Param(p + "/hidden/b")));
  ag::Var out = ag::AddRow(ag::MatMul(hidden, g.Param(p + "/out/w")),
                           g.Param(p + "/out/b"));
  TpPrediction pred;
  if (config.tp_target == TpTarget::kEmbedding) {
    pred.embedding = out;
  } else {
    pred.weights = ag::SoftmaxRows(out);
    pred.embedding =
        ag::MatMul(pred.weights, g.Param(std::string(kGroupTokens) + "/tokens"));
  }
  return pred;
}

StyleEmbedding PredictStyle(const EncoderStates& states, const VcModel& model) {
  if (!model.has_tp()) throw ValidationError("model has no tp.* parameter group");
  if (states.states.rows() == 0) throw ValidationError("TP input states are empty");
  ag::Graph g(&model.params);
  TpPrediction p = PredictStyleVar(g, g.Constant(states.states), model.config);
  if (model.config.tp_target == TpTarget::kWeights)
    return {p.embedding.value(), RowVector(p.weights.value())};
  return {p.embedding.value(), std::nullopt};
}

}  // namespace vc
