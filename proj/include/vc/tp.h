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

#ifndef VC_TP_H_
#define VC_TP_H_

// Text prediction of the style embedding from content encoder states:
// mean pooling over the sequence, a tanh hidden layer, then either a direct
// style vector (embedding mode) or softmax weights over the style tokens
// (weights mode). The input is the content encoding alone, before speaker or
// style fusion, so the prediction cannot depend on who spoke the source.

#include "vc/autograd.h"
#include "vc/gst.h"
#include "vc/model.h"
#include "vc/synthesizer.h"

namespace vc {

struct TpPrediction {
  ag::Var embedding;  // (1, E)
  ag::Var weights;    // (1, K); invalid in embedding mode
};

TpPrediction PredictStyleVar(ag::Graph& g, const ag::Var& states,
                             const ModelConfig& config);

StyleEmbedding PredictStyle(const EncoderStates& states, const VcModel& model);

}  // namespace vc

#endif  // VC_TP_H_
