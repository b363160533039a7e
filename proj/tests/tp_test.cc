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

#include <cmath>

#include "doctest.h"
#include "support.h"
#include "vc/synthesizer.h"
#include "vc/tp.h"

namespace vc {
namespace {

using testing::RandomText;
using testing::TinyConfig;

TEST_CASE("weights mode with one token returns the token") {
  ModelConfig c = TinyConfig();
  c.tp_target = TpTarget::kWeights;
  c.num_tokens = 1;
  VcModel m = InitModel(c, {"a"}, true, true, 2);
  StyleEmbedding e = PredictStyle(EncodeContent(RandomText(6, 5, 1), m), m);
  REQUIRE(e.weights.has_value());
  CHECK((*e.weights)(0) == 1.0);
  CHECK((e.vector - m.params.value("gst.tokens/tokens").row(0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("weights mode stays on the simplex") {
  ModelConfig c = TinyConfig();
  c.tp_target = TpTarget::kWeights;
  c.num_tokens = 4;
  for (uint64_t s = 0; s < 30; ++s) {
    VcModel m = InitModel(c, {"a"}, true, true, s);
    StyleEmbedding e = PredictStyle(EncodeContent(RandomText(2 + s % 6, 5, s), m), m);
    CHECK(e.weights->minCoeff() >= 0.0);
    CHECK(std::abs(e.weights->sum() - 1.0) < 1e-6);
    CHECK((e.vector - *e.weights * m.params.value("gst.tokens/tokens")).cwiseAbs().maxCoeff() <
          1e-6);
  }
  CHECK_THROWS_AS(InitModel(c, {"a"}, false, true, 1), ValidationError);
}

TEST_CASE("embedding mode") {
  VcModel m = InitModel(TinyConfig(), {"a", "b"}, false, true, 4);
  ContentSequence y = RandomText(5, 5, 3);
  StyleEmbedding e = PredictStyle(EncodeContent(y, m), m);
  CHECK(e.vector.cols() == m.config.style_dim);
  CHECK_FALSE(e.weights.has_value());
  CHECK(PredictStyle(EncodeContent(y, m), m) == e);
  CHECK_THROWS_AS(PredictStyle(EncoderStates{Matrix(0, m.config.encoder_dim)}, m),
                  ValidationError);
  VcModel no_tp = InitModel(TinyConfig(), {"a"}, false, false, 4);
  CHECK_THROWS_AS(PredictStyle(EncodeContent(y, no_tp), no_tp), ValidationError);
}

TEST_CASE("prediction depends on content alone") {
  // Different speakers and reference audio never enter the TP path.
  VcModel m = InitModel(TinyConfig(), {"a", "b"}, true, true, 5);
  UtteranceRecord r1{"u1", "x.wav", "ab ba", "a", "en"};
  UtteranceRecord r2{"u2", "y.wav", "ab ba", "b", "en"};
  Charset cs = Charset::FromString("ab cd");
  StyleEmbedding e1 = PredictStyle(EncodeContent(RecognizeText(r1, cs), m), m);
  StyleEmbedding e2 = PredictStyle(EncodeContent(RecognizeText(r2, cs), m), m);
  CHECK(e1 == e2);
}

}  // namespace
}  // namespace vc
