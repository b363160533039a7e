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
#include "vc/gst.h"
#include "vc/model.h"

namespace vc {
namespace {

using testing::RandomMatrix;
using testing::TinyConfig;

MelFeatures Mel(Matrix frames) {
  MelFeatures m;
  m.frames = std::move(frames);
  return m;
}

VcModel GstModel(uint64_t seed = 1, int tokens = 3) {
  ModelConfig c = TinyConfig();
  c.num_tokens = tokens;
  return InitModel(c, {"a", "b"}, true, false, seed);
}

TEST_CASE("reference_encode") {
  VcModel m = GstModel();
  const int D = m.config.mel_dim;
  SUBCASE("fixed dimension") {
    CHECK(ReferenceEncode(Mel(RandomMatrix(50, D, 1)), m).vector.cols() == m.config.query_dim);
    CHECK(ReferenceEncode(Mel(RandomMatrix(500, D, 2)), m).vector.cols() == m.config.query_dim);
  }
  SUBCASE("deterministic") {
    MelFeatures mel = Mel(RandomMatrix(40, D, 3));
    CHECK(ReferenceEncode(mel, m).vector == ReferenceEncode(mel, m).vector);
  }
  SUBCASE("constant sequence is length invariant") {
    // Under mean pooling with edge replication a constant input yields the
    // same per-frame activations at every length, so pooling cancels T.
    Matrix row = RandomMatrix(1, D, 4);
    Matrix once = row.replicate(20, 1);
    Matrix twice = row.replicate(40, 1);
    const RowVector a = ReferenceEncode(Mel(once), m).vector;
    const RowVector b = ReferenceEncode(Mel(twice), m).vector;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("empty mel") {
    CHECK_THROWS_AS(ReferenceEncode(Mel(Matrix(0, D)), m), ValidationError);
  }
  SUBCASE("no gst groups") {
    VcModel plain = InitModel(TinyConfig(), {"a"}, false, false, 1);
    CHECK_THROWS_AS(RefEnc(Mel(RandomMatrix(5, D, 1)), plain), ValidationError);
  }
}

TEST_CASE("style_attend") {
  SUBCASE("single token") {
    VcModel m = GstModel(2, 1);
    StyleEmbedding e = StyleAttend({RandomMatrix(1, m.config.query_dim, 5)}, m);
    REQUIRE(e.weights.has_value());
    CHECK((*e.weights)(0) == doctest::Approx(1.0).epsilon(1e-15));
    const Matrix& tokens = m.params.value("gst.tokens/tokens");
    CHECK((e.vector - tokens.row(0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("equal scores give uniform weights") {
    VcModel m = GstModel(3, 4);
    StyleEmbedding e = StyleAttend({RowVector::Zero(m.config.query_dim)}, m);
    for (int k = 0; k < 4; ++k) CHECK((*e.weights)(k) == doctest::Approx(0.25));
    RowVector equal(3);
    equal << 2.0, 2.0, 2.0;
    for (int k = 0; k < 3; ++k) CHECK(AttentionWeights(equal)(k) == doctest::Approx(1.0 / 3));
  }
  SUBCASE("hand-evaluated softmax") {
    RowVector scores(2);
    scores << 0.0, std::log(3.0);
    RowVector w = AttentionWeights(scores);
    CHECK(w(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w(1) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("query dimension mismatch") {
    VcModel m = GstModel();
    CHECK_THROWS_AS(StyleAttend({RowVector::Zero(m.config.query_dim + 1)}, m), DimensionError);
  }
}

TEST_CASE("ref_enc composition and hull") {
  VcModel m = GstModel(4, 5);
  const Matrix& tokens = m.params.value("gst.tokens/tokens");
  MelFeatures a = Mel(RandomMatrix(30, m.config.mel_dim, 10));
  MelFeatures b = Mel(RandomMatrix(25, m.config.mel_dim, 11));
  CHECK(RefEnc(a, m) == StyleAttend(ReferenceEncode(a, m), m));
  CHECK(RefEnc(a, m).vector != RefEnc(b, m).vector);
  for (uint64_t s = 0; s < 30; ++s) {
    StyleEmbedding e = RefEnc(Mel(RandomMatrix(5 + s, m.config.mel_dim, 100 + s)), m);
    const RowVector combo = *e.weights * tokens;
    CHECK((e.vector - combo).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("simplex and hull over random inputs") {
  for (uint64_t s = 0; s < 200; ++s) {
    VcModel m = GstModel(s, 2 + s % 6);
    const RowVector q = RandomMatrix(1, m.config.query_dim, 7 * s + 1, 1.0 + s % 5);
    StyleEmbedding e = StyleAttend({q}, m);
    const RowVector& w = *e.weights;
    CHECK(w.minCoeff() >= 0.0);
    CHECK(std::abs(w.sum() - 1.0) < 1e-6);
    const Matrix& tokens = m.params.value("gst.tokens/tokens");
    CHECK((e.vector - w * tokens).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("gst gradients match finite differences") {
  VcModel m = GstModel(9, 3);
  const Matrix mel = RandomMatrix(7, m.config.mel_dim, 12);
  const Matrix probe = RandomMatrix(1, m.config.style_dim, 13);
  auto build = [&](ag::Graph& g) {
    StyleAttention a = RefEncVar(g, g.Constant(mel), m.config);
    return ag::SumAll(ag::Mul(a.embedding, g.Constant(probe)));
  };
  ag::Graph g(&m.params);
  ag::Var loss = build(g);
  g.Backward(loss);
  Gradients grads = g.ParamGradients();
  auto f = [&] {
    ag::Graph h(&m.params);
    return build(h).value()(0, 0);
  };
  testing::GradCheckResult r = testing::CheckGradients(&m, grads, f, {"gst.*"});
  CHECK(r.checked_parameters == 9);
  INFO("worst: " << r.worst_parameter);
  CHECK(r.max_relative_error < 1e-4);
}

}  // namespace
}  // namespace vc
