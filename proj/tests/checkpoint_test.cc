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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.h"
#include "vc/checkpoint.h"
#include "vc/gst.h"
#include "vc/tp.h"

namespace vc {
namespace {

namespace fs = std::filesystem;

fs::path TempDir() {
  const fs::path p = fs::temp_directory_path() / "vc_checkpoint_test";
  fs::create_directories(p);
  return p;
}

Checkpoint Sample() {
  Checkpoint c;
  c.model = InitModel(testing::TinyConfig(5), {"s1", "s2"}, true, true, 3);
  c.model.feature_mean = testing::RandomMatrix(1, 6, 4);
  c.model.feature_std = testing::RandomMatrix(1, 6, 5).cwiseAbs().array() + 0.5;
  c.model.AddSpeaker("t1");
  for (int i = 0; i < c.model.params.size(); ++i) {
    const Parameter& p = c.model.params.at(i);
    c.optimizer.first_moment[p.key()] = Matrix::Constant(p.value.rows(), p.value.cols(), 0.1 * i);
    c.optimizer.second_moment[p.key()] = Matrix::Constant(p.value.rows(), p.value.cols(), 1e-300);
  }
  c.optimizer.step = 17;
  c.charset = {"a", "b", "c", "é", " "};
  c.codebook = FrameCodebook{testing::RandomMatrix(4, 6, 8), "asr"};
  Provenance& p = c.provenance;
  p.strategy = "ttp";
  p.stage_index = 2;
  p.step_count = 123;
  p.seed = 0xfedcba9876543210ULL;
  p.config_hash = "0123456789abcdef";
  p.representation = "text";
  p.target_speaker = "t1";
  StageRecord r;
  r.index = 1;
  r.name = "pretrain_gst_tts";
  r.corpus = "tts";
  r.loss = "L_GST";
  r.trainable = {"gst.refenc", "tts.decoder"};
  r.frozen = {};
  r.steps = 100;
  r.initial_loss = 1.0 / 3.0;
  r.final_loss = 1e-17;
  p.stages = {r};
  return c;
}

TEST_CASE("checkpoint round trip is exact") {
  const Checkpoint c = Sample();
  const std::string path = (TempDir() / "a.ckpt").string();
  SaveCheckpoint(path, c);
  CHECK_FALSE(fs::exists(path + ".tmp"));
  const Checkpoint back = LoadCheckpoint(path);
  CHECK(back.model.params == c.model.params);
  CHECK(back.model.speakers == c.model.speakers);
  CHECK(back.model.feature_mean == c.model.feature_mean);
  CHECK(back.model.feature_std == c.model.feature_std);
  CHECK(ModelConfigToJson(back.model.config) == ModelConfigToJson(c.model.config));
  CHECK(back.optimizer.first_moment == c.optimizer.first_moment);
  CHECK(back.optimizer.second_moment == c.optimizer.second_moment);
  CHECK(back.optimizer.step == 17);
  CHECK(back.charset == c.charset);
  REQUIRE(back.codebook.has_value());
  CHECK(back.codebook->centroids == c.codebook->centroids);
  CHECK(back.codebook->training_corpus_id == "asr");
  CHECK(back.provenance == c.provenance);
  CHECK(ReadProvenance(path) == c.provenance);

  SaveCheckpoint((TempDir() / "b.ckpt").string(), back);
  std::ifstream a(path, std::ios::binary), b(TempDir() / "b.ckpt", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("loaded checkpoint infers identically") {
  const Checkpoint c = Sample();
  const std::string path = (TempDir() / "c.ckpt").string();
  SaveCheckpoint(path, c);
  const Checkpoint back = LoadCheckpoint(path);
  const ContentSequence y = testing::RandomText(5, 5, 2);
  MelFeatures mel;
  mel.frames = testing::RandomMatrix(9, 6, 12);
  const StyleEmbedding s1 = RefEnc(mel, c.model), s2 = RefEnc(mel, back.model);
  CHECK(s1 == s2);
  CHECK(PredictStyle(EncodeContent(y, c.model), c.model) ==
        PredictStyle(EncodeContent(y, back.model), back.model));
  const SynthOutput o1 = Synthesize(y, LookupSpeaker(c.model, "t1"), s1, c.model, 30);
  const SynthOutput o2 = Synthesize(y, LookupSpeaker(back.model, "t1"), s2, back.model, 30);
  CHECK(o1.mel.frames == o2.mel.frames);
  CHECK(o1.attention == o2.attention);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const fs::path dir = TempDir();
  CHECK_THROWS_AS(LoadCheckpoint((dir / "nope.ckpt").string()), VcError);
  std::ofstream(dir / "bad.ckpt") << "NOTACKPT and some bytes";
  CHECK_THROWS_AS(LoadCheckpoint((dir / "bad.ckpt").string()), ParseError);

  const std::string path = (dir / "full.ckpt").string();
  SaveCheckpoint(path, Sample());
  const auto size = fs::file_size(path);
  fs::copy_file(path, dir / "cut.ckpt", fs::copy_options::overwrite_existing);
  fs::resize_file(dir / "cut.ckpt", size - 8);
  CHECK_THROWS_AS(LoadCheckpoint((dir / "cut.ckpt").string()), ParseError);
  fs::resize_file(dir / "cut.ckpt", 20);
  CHECK_THROWS_AS(LoadCheckpoint((dir / "cut.ckpt").string()), ParseError);

  MelArtifact art;
  art.mel.frames = Matrix::Zero(2, 2);
  SaveMelArtifact((dir / "x.mel").string(), art);
  CHECK_THROWS_AS(LoadCheckpoint((dir / "x.mel").string()), ParseError);
}

TEST_CASE("mel artifact round trip") {
  MelArtifact art;
  art.utterance_id = "utt_1";
  art.strategy = "spt";
  art.config_hash = "00ff00ff00ff00ff";
  art.seed = 42;
  art.mel.frames = testing::RandomMatrix(13, 7, 1);
  art.mel.frame_shift_ms = 16.0;
  art.mel.sample_rate = 16000;
  const std::string path = (TempDir() / "u.mel").string();
  SaveMelArtifact(path, art);
  const MelArtifact back = LoadMelArtifact(path);
  CHECK(back.utterance_id == art.utterance_id);
  CHECK(back.strategy == art.strategy);
  CHECK(back.config_hash == art.config_hash);
  CHECK(back.seed == 42);
  CHECK(back.mel.frames == art.mel.frames);
  CHECK(back.mel.frame_shift_ms == 16.0);
  CHECK(back.mel.sample_rate == 16000);
}

}  // namespace
}  // namespace vc
