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

#ifndef VC_CHECKPOINT_H_
#define VC_CHECKPOINT_H_

// Binary checkpoint and mel artifact files. Both start with an 8-byte magic,
// a little-endian uint64 header length and a JSON header, followed by raw
// little-endian doubles in header order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vc/data.h"
#include "vc/model.h"
#include "vc/params.h"
#include "vc/recognizer.h"

namespace vc {

struct StageRecord {
  int index = 0;            // 1-based position in the strategy's plan
  std::string name;         // e.g. "pretrain_gst_tts"
  std::string corpus;       // role name
  std::string loss;         // "L_GST" or "L_TP"
  std::vector<std::string> trainable;
  std::vector<std::string> frozen;
  int steps = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;

  bool operator==(const StageRecord&) const = default;
};

struct Provenance {
  std::string strategy;
  int stage_index = 0;      // last completed stage; 0 for an initialization
  int64_t step_count = 0;   // optimizer steps over all stages
  uint64_t seed = 0;
  std::string config_hash;
  bool freeze_refenc = false;
  std::string representation;
  std::string target_speaker;  // empty until a fine-tuning stage ran
  std::vector<StageRecord> stages;

  bool operator==(const Provenance&) const = default;
};

struct Checkpoint {
  VcModel model;
  AdamState optimizer;
  Provenance provenance;
  std::vector<std::string> charset;      // text representation
  std::optional<FrameCodebook> codebook;  // frame-code representation
};

// Writes to a temporary file and renames it into place.
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

// Reads only the JSON header's provenance.
Provenance ReadProvenance(const std::string& path);

struct MelArtifact {
  std::string utterance_id;
  std::string strategy;
  std::string config_hash;
  uint64_t seed = 0;
  MelFeatures mel;
};

void SaveMelArtifact(const std::string& path, const MelArtifact& artifact);
MelArtifact LoadMelArtifact(const std::string& path);

}  // namespace vc

#endif  // VC_CHECKPOINT_H_
