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

#ifndef VC_DATA_H_
#define VC_DATA_H_

#include <map>
#include <string>
#include <vector>

#include "vc/audio.h"
#include "vc/common.h"

namespace vc {

struct UtteranceRecord {
  std::string utterance_id;
  std::string audio_path;
  std::string transcript;  // empty for unlabeled audio
  std::string speaker_id;
  std::string language;

  bool operator==(const UtteranceRecord&) const = default;
};

// Log-mel energies, one row per frame.
struct MelFeatures {
  Matrix frames;  // (T, D)
  double frame_shift_ms = 0.0;
  int sample_rate = 0;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

struct FeatureConfig {
  int sample_rate = 16000;  // experiment-wide rate; audio is resampled to it
  int fft_size = 1024;
  int hop = 256;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double power_floor = 1e-10;

  void Validate() const;
};

enum class DatasetRole { kAsr, kTtsPretrain, kTargetFinetune, kSourceEval };

const char* RoleName(DatasetRole role);
// Inverse of RoleName; throws ValidationError on an unknown name.
DatasetRole ParseRole(const std::string& name);

// Manifests are JSON Lines: one object per line with the keys
// utterance_id, audio_path, transcript, speaker_id, language. Blank lines are
// skipped. With |resolve_audio_paths|, relative audio paths are made
// relative to the manifest's directory.
std::vector<UtteranceRecord> LoadManifest(const std::string& path,
                                          bool resolve_audio_paths = false);
void SaveManifest(const std::string& path,
                  const std::vector<UtteranceRecord>& records);

// Frame count for center-padded framing of |num_samples| samples.
inline Eigen::Index ExpectedFrameCount(size_t num_samples, int hop) {
  return 1 + static_cast<Eigen::Index>(num_samples / static_cast<size_t>(hop));
}

// Resamples to config.sample_rate when needed, then computes
// log(max(mel power, floor)). Throws ValidationError when the waveform is
// shorter than one analysis window.
MelFeatures ExtractMel(const Waveform& wav, const FeatureConfig& config);

// Reads the record's audio and extracts its features.
MelFeatures LoadMel(const UtteranceRecord& record, const FeatureConfig& config);

class DatasetBundle {
 public:
  const std::vector<UtteranceRecord>& records(DatasetRole role) const;
  bool has(DatasetRole role) const { return roles_.count(role) > 0; }
  const std::string& target_speaker() const { return target_speaker_; }
  // Distinct speakers of the pretrain corpus, sorted.
  std::vector<std::string> pretrain_speakers() const;

 private:
  friend DatasetBundle SplitRoles(
      const std::vector<std::pair<DatasetRole, std::vector<UtteranceRecord>>>&);
  std::map<DatasetRole, std::vector<UtteranceRecord>> roles_;
  std::string target_speaker_;
};

// Assigns each manifest its role. The pretrain corpus must be non-empty; the
// target corpus, when present, must hold exactly one speaker. A role may be
// given at most once.
DatasetBundle SplitRoles(
    const std::vector<std::pair<DatasetRole, std::vector<UtteranceRecord>>>&
        manifests);

// Distinct speaker ids of |records| in sorted order.
std::vector<std::string> DistinctSpeakers(const std::vector<UtteranceRecord>& records);

}  // namespace vc

#endif  // VC_DATA_H_
