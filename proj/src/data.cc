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

#include "vc/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace vc {

namespace fs = std::filesystem;
using nlohmann::json;

void FeatureConfig::Validate() const {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (fft_size < 2) throw ValidationError("fft_size must be >= 2");
  if (hop < 1) throw ValidationError("hop must be >= 1");
  if (n_mels < 1) throw ValidationError("n_mels must be >= 1");
  if (!(power_floor > 0.0)) throw ValidationError("power_floor must be > 0");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    throw ValidationError("need 0 <= fmin < fmax <= sample_rate / 2");
}

const char* RoleName(DatasetRole role) {
  switch (role) {
    case DatasetRole::kAsr: return "asr";
    case DatasetRole::kTtsPretrain: return "tts";
    case DatasetRole::kTargetFinetune: return "target";
    case DatasetRole::kSourceEval: return "source";
  }
  return "?";
}

DatasetRole ParseRole(const std::string& name) {
  for (DatasetRole r : {DatasetRole::kAsr, DatasetRole::kTtsPretrain,
                        DatasetRole::kTargetFinetune, DatasetRole::kSourceEval})
    if (name == RoleName(r)) return r;
  throw ValidationError("unknown corpus role '" + name +
                        "' (expected asr, tts, target or source)");
}

std::vector<UtteranceRecord> LoadManifest(const std::string& path,
                                          bool resolve_audio_paths) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed record (" + e.what() + ")");
    }
    if (!j.is_object()) throw ParseError(where + ": record is not an object");
    auto field = [&](const char* key, bool required) -> std::string {
      auto it = j.find(key);
      if (it == j.end()) {
        if (required) throw ParseError(where + ": missing field '" + key + "'");
        return "";
      }
      if (!it->is_string())
        throw ParseError(where + ": field '" + key + "' is not a string");
      return it->get<std::string>();
    };
    UtteranceRecord r;
    r.utterance_id = field("utterance_id", true);
    r.audio_path = field("audio_path", true);
    r.transcript = field("transcript", false);
    r.speaker_id = field("speaker_id", true);
    r.language = field("language", false);
    if (r.utterance_id.empty()) throw ParseError(where + ": empty utterance_id");
    if (!seen.insert(r.utterance_id).second)
      throw ValidationError(where + ": duplicate utterance_id '" +
                            r.utterance_id + "'");
    if (resolve_audio_paths && fs::path(r.audio_path).is_relative())
      r.audio_path = (base / r.audio_path).lexically_normal().string();
    records.push_back(std::move(r));
  }
  return records;
}

void SaveManifest(const std::string& path,
                  const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest " + path);
  for (const auto& r : records) {
    json j = {{"utterance_id", r.utterance_id},
              {"audio_path", r.audio_path},
              {"transcript", r.transcript},
              {"speaker_id", r.speaker_id},
              {"language", r.language}};
    out << j.dump() << '\n';
  }
}

MelFeatures ExtractMel(const Waveform& wav, const FeatureConfig& config) {
  config.Validate();
  if (wav.samples.empty()) throw ValidationError("empty waveform");
  const Waveform w = wav.sample_rate == config.sample_rate
                         ? wav
                         : Resample(wav, config.sample_rate);
  const Matrix power = PowerSpectrogram(w.samples, {config.fft_size, config.hop});
  const Matrix fb = MelFilterbank(config.sample_rate, config.fft_size,
                                  config.n_mels, config.fmin, config.fmax);
  MelFeatures mel;
  mel.frames = (power * fb.transpose())
                   .cwiseMax(config.power_floor)
                   .unaryExpr([](double v) { return std::log(v); });
  mel.frame_shift_ms = 1000.0 * config.hop / config.sample_rate;
  mel.sample_rate = config.sample_rate;
  return mel;
}

MelFeatures LoadMel(const UtteranceRecord& record, const FeatureConfig& config) {
  return ExtractMel(ReadWav(record.audio_path), config);
}

const std::vector<UtteranceRecord>& DatasetBundle::records(DatasetRole role) const {
  auto it = roles_.find(role);
  if (it == roles_.end())
    throw ValidationError(std::string("bundle has no ") + RoleName(role) +
                          " corpus");
  return it->second;
}

std::vector<std::string> DatasetBundle::pretrain_speakers() const {
  return DistinctSpeakers(records(DatasetRole::kTtsPretrain));
}

std::vector<std::string> DistinctSpeakers(const std::vector<UtteranceRecord>& records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.speaker_id);
  return {s.begin(), s.end()};
}

DatasetBundle SplitRoles(
    const std::vector<std::pair<DatasetRole, std::vector<UtteranceRecord>>>&
        manifests) {
  DatasetBundle bundle;
  for (const auto& [role, records] : manifests) {
    if (bundle.roles_.count(role))
      throw ValidationError(std::string("role ") + RoleName(role) +
                            " assigned to more than one manifest");
    bundle.roles_[role] = records;
  }
  auto pre = bundle.roles_.find(DatasetRole::kTtsPretrain);
  if (pre == bundle.roles_.end() || pre->second.empty())
    throw ValidationError("TTS pretrain corpus is missing or empty");
  auto trg = bundle.roles_.find(DatasetRole::kTargetFinetune);
  if (trg != bundle.roles_.end()) {
    const auto speakers = DistinctSpeakers(trg->second);
    if (speakers.size() != 1)
      throw ValidationError("target fine-tune corpus must contain exactly one "
                            "speaker, found " + std::to_string(speakers.size()));
    bundle.target_speaker_ = speakers[0];
  }
  return bundle;
}

}  // namespace vc
