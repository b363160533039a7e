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

#ifndef VC_TOY_CORPUS_H_
#define VC_TOY_CORPUS_H_

// Synthetic speech-like corpora for smoke tests and demos. Each letter is a
// steady vowel-like segment (harmonics of a gliding F0 shaped by two
// formants), spaces are a quiet hum. Speakers differ in base F0, formant
// scaling and spectral tilt; utterances differ in speaking rate and pitch
// slope.

#include <cstdint>
#include <string>
#include <vector>

#include "vc/audio.h"
#include "vc/data.h"

namespace vc {

struct ToySpeaker {
  std::string id;
  double f0 = 120.0;
  double formant_scale = 1.0;
  double tilt = 0.0;  // dB per kHz
};

struct ToyProsody {
  double rate = 1.0;         // > 1 speaks faster
  double pitch_factor = 1.0;
  double pitch_slope = 0.0;  // relative F0 change across the utterance
};

inline constexpr const char* kToyCharset = "abcdefgh ";

// |text| must only use letters a-z and spaces.
Waveform SynthesizeToyUtterance(const std::string& text, const ToySpeaker& speaker,
                                const ToyProsody& prosody, int sample_rate,
                                uint64_t seed);

// A deterministic set of distinct speakers.
std::vector<ToySpeaker> ToySpeakers(int count);

// Random words over the toy charset (without spaces at the ends).
std::string RandomToyText(uint64_t seed, int min_chars = 4, int max_chars = 7);

ToyProsody RandomToyProsody(uint64_t seed);

struct ToyCorpusSpec {
  std::vector<ToySpeaker> speakers;
  int utterances_per_speaker = 5;
  std::string prefix = "utt";
  // Share transcripts across speakers (utterance k has the same text for
  // everyone) when true.
  bool shared_texts = false;
  uint64_t seed = 1;
  int sample_rate = 16000;
};

// Writes one WAV per utterance into |dir| and returns the records, with
// audio paths relative to |dir|.
std::vector<UtteranceRecord> WriteToyCorpus(const std::string& dir,
                                            const ToyCorpusSpec& spec);

// A complete toy setup: a multispeaker TTS corpus, one target speaker for
// fine-tuning, source utterances from a further speaker, and the target
// speaker's renditions of the source texts under the source ids.
struct ToyExperimentSpec {
  int tts_speakers = 4;
  int tts_utterances = 10;  // per speaker
  int target_utterances = 6;
  int source_utterances = 5;
  uint64_t seed = 1;
  int sample_rate = 16000;
};

struct ToyExperiment {
  std::string tts_manifest;
  std::string target_manifest;
  std::string source_manifest;
  std::string reference_manifest;
  std::string target_speaker;
};

ToyExperiment WriteToyExperiment(const std::string& dir, const ToyExperimentSpec& spec);

}  // namespace vc

#endif  // VC_TOY_CORPUS_H_
