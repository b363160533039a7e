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

#include "vc/toy_corpus.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace vc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Formants {
  double f1, f2;
};

Formants LetterFormants(char c) {
  const int i = c - 'a';
  return {300.0 + (i * 137) % 600, 900.0 + (i * 389) % 1600};
}

}  // namespace

Waveform SynthesizeToyUtterance(const std::string& text, const ToySpeaker& speaker,
                                const ToyProsody& prosody, int sample_rate,
                                uint64_t seed) {
  if (text.empty()) throw ValidationError("toy utterance text is empty");
  for (char c : text)
    if (c != ' ' && (c < 'a' || c > 'z'))
      throw ValidationError(std::string("toy text supports a-z and space, got '") + c + "'");
  const double seg = 0.08 / prosody.rate;
  const auto seg_samples = static_cast<size_t>(seg * sample_rate);
  const size_t n = seg_samples * text.size() + static_cast<size_t>(0.03 * sample_rate);
  const auto xfade = static_cast<double>(static_cast<size_t>(0.02 * sample_rate));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Waveform wav;
  wav.sample_rate = sample_rate;
  wav.samples.assign(n, 0.0);
  const int max_harm = 200;
  std::vector<double> phase(max_harm + 1, 0.0);
  for (size_t s = 0; s < n; ++s) {
    const double t = static_cast<double>(s) / n;
    const size_t idx = std::min(s / seg_samples, text.size() - 1);
    const double within = static_cast<double>(s - idx * seg_samples);
    // Blend toward the next segment at its boundary.
    double blend = 0.0;
    size_t next = idx;
    if (idx + 1 < text.size() && within > seg_samples - xfade) {
      next = idx + 1;
      blend = (within - (seg_samples - xfade)) / xfade;
    }
    auto voiced_amp = [&](size_t k) { return text[k] == ' ' ? 0.05 : 1.0; };
    const double amp = (1.0 - blend) * voiced_amp(idx) + blend * voiced_amp(next);
    const double f0 = speaker.f0 * prosody.pitch_factor *
                      (1.0 + prosody.pitch_slope * (t - 0.5));
    const Formants fa = text[idx] == ' ' ? Formants{500, 1500} : LetterFormants(text[idx]);
    const Formants fb = text[next] == ' ' ? Formants{500, 1500} : LetterFormants(text[next]);
    const double f1 = speaker.formant_scale * ((1 - blend) * fa.f1 + blend * fb.f1);
    const double f2 = speaker.formant_scale * ((1 - blend) * fa.f2 + blend * fb.f2);
    double v = 0.0;
    for (int h = 1; h <= max_harm; ++h) {
      const double fh = h * f0;
      if (fh >= 0.5 * sample_rate) break;
      phase[h] += kTwoPi * fh / sample_rate;
      if (phase[h] > kTwoPi) phase[h] -= kTwoPi;
      const double e1 = std::exp(-0.5 * std::pow((fh - f1) / 90.0, 2));
      const double e2 = 0.6 * std::exp(-0.5 * std::pow((fh - f2) / 120.0, 2));
      const double tilt = std::pow(10.0, speaker.tilt * fh / 1000.0 / 20.0);
      v += (e1 + e2 + 0.02) * tilt * std::sin(phase[h]);
    }
    wav.samples[s] = 0.1 * amp * v + 1e-5 * noise(rng);
  }
  return wav;
}

std::vector<ToySpeaker> ToySpeakers(int count) {
  std::vector<ToySpeaker> out;
  for (int i = 0; i < count; ++i) {
    ToySpeaker s;
    s.id = "spk" + std::to_string(i);
    s.f0 = 100.0 + 45.0 * i;
    s.formant_scale = 0.9 + 0.07 * (i % 4);
    s.tilt = -1.0 - 0.8 * (i % 3);
    out.push_back(s);
  }
  return out;
}

std::string RandomToyText(uint64_t seed, int min_chars, int max_chars) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(min_chars, max_chars);
  std::uniform_int_distribution<int> letter(0, 7);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int n = len(rng);
  std::string text;
  for (int i = 0; i < n; ++i) {
    const bool space = i > 0 && i < n - 1 && text.back() != ' ' && coin(rng) < 0.2;
    text.push_back(space ? ' ' : static_cast<char>('a' + letter(rng)));
  }
  return text;
}

ToyProsody RandomToyProsody(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ToyProsody p;
  p.rate = 1.0 + 0.15 * u(rng);
  p.pitch_factor = 1.0 + 0.1 * u(rng);
  p.pitch_slope = 0.3 * u(rng);
  return p;
}

std::vector<UtteranceRecord> WriteToyCorpus(const std::string& dir,
                                            const ToyCorpusSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<UtteranceRecord> records;
  for (size_t si = 0; si < spec.speakers.size(); ++si) {
    const ToySpeaker& spk = spec.speakers[si];
    for (int k = 0; k < spec.utterances_per_speaker; ++k) {
      const uint64_t text_seed = spec.shared_texts ? spec.seed * 1000 + k
                                                   : spec.seed * 1000 + si * 100 + k;
      const uint64_t utt_seed = spec.seed * 7919 + si * 131 + k;
      UtteranceRecord r;
      r.utterance_id = spec.prefix + "_" + spk.id + "_" + std::to_string(k);
      r.transcript = RandomToyText(text_seed);
      r.speaker_id = spk.id;
      r.language = "toy";
      r.audio_path = r.utterance_id + ".wav";
      WriteWav((fs::path(dir) / r.audio_path).string(),
               SynthesizeToyUtterance(r.transcript, spk, RandomToyProsody(utt_seed),
                                      spec.sample_rate, utt_seed));
      records.push_back(std::move(r));
    }
  }
  return records;
}

ToyExperiment WriteToyExperiment(const std::string& dir, const ToyExperimentSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.tts_speakers < 1 || spec.tts_utterances < 1 || spec.target_utterances < 1 ||
      spec.source_utterances < 1)
    throw ValidationError("toy experiment: every set needs at least one utterance");
  const std::vector<ToySpeaker> all = ToySpeakers(spec.tts_speakers + 2);
  const ToySpeaker& target = all[spec.tts_speakers];
  const ToySpeaker& source = all[spec.tts_speakers + 1];
  ToyExperiment out;
  out.target_speaker = target.id;

  auto write_set = [&](const std::string& name, std::vector<ToySpeaker> speakers, int count,
                       uint64_t seed) {
    ToyCorpusSpec cs;
    cs.speakers = std::move(speakers);
    cs.utterances_per_speaker = count;
    cs.prefix = name;
    cs.seed = seed;
    cs.sample_rate = spec.sample_rate;
    const std::string sub = (fs::path(dir) / name).string();
    const auto records = WriteToyCorpus(sub, cs);
    const std::string manifest = (fs::path(sub) / "manifest.jsonl").string();
    SaveManifest(manifest, records);
    return std::make_pair(manifest, records);
  };
  out.tts_manifest =
      write_set("tts", {all.begin(), all.begin() + spec.tts_speakers}, spec.tts_utterances,
                spec.seed)
          .first;
  out.target_manifest = write_set("target", {target}, spec.target_utterances, spec.seed + 1).first;
  const auto [src_manifest, src_records] =
      write_set("source", {source}, spec.source_utterances, spec.seed + 2);
  out.source_manifest = src_manifest;

  const fs::path ref_dir = fs::path(dir) / "reference";
  fs::create_directories(ref_dir);
  std::vector<UtteranceRecord> refs;
  for (size_t k = 0; k < src_records.size(); ++k) {
    UtteranceRecord r = src_records[k];
    r.speaker_id = target.id;
    const uint64_t utt_seed = (spec.seed + 3) * 7919 + k;
    WriteWav((ref_dir / r.audio_path).string(),
             SynthesizeToyUtterance(r.transcript, target, RandomToyProsody(utt_seed),
                                    spec.sample_rate, utt_seed));
    refs.push_back(std::move(r));
  }
  out.reference_manifest = (ref_dir / "manifest.jsonl").string();
  SaveManifest(out.reference_manifest, refs);
  return out;
}

}  // namespace vc
