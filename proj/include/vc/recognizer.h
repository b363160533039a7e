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

#ifndef VC_RECOGNIZER_H_
#define VC_RECOGNIZER_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vc/common.h"
#include "vc/data.h"

namespace vc {

enum class ContentKind { kText, kFrameCode };

const char* ContentKindName(ContentKind kind);
ContentKind ParseContentKind(const std::string& name);

// The recognizer's output: a speaker-free symbol sequence.
struct ContentSequence {
  ContentKind kind = ContentKind::kText;
  std::vector<int> symbols;
  int vocabulary_size = 0;
  bool frame_aligned = false;  // true iff kind == kFrameCode

  int length() const { return static_cast<int>(symbols.size()); }
  // Throws ValidationError on an out-of-vocabulary id or kind/alignment
  // disagreement.
  void Validate() const;
  bool operator==(const ContentSequence&) const = default;
};

// Splits UTF-8 text into code points, each returned as its byte string.
std::vector<std::string> SplitUtf8(const std::string& text);

// Lowercases ASCII letters, collapses whitespace runs to one space, trims.
std::string NormalizeText(const std::string& text);

// Symbol table of single code points; id = position.
class Charset {
 public:
  explicit Charset(std::vector<std::string> symbols);
  // Every code point of |chars| becomes one symbol, in order.
  static Charset FromString(const std::string& chars);

  int Id(const std::string& symbol) const;  // -1 when absent
  const std::string& Symbol(int id) const { return symbols_.at(id); }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

// Oracle text recognizer: maps the normalized transcript to charset ids.
// Depends on the transcript only.
ContentSequence RecognizeText(const UtteranceRecord& record, const Charset& charset);

std::string DecodeText(const ContentSequence& seq, const Charset& charset);

// Replaces each symbol, with probability |rate|, by a different uniformly
// chosen symbol. Used to probe robustness to recognition errors.
ContentSequence InjectRecognitionNoise(const ContentSequence& seq, double rate,
                                       uint64_t seed);

struct FrameCodebook {
  Matrix centroids;  // (K_codes, D)
  std::string training_corpus_id;

  int num_codes() const { return static_cast<int>(centroids.rows()); }
};

// k-means (k-means++ seeding, Lloyd iterations to a fixed point or
// |max_iterations|) over every frame of |corpus|.
FrameCodebook TrainCodebook(const std::vector<MelFeatures>& corpus,
                            int num_codes, uint64_t seed,
                            int max_iterations = 100,
                            const std::string& corpus_id = "");

// Nearest-centroid code per frame; ties go to the lowest index.
ContentSequence ExtractFrameCodes(const MelFeatures& mel,
                                  const FrameCodebook& codebook);

}  // namespace vc

#endif  // VC_RECOGNIZER_H_
