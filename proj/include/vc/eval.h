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

#ifndef VC_EVAL_H_
#define VC_EVAL_H_

// Objective metrics: mel-cepstral distortion, F0 RMSE, character and word
// error rates, and checkpoint selection.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vc/audio.h"
#include "vc/config.h"
#include "vc/data.h"

namespace vc {

// Coefficients 1..order of the orthonormal DCT-II of the log-amplitude mel
// spectrum (half the log-power features). The energy term c0 is dropped.
Matrix MelCepstrum(const Matrix& log_mel, int order);

using AlignmentPath = std::vector<std::pair<int, int>>;

struct DtwResult {
  double cost = 0.0;   // sum of local distances along the path
  AlignmentPath path;  // from (0, 0) to (n - 1, m - 1)
};

// Euclidean local distance, steps (1,0), (0,1), (1,1) with unit weight.
DtwResult Dtw(const Matrix& a, const Matrix& b);

// (10 / ln 10) * sqrt(2 * sum_d (a_d - b_d)^2) for one frame pair.
double FrameDistortion(const RowVector& a, const RowVector& b);

struct McdResult {
  double mcd_db = 0.0;
  AlignmentPath path;
};

// DTW-aligned path mean of the frame distortion. Throws DimensionError when
// the orders differ.
McdResult Mcd(const Matrix& reference, const Matrix& converted);

struct F0Track {
  std::vector<double> f0_hz;  // 0 on unvoiced frames
  std::vector<bool> voiced;
  size_t size() const { return f0_hz.size(); }
};

struct F0Config {
  double fmin = 60.0;
  double fmax = 500.0;
  int hop = 256;
  int frame_length = 1024;
  double threshold = 0.15;     // cumulative-mean-normalized difference
  double silence_rms = 1e-3;   // quieter frames are unvoiced
};

// Difference-function pitch tracker with one frame per hop, centered like
// the mel frames (1 + N / hop frames).
F0Track ExtractF0(const std::vector<double>& samples, int sample_rate, const F0Config& config);

struct F0RmseResult {
  std::optional<double> rmse;  // empty when no frame pair is voiced in both
  int voiced_pairs = 0;
};

// RMSE over path pairs voiced in both tracks, in Hz or in log Hz.
F0RmseResult F0Rmse(const F0Track& reference, const F0Track& converted,
                    const AlignmentPath& path, bool log_scale = false);

enum class ErrorUnit { kCharacter, kWord };

// Levenshtein distance over arbitrary tokens.
int EditDistance(const std::vector<std::string>& hypothesis,
                 const std::vector<std::string>& reference);

// Edit distance divided by the reference length in units. Throws
// ValidationError on an empty reference.
double ErrorRate(const std::string& hypothesis, const std::string& reference, ErrorUnit unit);

struct UtteranceMetrics {
  std::string utterance_id;
  std::optional<double> mcd_db;
  std::optional<double> f0_rmse;
  std::optional<double> cer;
  std::optional<double> wer;
  int path_length = 0;
  int voiced_pairs = 0;
  int reference_frames = 0;
  int converted_frames = 0;
};

struct MetricReport {
  std::vector<UtteranceMetrics> utterances;
  std::vector<std::string> missing;  // reference ids without a conversion
  std::optional<double> mean_mcd;
  std::optional<double> mean_f0_rmse;
  std::optional<double> mean_cer;
  std::optional<double> mean_wer;

  // Arithmetic means over utterances where each metric is defined.
  void ComputeMeans();
  // Human-readable table, columns MCD, F0RMSE, CER, WER.
  std::string Table() const;
  // One JSON object per utterance, then one for the corpus means.
  std::string Jsonl() const;
};

struct EvaluationInputs {
  const MelFeatures* reference = nullptr;
  const MelFeatures* converted = nullptr;
  std::string utterance_id;
  std::string reference_text;  // empty: no CER/WER
  std::optional<std::string> hypothesis_text;
};

// Full metric set for one utterance. F0 is measured on Griffin-Lim
// reconstructions of both mels so reference and conversion pass through
// the same analysis chain.
UtteranceMetrics EvaluateUtterance(const EvaluationInputs& in, const FeatureConfig& features,
                                   const EvaluationConfig& eval, int griffin_lim_iterations);

struct Candidate {
  std::string name;
  MetricReport report;
};

// Index of the candidate with the lowest corpus-mean MCD (parallel
// reference) or CER (no reference); later candidates win ties.
size_t SelectModel(const std::vector<Candidate>& candidates, SelectionMode mode);

}  // namespace vc

#endif  // VC_EVAL_H_
