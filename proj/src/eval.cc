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

#include "vc/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "vc/recognizer.h"

namespace vc {

namespace {

const double kDbScale = 10.0 / std::numbers::ln10;

std::vector<std::string> Words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string Cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

nlohmann::json Opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

Matrix MelCepstrum(const Matrix& log_mel, int order) {
  const Eigen::Index D = log_mel.cols();
  if (log_mel.rows() == 0 || D == 0) throw ValidationError("mel_cepstrum: empty input");
  if (order < 1 || order >= D)
    throw ValidationError("mel_cepstrum: order must be in [1, mel_dim)");
  Matrix basis(D, order);
  const double scale = std::sqrt(2.0 / static_cast<double>(D));
  for (Eigen::Index d = 0; d < D; ++d)
    for (int k = 1; k <= order; ++k)
      basis(d, k - 1) =
          scale * std::cos(std::numbers::pi * k * (2.0 * d + 1.0) / (2.0 * static_cast<double>(D)));
  return (0.5 * log_mel) * basis;
}

DtwResult Dtw(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows(), m = b.rows();
  if (n == 0 || m == 0) throw ValidationError("dtw: empty sequence");
  if (a.cols() != b.cols()) throw DimensionError("dtw: feature dimensions differ");
  const double inf = std::numeric_limits<double>::infinity();
  Matrix acc = Matrix::Constant(n, m, inf);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = (a.row(i) - b.row(j)).norm();
      if (i == 0 && j == 0) {
        acc(i, j) = d;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = acc(i - 1, j - 1);
      if (i > 0) best = std::min(best, acc(i - 1, j));
      if (j > 0) best = std::min(best, acc(i, j - 1));
      acc(i, j) = d + best;
    }
  DtwResult r;
  r.cost = acc(n - 1, m - 1);
  Eigen::Index i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1), up = acc(i - 1, j), left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

double FrameDistortion(const RowVector& a, const RowVector& b) {
  return kDbScale * std::sqrt(2.0 * (a - b).squaredNorm());
}

McdResult Mcd(const Matrix& reference, const Matrix& converted) {
  if (reference.cols() != converted.cols())
    throw DimensionError("mcd: cepstral orders differ");
  McdResult r;
  r.path = Dtw(reference, converted).path;
  double sum = 0.0;
  for (const auto& [i, j] : r.path) sum += FrameDistortion(reference.row(i), converted.row(j));
  r.mcd_db = sum / static_cast<double>(r.path.size());
  return r;
}

F0Track ExtractF0(const std::vector<double>& samples, int sample_rate, const F0Config& config) {
  if (!(config.fmin > 0.0 && config.fmin < config.fmax))
    throw ValidationError("extract_f0: need 0 < fmin < fmax");
  if (sample_rate < 2.0 * config.fmax)
    throw ValidationError("extract_f0: sample rate below 2 * fmax");
  const int max_lag = static_cast<int>(std::ceil(sample_rate / config.fmin));
  const int min_lag = std::max(2, static_cast<int>(std::floor(sample_rate / config.fmax)));
  const int W = config.frame_length;
  if (W <= max_lag + 1)
    throw ValidationError("extract_f0: frame too short for fmin");
  const int window = W - max_lag;
  const size_t n = samples.size();
  const size_t frames = 1 + n / static_cast<size_t>(config.hop);

  F0Track track;
  track.f0_hz.assign(frames, 0.0);
  track.voiced.assign(frames, false);
  std::vector<double> x(W), diff(max_lag + 2), cmnd(max_lag + 2);
  for (size_t t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t * config.hop) - W / 2;
    double energy = 0.0;
    for (int k = 0; k < W; ++k) {
      const long idx = start + k;
      x[k] = (idx >= 0 && static_cast<size_t>(idx) < n) ? samples[idx] : 0.0;
    }
    for (int k = 0; k < window; ++k) energy += x[k] * x[k];
    if (std::sqrt(energy / window) < config.silence_rms) continue;

    diff[0] = 0.0;
    for (int lag = 1; lag <= max_lag + 1 && lag < W - window + 1; ++lag) {
      double s = 0.0;
      for (int k = 0; k < window; ++k) {
        const double d = x[k] - x[k + lag];
        s += d * d;
      }
      diff[lag] = s;
    }
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int lag = 1; lag <= max_lag; ++lag) {
      running += diff[lag];
      cmnd[lag] = running > 0.0 ? diff[lag] * lag / running : 1.0;
    }
    int best = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (cmnd[lag] < config.threshold) {
        while (lag + 1 <= max_lag && cmnd[lag + 1] < cmnd[lag]) ++lag;
        best = lag;
        break;
      }
    }
    if (best < 0) continue;
    double lag = best;
    if (best > 1 && best < max_lag) {
      const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom > 0.0) lag += 0.5 * (a - c) / denom;
    }
    track.f0_hz[t] = sample_rate / lag;
    track.voiced[t] = true;
  }
  return track;
}

F0RmseResult F0Rmse(const F0Track& reference, const F0Track& converted,
                    const AlignmentPath& path, bool log_scale) {
  F0RmseResult r;
  double sum = 0.0;
  for (const auto& [i, j] : path) {
    if (i < 0 || j < 0 || static_cast<size_t>(i) >= reference.size() ||
        static_cast<size_t>(j) >= converted.size())
      throw DimensionError("f0_rmse: alignment path leaves the tracks");
    if (!reference.voiced[i] || !converted.voiced[j]) continue;
    const double a = log_scale ? std::log(reference.f0_hz[i]) : reference.f0_hz[i];
    const double b = log_scale ? std::log(converted.f0_hz[j]) : converted.f0_hz[j];
    sum += (a - b) * (a - b);
    ++r.voiced_pairs;
  }
  if (r.voiced_pairs > 0) r.rmse = std::sqrt(sum / r.voiced_pairs);
  return r;
}

int EditDistance(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  std::vector<int> prev(ref.size() + 1), cur(ref.size() + 1);
  for (size_t j = 0; j <= ref.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= ref.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

double ErrorRate(const std::string& hypothesis, const std::string& reference, ErrorUnit unit) {
  const auto ref = unit == ErrorUnit::kCharacter ? SplitUtf8(reference) : Words(reference);
  const auto hyp = unit == ErrorUnit::kCharacter ? SplitUtf8(hypothesis) : Words(hypothesis);
  if (ref.empty()) throw ValidationError("error_rates: empty reference");
  return static_cast<double>(EditDistance(hyp, ref)) / static_cast<double>(ref.size());
}

void MetricReport::ComputeMeans() {
  auto mean = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (const auto& u : utterances)
      if (const auto& v = u.*field) {
        sum += *v;
        ++count;
      }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  mean_mcd = mean(&UtteranceMetrics::mcd_db);
  mean_f0_rmse = mean(&UtteranceMetrics::f0_rmse);
  mean_cer = mean(&UtteranceMetrics::cer);
  mean_wer = mean(&UtteranceMetrics::wer);
}

std::string MetricReport::Table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s\n", "utterance",
                "MCD[dB]", "F0RMSE", "CER", "WER");
  out << "# MCD is mel-cepstral (internal); not comparable to WORLD-based values\n" << line;
  for (const auto& u : utterances) {
    std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s\n", u.utterance_id.c_str(),
                  Cell(u.mcd_db).c_str(), Cell(u.f0_rmse).c_str(), Cell(u.cer).c_str(),
                  Cell(u.wer).c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s\n", "MEAN",
                Cell(mean_mcd).c_str(), Cell(mean_f0_rmse).c_str(), Cell(mean_cer).c_str(),
                Cell(mean_wer).c_str());
  out << line;
  for (const auto& id : missing) out << "# missing conversion: " << id << "\n";
  return out.str();
}

std::string MetricReport::Jsonl() const {
  std::ostringstream out;
  for (const auto& u : utterances) {
    nlohmann::json j = {{"utterance_id", u.utterance_id},
                        {"mcd_db", Opt(u.mcd_db)},
                        {"f0_rmse", Opt(u.f0_rmse)},
                        {"cer", Opt(u.cer)},
                        {"wer", Opt(u.wer)},
                        {"dtw_path_length", u.path_length},
                        {"voiced_pairs", u.voiced_pairs},
                        {"reference_frames", u.reference_frames},
                        {"converted_frames", u.converted_frames}};
    out << j.dump() << "\n";
  }
  nlohmann::json summary = {{"utterance_id", nullptr},
                            {"corpus_mean", true},
                            {"mcd_db", Opt(mean_mcd)},
                            {"f0_rmse", Opt(mean_f0_rmse)},
                            {"cer", Opt(mean_cer)},
                            {"wer", Opt(mean_wer)},
                            {"utterances", utterances.size()},
                            {"missing", missing}};
  out << summary.dump() << "\n";
  return out.str();
}

UtteranceMetrics EvaluateUtterance(const EvaluationInputs& in, const FeatureConfig& features,
                                   const EvaluationConfig& eval, int griffin_lim_iterations) {
  if (in.reference == nullptr || in.converted == nullptr)
    throw ValidationError("evaluate: missing mel");
  UtteranceMetrics m;
  m.utterance_id = in.utterance_id;
  m.reference_frames = static_cast<int>(in.reference->num_frames());
  m.converted_frames = static_cast<int>(in.converted->num_frames());
  const Matrix ref_cep = MelCepstrum(in.reference->frames, eval.cepstrum_order);
  const Matrix conv_cep = MelCepstrum(in.converted->frames, eval.cepstrum_order);
  const McdResult mcd = Mcd(ref_cep, conv_cep);
  m.mcd_db = mcd.mcd_db;
  m.path_length = static_cast<int>(mcd.path.size());

  const StftConfig stft{features.fft_size, features.hop};
  F0Config f0;
  f0.fmin = eval.f0_min;
  f0.fmax = eval.f0_max;
  f0.hop = features.hop;
  f0.frame_length = features.fft_size;
  auto track = [&](const Matrix& log_mel) {
    const auto wav = InvertLogMel(log_mel, features.sample_rate, stft, features.fmin,
                                  features.fmax, griffin_lim_iterations);
    F0Track t = ExtractF0(wav, features.sample_rate, f0);
    // The reconstruction can carry one frame more or less than the mel.
    t.f0_hz.resize(log_mel.rows(), 0.0);
    t.voiced.resize(log_mel.rows(), false);
    return t;
  };
  const F0RmseResult rmse =
      F0Rmse(track(in.reference->frames), track(in.converted->frames), mcd.path, eval.log_f0);
  m.f0_rmse = rmse.rmse;
  m.voiced_pairs = rmse.voiced_pairs;

  if (!in.reference_text.empty() && in.hypothesis_text) {
    const std::string ref = NormalizeText(in.reference_text);
    const std::string hyp = NormalizeText(*in.hypothesis_text);
    m.cer = ErrorRate(hyp, ref, ErrorUnit::kCharacter);
    m.wer = ErrorRate(hyp, ref, ErrorUnit::kWord);
  }
  return m;
}

size_t SelectModel(const std::vector<Candidate>& candidates, SelectionMode mode) {
  if (candidates.empty()) throw ValidationError("select_model: no candidates");
  std::optional<size_t> best;
  double best_value = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const MetricReport& r = candidates[i].report;
    const std::optional<double> v =
        mode == SelectionMode::kParallelReference ? r.mean_mcd : r.mean_cer;
    if (!v) continue;
    if (!best || *v <= best_value) {
      best = i;
      best_value = *v;
    }
  }
  if (!best)
    throw ValidationError(std::string("select_model: no candidate reports ") +
                          (mode == SelectionMode::kParallelReference ? "MCD" : "CER"));
  return *best;
}

}  // namespace vc
