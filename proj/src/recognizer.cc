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

#include "vc/recognizer.h"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

namespace vc {

const char* ContentKindName(ContentKind kind) {
  return kind == ContentKind::kText ? "text" : "frame-code";
}

ContentKind ParseContentKind(const std::string& name) {
  if (name == "text") return ContentKind::kText;
  if (name == "frame-code") return ContentKind::kFrameCode;
  throw ValidationError("unknown representation '" + name +
                        "' (expected text or frame-code)");
}

void ContentSequence::Validate() const {
  if (frame_aligned != (kind == ContentKind::kFrameCode))
    throw ValidationError("frame_aligned must be set iff kind is frame-code");
  for (int s : symbols) {
    if (s < 0 || s >= vocabulary_size)
      throw ValidationError("symbol id " + std::to_string(s) +
                            " outside vocabulary of size " +
                            std::to_string(vocabulary_size));
  }
}

std::vector<std::string> SplitUtf8(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string NormalizeText(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

Charset::Charset(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ValidationError("charset is empty");
  for (size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second)
      throw ValidationError("charset repeats symbol '" + symbols_[i] + "'");
  }
}

Charset Charset::FromString(const std::string& chars) {
  return Charset(SplitUtf8(chars));
}

int Charset::Id(const std::string& symbol) const {
  auto it = ids_.find(symbol);
  return it == ids_.end() ? -1 : it->second;
}

ContentSequence RecognizeText(const UtteranceRecord& record, const Charset& charset) {
  const std::string norm = NormalizeText(record.transcript);
  if (norm.empty())
    throw ValidationError("utterance '" + record.utterance_id +
                          "' has an empty transcript");
  ContentSequence seq;
  seq.kind = ContentKind::kText;
  seq.vocabulary_size = charset.size();
  std::vector<std::string> unknown;
  for (const auto& cp : SplitUtf8(norm)) {
    const int id = charset.Id(cp);
    if (id < 0) {
      if (std::find(unknown.begin(), unknown.end(), cp) == unknown.end())
        unknown.push_back(cp);
      continue;
    }
    seq.symbols.push_back(id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "\"" : ", \"") + u + "\"";
    throw ValidationError("utterance '" + record.utterance_id +
                          "': characters outside the charset: " + list);
  }
  return seq;
}

std::string DecodeText(const ContentSequence& seq, const Charset& charset) {
  std::string out;
  for (int s : seq.symbols) out += charset.Symbol(s);
  return out;
}

ContentSequence InjectRecognitionNoise(const ContentSequence& seq, double rate,
                                       uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ValidationError("noise rate must be in [0, 1]");
  ContentSequence out = seq;
  if (rate == 0.0 || seq.vocabulary_size < 2) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, seq.vocabulary_size - 2);
  for (int& s : out.symbols) {
    if (coin(rng) >= rate) continue;
    const int r = pick(rng);
    s = r >= s ? r + 1 : r;
  }
  return out;
}

namespace {

double SqDist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

int Nearest(const Matrix& points, Eigen::Index i, const Matrix& centroids,
            double* best_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    const double d = SqDist(points, i, centroids, k);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

}  // namespace

FrameCodebook TrainCodebook(const std::vector<MelFeatures>& corpus,
                            int num_codes, uint64_t seed, int max_iterations,
                            const std::string& corpus_id) {
  if (num_codes < 2) throw ValidationError("K_codes must be >= 2");
  Eigen::Index total = 0, dim = -1;
  for (const auto& m : corpus) {
    if (m.num_frames() == 0) continue;
    if (dim >= 0 && m.dim() != dim)
      throw DimensionError("codebook corpus mixes feature dimensions");
    dim = m.dim();
    total += m.num_frames();
  }
  if (total < num_codes)
    throw ValidationError("codebook corpus has " + std::to_string(total) +
                          " frames, fewer than K_codes = " +
                          std::to_string(num_codes));
  Matrix points(total, dim);
  Eigen::Index row = 0;
  for (const auto& m : corpus) {
    if (m.num_frames() == 0) continue;
    points.middleRows(row, m.num_frames()) = m.frames;
    row += m.num_frames();
  }
  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0; i < total; ++i) {
    std::vector<double> v(dim);
    for (Eigen::Index d = 0; d < dim; ++d) v[d] = points(i, d);
    distinct.insert(std::move(v));
    if (distinct.size() >= static_cast<size_t>(num_codes)) break;
  }
  if (distinct.size() < static_cast<size_t>(num_codes))
    throw ValidationError("codebook corpus has fewer distinct frames than K_codes");

  std::mt19937_64 rng(seed);
  Matrix centroids(num_codes, dim);
  std::uniform_int_distribution<Eigen::Index> first(0, total - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(total);
  for (Eigen::Index i = 0; i < total; ++i) d2[i] = SqDist(points, i, centroids, 0);
  for (int k = 1; k < num_codes; ++k) {
    double sum = 0.0;
    for (double v : d2) sum += v;
    std::uniform_real_distribution<double> u(0.0, sum);
    double target = u(rng);
    Eigen::Index chosen = -1;
    for (Eigen::Index i = 0; i < total; ++i) {
      if (d2[i] <= 0.0) continue;
      chosen = i;
      target -= d2[i];
      if (target <= 0.0) break;
    }
    centroids.row(k) = points.row(chosen);
    for (Eigen::Index i = 0; i < total; ++i)
      d2[i] = std::min(d2[i], SqDist(points, i, centroids, k));
  }

  std::vector<int> assign(total, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    std::vector<double> dist(total);
    for (Eigen::Index i = 0; i < total; ++i) {
      const int a = Nearest(points, i, centroids, &dist[i]);
      if (a != assign[i]) changed = true;
      assign[i] = a;
    }
    if (!changed && iter > 0) break;
    Matrix sums = Matrix::Zero(num_codes, dim);
    std::vector<int> counts(num_codes, 0);
    for (Eigen::Index i = 0; i < total; ++i) {
      sums.row(assign[i]) += points.row(i);
      counts[assign[i]] += 1;
    }
    for (int k = 0; k < num_codes; ++k) {
      if (counts[k] > 0) {
        centroids.row(k) = sums.row(k) / counts[k];
        continue;
      }
      // Empty cluster: move it to the point worst served by its centroid.
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < total; ++i)
        if (dist[i] > dist[far]) far = i;
      centroids.row(k) = points.row(far);
      dist[far] = 0.0;
      changed = true;
    }
  }
  FrameCodebook cb;
  cb.centroids = std::move(centroids);
  cb.training_corpus_id = corpus_id;
  return cb;
}

ContentSequence ExtractFrameCodes(const MelFeatures& mel,
                                  const FrameCodebook& codebook) {
  if (mel.dim() != codebook.centroids.cols())
    throw DimensionError("mel dimension " + std::to_string(mel.dim()) +
                         " != codebook dimension " +
                         std::to_string(codebook.centroids.cols()));
  ContentSequence seq;
  seq.kind = ContentKind::kFrameCode;
  seq.frame_aligned = true;
  seq.vocabulary_size = codebook.num_codes();
  seq.symbols.resize(mel.num_frames());
  for (Eigen::Index t = 0; t < mel.num_frames(); ++t)
    seq.symbols[t] = Nearest(mel.frames, t, codebook.centroids, nullptr);
  return seq;
}

}  // namespace vc
