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

#ifndef VC_VIZ_H_
#define VC_VIZ_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vc/checkpoint.h"
#include "vc/common.h"
#include "vc/pipelines.h"

namespace vc {

enum class EmbeddingSource { kRefEnc, kTp };
const char* EmbeddingSourceName(EmbeddingSource source);  // "refenc" / "tp"
EmbeddingSource ParseEmbeddingSource(const std::string& name);

struct EmbeddingSet {
  Matrix embeddings;  // (N, style_dim)
  std::vector<std::string> utterance_ids;
  std::vector<std::string> speakers;
};

// refenc reads each utterance's audio, tp reads its recognized content.
EmbeddingSet CollectEmbeddings(const Checkpoint& ckpt, const Corpus& corpus,
                               EmbeddingSource source, int workers = 1);

enum class ProjectionMethod { kPca, kTsne };
const char* ProjectionMethodName(ProjectionMethod method);
ProjectionMethod ParseProjectionMethod(const std::string& name);

struct TsneConfig {
  double perplexity = 5.0;
  int iterations = 1000;
  int exaggeration_iterations = 250;
  double exaggeration = 12.0;
  double learning_rate = 100.0;
};

// Principal axes come out in order of decreasing variance, each signed so its
// largest-magnitude loading is positive.
Matrix ProjectPca(const Matrix& data);
Matrix ProjectTsne(const Matrix& data, uint64_t seed, const TsneConfig& config = {});
Matrix Project2d(const Matrix& data, ProjectionMethod method, uint64_t seed);

// Mean silhouette coefficient on Euclidean distances. Points whose own and
// nearest-other mean distances are both 0 score 0.
double Clusterness(const Matrix& data, const std::vector<std::string>& labels);

// Tab-separated utterance_id, speaker, x, y with a header line.
void WriteCoordinates(const std::string& path, const EmbeddingSet& set, const Matrix& coords);
// One dot per utterance, colored by speaker, with a legend.
void WriteScatterSvg(const std::string& path, const Matrix& coords,
                     const std::vector<std::string>& speakers, const std::string& title);

}  // namespace vc

#endif  // VC_VIZ_H_
