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

#ifndef VC_TESTS_SUPPORT_H_
#define VC_TESTS_SUPPORT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vc/common.h"
#include "vc/eval.h"
#include "vc/model.h"
#include "vc/params.h"
#include "vc/recognizer.h"
#include "vc/synthesizer.h"

namespace vc::testing {

// A model small enough for exhaustive finite differences (well under 5k
// scalars with every attachment).
ModelConfig TinyConfig(int vocab_size = 5);

Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed,
                    double scale = 1.0);

ContentSequence RandomText(int length, int vocab, uint64_t seed);

// Synthetic normalized-mel training examples for |model|.
std::vector<TrainingExample> RandomBatch(const VcModel& model, int size,
                                         int frames, uint64_t seed);

struct GradCheckResult {
  double max_relative_error = 0.0;  // max over tensors of |a - n| / max(|a|, |n|)
  std::string worst_parameter;
  int checked_parameters = 0;
};

// Compares |analytic| gradients to central differences of |loss| for every
// parameter whose group matches one of |groups| (empty: all).
GradCheckResult CheckGradients(VcModel* model, const Gradients& analytic,
                               const std::function<double()>& loss,
                               const std::vector<std::string>& groups = {},
                               double eps = 1e-5);

// Independent reference implementations used as oracles.
namespace oracle {

// Plain recursion with memoization over the symmetric DTW recurrence.
double DtwCost(const std::vector<std::vector<double>>& dist);

// Enumerates every monotone, contiguous, endpoint-anchored path.
void EnumerateDtwPaths(int n, int m,
                       const std::function<void(const std::vector<std::pair<int, int>>&)>& visit);

// All strings of length <= max_length over {0..alphabet-1}, linked by unit
// insertions, deletions and substitutions. Breadth-first search from a string
// gives its minimal edit distance to every other string. Strings never need
// to grow past the longer of the pair, so the bound loses nothing.
class EditGraph {
 public:
  EditGraph(int alphabet, int max_length);

  int size() const { return static_cast<int>(offsets_.back()); }
  int Encode(const std::vector<int>& s) const;
  std::vector<int> Decode(int id) const;
  std::vector<int> DistancesFrom(int source) const;

 private:
  int alphabet_;
  int max_length_;
  std::vector<long> offsets_;
  std::vector<std::vector<int>> neighbors_;
};

// Randomized comparisons of the metric code against the oracles above.
struct SuiteResult {
  int cases = 0;
  int failures = 0;
  double max_relative_error = 0.0;
};

// Dtw cost vs. exhaustive path enumeration (small) and the memoized
// recursion (up to 20 frames); also checks path validity.
SuiteResult DtwSuite(int cases, uint64_t seed);
// Mcd vs. the distortion mean along the enumerated minimum-cost path.
SuiteResult McdSuite(int cases, uint64_t seed);
// F0Rmse vs. a scan over every frame pair that tests path membership.
SuiteResult F0RmseSuite(int cases, uint64_t seed);
// ErrorRate (character unit) vs. breadth-first edit distances for every
// pair of strings up to length 6 over 3 symbols.
SuiteResult ErrorRateSuite();

}  // namespace oracle

}  // namespace vc::testing

#endif  // VC_TESTS_SUPPORT_H_
