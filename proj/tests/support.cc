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

#include "support.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace vc::testing {

ModelConfig TinyConfig(int vocab_size) {
  ModelConfig c;
  c.mel_dim = 6;
  c.vocab_size = vocab_size;
  c.encoder_dim = 4;
  c.speaker_dim = 3;
  c.prenet_dim1 = 5;
  c.prenet_dim2 = 4;
  c.decoder_dim = 5;
  c.refenc_channels = 4;
  c.query_dim = 4;
  c.num_tokens = 3;
  c.style_dim = 4;
  c.style_attention_dim = 3;
  c.tp_hidden = 4;
  return c;
}

Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed,
                    double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

ContentSequence RandomText(int length, int vocab, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  ContentSequence c;
  c.kind = ContentKind::kText;
  c.vocabulary_size = vocab;
  for (int i = 0; i < length; ++i) c.symbols.push_back(pick(rng));
  return c;
}

std::vector<TrainingExample> RandomBatch(const VcModel& model, int size,
                                         int frames, uint64_t seed) {
  std::vector<TrainingExample> batch;
  for (int i = 0; i < size; ++i) {
    TrainingExample ex;
    ex.utterance_id = "rand" + std::to_string(i);
    ex.content = RandomText(3 + i % 3, model.config.vocab_size, seed + 31 * i);
    ex.speaker_index = i % static_cast<int>(model.speakers.size());
    ex.target = RandomMatrix(frames + i, model.config.mel_dim, seed + 97 * i);
    batch.push_back(std::move(ex));
  }
  return batch;
}

GradCheckResult CheckGradients(VcModel* model, const Gradients& analytic,
                               const std::function<double()>& loss,
                               const std::vector<std::string>& groups, double eps) {
  GradCheckResult res;
  for (int i = 0; i < model->params.size(); ++i) {
    Parameter& p = model->params.at(i);
    if (!groups.empty() &&
        std::none_of(groups.begin(), groups.end(),
                     [&](const std::string& g) { return GroupMatches(g, p.group); }))
      continue;
    Matrix numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double orig = p.value(k);
      p.value(k) = orig + eps;
      const double up = loss();
      p.value(k) = orig - eps;
      const double down = loss();
      p.value(k) = orig;
      numeric(k) = (up - down) / (2.0 * eps);
    }
    Matrix a = (i < static_cast<int>(analytic.size()) && analytic[i].size() > 0)
                   ? analytic[i]
                   : Matrix::Zero(p.value.rows(), p.value.cols());
    const double denom = std::max({a.norm(), numeric.norm(), 1e-10});
    const double rel = (a - numeric).norm() / denom;
    res.checked_parameters += 1;
    if (rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_parameter = p.key();
    }
  }
  return res;
}

namespace oracle {

double DtwCost(const std::vector<std::vector<double>>& dist) {
  const int n = static_cast<int>(dist.size());
  const int m = static_cast<int>(dist[0].size());
  std::map<std::pair<int, int>, double> memo;
  std::function<double(int, int)> cost = [&](int i, int j) -> double {
    if (i == 0 && j == 0) return dist[0][0];
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double best = std::numeric_limits<double>::infinity();
    if (i > 0) best = std::min(best, cost(i - 1, j));
    if (j > 0) best = std::min(best, cost(i, j - 1));
    if (i > 0 && j > 0) best = std::min(best, cost(i - 1, j - 1));
    const double v = dist[i][j] + best;
    memo[key] = v;
    return v;
  };
  return cost(n - 1, m - 1);
}

void EnumerateDtwPaths(int n, int m,
                       const std::function<void(const std::vector<std::pair<int, int>>&)>& visit) {
  std::vector<std::pair<int, int>> path{{0, 0}};
  std::function<void()> rec = [&]() {
    auto [i, j] = path.back();
    if (i == n - 1 && j == m - 1) {
      visit(path);
      return;
    }
    const int moves[3][2] = {{1, 1}, {1, 0}, {0, 1}};
    for (const auto& mv : moves) {
      const int a = i + mv[0], b = j + mv[1];
      if (a >= n || b >= m) continue;
      path.emplace_back(a, b);
      rec();
      path.pop_back();
    }
  };
  rec();
}

EditGraph::EditGraph(int alphabet, int max_length)
    : alphabet_(alphabet), max_length_(max_length) {
  offsets_.push_back(0);
  long count = 1;
  for (int len = 0; len <= max_length; ++len) {
    offsets_.push_back(offsets_.back() + count);
    count *= alphabet;
  }
  const int n = size();
  neighbors_.resize(n);
  for (int id = 0; id < n; ++id) {
    const std::vector<int> s = Decode(id);
    std::set<int> out;
    for (size_t i = 0; i < s.size(); ++i) {
      std::vector<int> del = s;
      del.erase(del.begin() + static_cast<long>(i));
      out.insert(Encode(del));
      for (int a = 0; a < alphabet; ++a) {
        if (a == s[i]) continue;
        std::vector<int> sub = s;
        sub[i] = a;
        out.insert(Encode(sub));
      }
    }
    if (static_cast<int>(s.size()) < max_length) {
      for (size_t i = 0; i <= s.size(); ++i)
        for (int a = 0; a < alphabet; ++a) {
          std::vector<int> ins = s;
          ins.insert(ins.begin() + static_cast<long>(i), a);
          out.insert(Encode(ins));
        }
    }
    neighbors_[id].assign(out.begin(), out.end());
  }
}

int EditGraph::Encode(const std::vector<int>& s) const {
  long v = 0;
  for (int c : s) v = v * alphabet_ + c;
  return static_cast<int>(offsets_[s.size()] + v);
}

std::vector<int> EditGraph::Decode(int id) const {
  int len = 0;
  while (offsets_[len + 1] <= id) ++len;
  long v = id - offsets_[len];
  std::vector<int> s(len);
  for (int i = len - 1; i >= 0; --i) {
    s[i] = static_cast<int>(v % alphabet_);
    v /= alphabet_;
  }
  return s;
}

std::vector<int> EditGraph::DistancesFrom(int source) const {
  std::vector<int> dist(size(), -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : neighbors_[u]) {
      if (dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

namespace {

bool ValidPath(const std::vector<std::pair<int, int>>& path, int n, int m) {
  if (path.empty() || path.front() != std::make_pair(0, 0) ||
      path.back() != std::make_pair(n - 1, m - 1))
    return false;
  for (size_t k = 1; k < path.size(); ++k) {
    const int di = path[k].first - path[k - 1].first;
    const int dj = path[k].second - path[k - 1].second;
    if (di < 0 || dj < 0 || di > 1 || dj > 1 || di + dj == 0) return false;
  }
  return true;
}

double Rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<std::vector<double>> Distances(const Matrix& a, const Matrix& b) {
  std::vector<std::vector<double>> d(a.rows(), std::vector<double>(b.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
      d[i][j] = std::sqrt(s);
    }
  return d;
}

}  // namespace

SuiteResult DtwSuite(int cases, uint64_t seed) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c) {
    const bool small = c % 2 == 0;
    std::uniform_int_distribution<int> len(1, small ? 6 : 20);
    const int n = len(rng), m = len(rng);
    const Matrix a = RandomMatrix(n, 3, rng());
    const Matrix b = RandomMatrix(m, 3, rng());
    const auto dist = Distances(a, b);
    double oracle = DtwCost(dist);
    if (small) {
      double best = std::numeric_limits<double>::infinity();
      EnumerateDtwPaths(n, m, [&](const std::vector<std::pair<int, int>>& p) {
        double s = 0.0;
        for (auto [i, j] : p) s += dist[i][j];
        best = std::min(best, s);
      });
      oracle = best;
    }
    const DtwResult got = Dtw(a, b);
    double path_cost = 0.0;
    for (auto [i, j] : got.path) path_cost += dist[i][j];
    const double err = std::max(Rel(got.cost, oracle), Rel(path_cost, oracle));
    r.max_relative_error = std::max(r.max_relative_error, err);
    r.failures += (err > 1e-8 || !ValidPath(got.path, n, m)) ? 1 : 0;
    ++r.cases;
  }
  return r;
}

SuiteResult McdSuite(int cases, uint64_t seed) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c) {
    std::uniform_int_distribution<int> len(1, 6);
    const int n = len(rng), m = len(rng);
    const Matrix a = RandomMatrix(n, 4, rng());
    const Matrix b = RandomMatrix(m, 4, rng());
    const auto dist = Distances(a, b);
    double best = std::numeric_limits<double>::infinity(), oracle = 0.0;
    EnumerateDtwPaths(n, m, [&](const std::vector<std::pair<int, int>>& p) {
      double s = 0.0, mcd = 0.0;
      for (auto [i, j] : p) {
        s += dist[i][j];
        double sq = 0.0;
        for (int k = 0; k < 4; ++k) sq += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
        mcd += 10.0 / std::log(10.0) * std::sqrt(2.0 * sq);
      }
      if (s < best) {
        best = s;
        oracle = mcd / static_cast<double>(p.size());
      }
    });
    const double err = Rel(Mcd(a, b).mcd_db, oracle);
    r.max_relative_error = std::max(r.max_relative_error, err);
    r.failures += err > 1e-8 ? 1 : 0;
    ++r.cases;
  }
  return r;
}

SuiteResult F0RmseSuite(int cases, uint64_t seed) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hz(80.0, 300.0), coin(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    std::uniform_int_distribution<int> len(1, 15);
    const int n = len(rng), m = len(rng);
    F0Track a, b;
    for (int i = 0; i < n; ++i) {
      const bool v = coin(rng) < 0.6;
      a.voiced.push_back(v);
      a.f0_hz.push_back(v ? hz(rng) : 0.0);
    }
    for (int j = 0; j < m; ++j) {
      const bool v = coin(rng) < 0.6;
      b.voiced.push_back(v);
      b.f0_hz.push_back(v ? hz(rng) : 0.0);
    }
    const AlignmentPath path = Dtw(RandomMatrix(n, 2, rng()), RandomMatrix(m, 2, rng())).path;
    std::set<std::pair<int, int>> on_path(path.begin(), path.end());
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (on_path.count({i, j}) && a.voiced[i] && b.voiced[j]) {
          sum += (a.f0_hz[i] - b.f0_hz[j]) * (a.f0_hz[i] - b.f0_hz[j]);
          ++count;
        }
    const F0RmseResult got = F0Rmse(a, b, path);
    bool ok = got.voiced_pairs == count;
    if (count == 0) {
      ok = ok && !got.rmse.has_value();
    } else {
      const double err = got.rmse ? Rel(*got.rmse, std::sqrt(sum / count)) : 1.0;
      r.max_relative_error = std::max(r.max_relative_error, err);
      ok = ok && err <= 1e-8;
    }
    r.failures += ok ? 0 : 1;
    ++r.cases;
  }
  return r;
}

SuiteResult ErrorRateSuite() {
  SuiteResult r;
  const EditGraph graph(3, 6);
  const char letters[] = {'a', 'b', 'c'};
  std::vector<std::string> text(graph.size());
  for (int id = 0; id < graph.size(); ++id)
    for (int c : graph.Decode(id)) text[id].push_back(letters[c]);
  for (int ref = 0; ref < graph.size(); ++ref) {
    if (text[ref].empty()) continue;
    const std::vector<int> dist = graph.DistancesFrom(ref);
    for (int hyp = 0; hyp < graph.size(); ++hyp) {
      const double expected =
          static_cast<double>(dist[hyp]) / static_cast<double>(text[ref].size());
      r.failures += ErrorRate(text[hyp], text[ref], ErrorUnit::kCharacter) == expected ? 0 : 1;
      ++r.cases;
    }
  }
  return r;
}

}  // namespace oracle

}  // namespace vc::testing
