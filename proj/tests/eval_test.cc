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

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "support.h"
#include "vc/eval.h"

namespace vc {
namespace {

const double kClosedForm = 10.0 / std::log(10.0) * std::sqrt(2.0);

bool MonotoneContiguousAnchored(const AlignmentPath& p, int n, int m) {
  if (p.empty() || p.front() != std::make_pair(0, 0) || p.back() != std::make_pair(n - 1, m - 1))
    return false;
  for (size_t k = 1; k < p.size(); ++k) {
    const int di = p[k].first - p[k - 1].first, dj = p[k].second - p[k - 1].second;
    if (di < 0 || dj < 0 || di > 1 || dj > 1 || di + dj == 0) return false;
  }
  return true;
}

F0Track Track(const std::vector<double>& hz) {
  F0Track t;
  for (double f : hz) {
    t.f0_hz.push_back(f);
    t.voiced.push_back(f > 0.0);
  }
  return t;
}

AlignmentPath Diagonal(int n) {
  AlignmentPath p;
  for (int i = 0; i < n; ++i) p.emplace_back(i, i);
  return p;
}

Candidate WithMcd(const std::string& name, std::optional<double> mcd) {
  Candidate c;
  c.name = name;
  c.report.mean_mcd = mcd;
  return c;
}

Candidate WithCer(const std::string& name, std::optional<double> cer) {
  Candidate c;
  c.name = name;
  c.report.mean_cer = cer;
  return c;
}

TEST_CASE("mel_cepstrum matches a direct cosine sum") {
  const int D = 20, order = 12;
  const Matrix log_mel = testing::RandomMatrix(5, D, 3);
  const Matrix c = MelCepstrum(log_mel, order);
  REQUIRE(c.rows() == 5);
  REQUIRE(c.cols() == order);
  for (int t = 0; t < 5; ++t)
    for (int k = 1; k <= order; ++k) {
      double s = 0.0;
      for (int d = 0; d < D; ++d)
        s += 0.5 * log_mel(t, d) * std::cos(std::numbers::pi / D * (d + 0.5) * k);
      s *= std::sqrt(2.0 / D);
      CHECK(std::abs(c(t, k - 1) - s) <= 1e-8 * std::max(1.0, std::abs(s)));
    }
}

TEST_CASE("mel_cepstrum of a flat spectrum is zero past the energy term") {
  const Matrix c = MelCepstrum(Matrix::Constant(3, 80, -4.2), 24);
  CHECK(c.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mel_cepstrum identical inputs and errors") {
  const Matrix m = testing::RandomMatrix(4, 30, 9);
  CHECK(MelCepstrum(m, 24) == MelCepstrum(m, 24));
  CHECK_THROWS_AS(MelCepstrum(Matrix(0, 30), 24), ValidationError);
  CHECK_THROWS_AS(MelCepstrum(m, 0), ValidationError);
}

TEST_CASE("dtw agrees with oracles on random inputs") {
  const auto r = testing::oracle::DtwSuite(300, 17);
  CHECK(r.cases == 300);
  CHECK(r.failures == 0);
  CHECK(r.max_relative_error <= 1e-8);
}

TEST_CASE("dtw errors") {
  CHECK_THROWS_AS(Dtw(Matrix(0, 2), Matrix(3, 2)), ValidationError);
  CHECK_THROWS_AS(Dtw(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), DimensionError);
}

TEST_CASE("mcd agrees with the minimum-cost enumerated path") {
  const auto r = testing::oracle::McdSuite(250, 29);
  CHECK(r.cases == 250);
  CHECK(r.failures == 0);
  CHECK(r.max_relative_error <= 1e-8);
}

TEST_CASE("mcd closed form for a unit offset in one coefficient") {
  const Matrix ref = testing::RandomMatrix(12, 24, 5);
  Matrix conv = ref;
  conv.col(0).array() += 1.0;
  const McdResult r = Mcd(ref, conv);
  CHECK(std::abs(r.mcd_db - kClosedForm) < 1e-6);
  CHECK(std::abs(kClosedForm - 6.1418) < 1e-4);
  CHECK(r.path == Diagonal(12));
}

TEST_CASE("mcd of identical and duplicated sequences is zero") {
  const Matrix a = testing::RandomMatrix(3, 24, 8);
  CHECK(Mcd(a, a).mcd_db == 0.0);
  Matrix dup(6, 24);
  for (int i = 0; i < 3; ++i) {
    dup.row(2 * i) = a.row(i);
    dup.row(2 * i + 1) = a.row(i);
  }
  const McdResult r = Mcd(a, dup);
  CHECK(r.mcd_db == 0.0);
  // The only zero-cost path pairs each frame with both of its copies.
  int zero_paths = 0;
  testing::oracle::EnumerateDtwPaths(3, 6, [&](const std::vector<std::pair<int, int>>& p) {
    bool zero = true;
    for (auto [i, j] : p) zero = zero && (a.row(i) - dup.row(j)).norm() == 0.0;
    zero_paths += zero ? 1 : 0;
  });
  CHECK(zero_paths == 1);
}

TEST_CASE("mcd grows with the perturbation size") {
  const Matrix ref = testing::RandomMatrix(10, 24, 2);
  Matrix dir = testing::RandomMatrix(10, 24, 4);
  dir /= dir.norm();
  double prev = 0.0;
  for (double eps : {1e-4, 1e-3, 1e-2, 0.05, 0.1}) {
    const double v = Mcd(ref, ref + eps * dir).mcd_db;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("mcd errors") {
  CHECK_THROWS_AS(Mcd(Matrix::Zero(2, 24), Matrix::Zero(2, 12)), DimensionError);
  CHECK_THROWS(Mcd(Matrix(0, 24), Matrix::Zero(2, 24)));
}

std::vector<double> Sine(double hz, int rate, double seconds, double amp = 0.5) {
  std::vector<double> s(static_cast<size_t>(rate * seconds));
  for (size_t i = 0; i < s.size(); ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return s;
}

TEST_CASE("extract_f0 finds a 220 Hz sine") {
  const F0Track t = ExtractF0(Sine(220.0, 16000, 1.0), 16000, F0Config{});
  CHECK(t.size() == 1 + 16000 / 256);
  int voiced = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (!t.voiced[i]) continue;
    ++voiced;
    CHECK(std::abs(t.f0_hz[i] - 220.0) <= 2.0);
  }
  CHECK(voiced >= static_cast<int>(t.size()) * 8 / 10);
}

TEST_CASE("extract_f0 on silence and noise") {
  const F0Track silent = ExtractF0(std::vector<double>(16000, 0.0), 16000, F0Config{});
  for (size_t i = 0; i < silent.size(); ++i) CHECK_FALSE(silent.voiced[i]);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> noise(32000);
  for (double& x : noise) x = g(rng);
  const F0Track t = ExtractF0(noise, 16000, F0Config{});
  int unvoiced = 0;
  for (size_t i = 0; i < t.size(); ++i) unvoiced += t.voiced[i] ? 0 : 1;
  CHECK(unvoiced >= 0.9 * static_cast<double>(t.size()));
}

TEST_CASE("extract_f0 rejects a low sample rate") {
  CHECK_THROWS_AS(ExtractF0(Sine(100.0, 800, 0.5), 800, F0Config{}), ValidationError);
  F0Config bad;
  bad.fmin = 500.0;
  bad.fmax = 400.0;
  CHECK_THROWS_AS(ExtractF0(Sine(100.0, 16000, 0.5), 16000, bad), ValidationError);
}

TEST_CASE("f0_rmse examples") {
  const F0Track ref = Track({0, 120, 130, 0, 150, 160});
  CHECK(*F0Rmse(ref, ref, Diagonal(6)).rmse == 0.0);
  const F0Track up = Track({0, 130, 140, 0, 160, 170});
  const F0RmseResult r = F0Rmse(ref, up, Diagonal(6));
  CHECK(std::abs(*r.rmse - 10.0) < 1e-12);
  CHECK(r.voiced_pairs == 4);
  const F0RmseResult none = F0Rmse(Track({0, 100}), Track({100, 0}), Diagonal(2));
  CHECK_FALSE(none.rmse.has_value());
  CHECK(none.voiced_pairs == 0);
}

TEST_CASE("f0_rmse log scale") {
  const F0Track a = Track({100, 200});
  const F0Track b = Track({200, 400});
  CHECK(std::abs(*F0Rmse(a, b, Diagonal(2), true).rmse - std::log(2.0)) < 1e-12);
}

TEST_CASE("f0_rmse agrees with a double loop over the path") {
  const auto r = testing::oracle::F0RmseSuite(300, 41);
  CHECK(r.cases == 300);
  CHECK(r.failures == 0);
}

TEST_CASE("error_rates examples") {
  CHECK(ErrorRate("hello", "hello", ErrorUnit::kCharacter) == 0.0);
  CHECK(std::abs(ErrorRate("abc", "abd", ErrorUnit::kCharacter) - 1.0 / 3.0) < 1e-15);
  CHECK(ErrorRate("", "abcde", ErrorUnit::kCharacter) == 1.0);
  CHECK(ErrorRate("a b c d", "a b", ErrorUnit::kWord) == 1.0);
  CHECK(ErrorRate("xx yy zz", "a", ErrorUnit::kWord) == 3.0);
  CHECK(ErrorRate("the cat sat", "the bat sat", ErrorUnit::kWord) == 1.0 / 3.0);
  CHECK_THROWS_AS(ErrorRate("abc", "", ErrorUnit::kCharacter), ValidationError);
  CHECK_THROWS_AS(ErrorRate("abc", "   ", ErrorUnit::kWord), ValidationError);
}

TEST_CASE("error_rates agree with breadth-first edit distance on all short pairs") {
  const auto r = testing::oracle::ErrorRateSuite();
  CHECK(r.cases > 1000000);
  CHECK(r.failures == 0);
}

TEST_CASE("select_model examples") {
  CHECK(SelectModel({WithMcd("only", 7.0)}, SelectionMode::kParallelReference) == 0);
  CHECK(SelectModel({WithMcd("a", 6.5), WithMcd("b", 6.4)}, SelectionMode::kParallelReference) ==
        1);
  CHECK(SelectModel({WithMcd("a", 6.4), WithMcd("b", 6.4)}, SelectionMode::kParallelReference) ==
        1);
  CHECK(SelectModel({WithCer("a", 0.1), WithCer("b", 0.3), WithCer("c", 0.1)},
                    SelectionMode::kNoReference) == 2);
  CHECK(SelectModel({WithMcd("a", 6.0), WithMcd("b", std::nullopt)},
                    SelectionMode::kParallelReference) == 0);
  CHECK_THROWS_AS(SelectModel({}, SelectionMode::kParallelReference), ValidationError);
  CHECK_THROWS_AS(SelectModel({WithCer("a", 0.2)}, SelectionMode::kParallelReference),
                  ValidationError);
}

TEST_CASE("select_model picks the argmin on random sets") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(1, 8), value(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Candidate> cs;
    std::vector<double> v;
    for (int i = 0, n = size(rng); i < n; ++i) {
      v.push_back(value(rng) * 0.5);
      cs.push_back(WithCer("c" + std::to_string(i), v.back()));
    }
    size_t expected = 0;
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i] <= v[expected]) expected = i;
    CHECK(SelectModel(cs, SelectionMode::kNoReference) == expected);
  }
}

TEST_CASE("report means skip undefined values") {
  MetricReport r;
  UtteranceMetrics a, b;
  a.utterance_id = "a";
  a.mcd_db = 4.0;
  a.cer = 0.5;
  b.utterance_id = "b";
  b.mcd_db = 6.0;
  b.f0_rmse = 12.0;
  r.utterances = {a, b};
  r.ComputeMeans();
  CHECK(*r.mean_mcd == 5.0);
  CHECK(*r.mean_f0_rmse == 12.0);
  CHECK(*r.mean_cer == 0.5);
  CHECK_FALSE(r.mean_wer.has_value());
  const std::string table = r.Table();
  const size_t mcd = table.find("MCD"), f0 = table.find("F0RMSE"), cer = table.find("CER"),
               wer = table.find("WER");
  CHECK(mcd < f0);
  CHECK(f0 < cer);
  CHECK(cer < wer);
  CHECK(table.find("mel-cepstral") != std::string::npos);
  int lines = 0;
  for (char ch : r.Jsonl()) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 3);
}

TEST_CASE("self evaluation is zero") {
  FeatureConfig features;
  Waveform wav;
  wav.sample_rate = features.sample_rate;
  wav.samples = Sine(180.0, features.sample_rate, 0.6);
  const MelFeatures mel = ExtractMel(wav, features);
  EvaluationInputs in;
  in.reference = &mel;
  in.converted = &mel;
  in.utterance_id = "u";
  in.reference_text = "abc def";
  in.hypothesis_text = "abc def";
  const UtteranceMetrics m = EvaluateUtterance(in, features, EvaluationConfig{}, 8);
  CHECK(*m.mcd_db == 0.0);
  REQUIRE(m.f0_rmse.has_value());
  CHECK(*m.f0_rmse == 0.0);
  CHECK(*m.cer == 0.0);
  CHECK(*m.wer == 0.0);
}

}  // namespace
}  // namespace vc
