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
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.h"
#include "vc/viz.h"

namespace vc {
namespace {

using testing::RandomMatrix;

Matrix Points(std::initializer_list<std::pair<double, double>> pts) {
  Matrix m(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::Index i = 0;
  for (auto [x, y] : pts) m(i, 0) = x, m(i++, 1) = y;
  return m;
}

Matrix PairwiseDistances(const Matrix& x) {
  Matrix d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  return d;
}

// Leading eigenvector by power iteration, then deflation.
std::vector<Eigen::VectorXd> PowerAxes(const Matrix& cov, int count) {
  Matrix a = cov;
  std::vector<Eigen::VectorXd> axes;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows()) / std::sqrt(double(a.rows()));
    v(k % a.rows()) += 0.3;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = a * v;
      w.normalize();
      if ((w - v).norm() < 1e-15) break;
      v = w;
    }
    axes.push_back(v);
    a -= (v.dot(cov * v)) * v * v.transpose();
  }
  return axes;
}

Checkpoint TinyCheckpoint(bool with_gst, bool with_tp) {
  Checkpoint ckpt;
  ckpt.charset = {"a", "b", "c", "d", " "};
  ckpt.model = InitModel(testing::TinyConfig(5), {"s1", "s2"}, with_gst, with_tp, 7);
  ckpt.provenance.representation = "text";
  return ckpt;
}

Corpus TinyCorpus() {
  Corpus c;
  const char* texts[] = {"abc", "abc", "dcab", "bad"};
  const char* speakers[] = {"s1", "s2", "s1", "s2"};
  for (int i = 0; i < 4; ++i) {
    UtteranceRecord r;
    r.utterance_id = "u" + std::to_string(i);
    r.transcript = texts[i];
    r.speaker_id = speakers[i];
    c.records.push_back(r);
    MelFeatures m;
    m.frames = RandomMatrix(8 + i, 6, 100 + i);
    c.mels.push_back(m);
  }
  return c;
}

TEST_CASE("silhouette of two tight clusters matches the hand value") {
  const Matrix x = Points({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  // Every point: a = 1, b = (10 + sqrt(101)) / 2.
  const double b = (10.0 + std::sqrt(101.0)) / 2.0;
  const double expected = (b - 1.0) / b;
  const double s = Clusterness(x, {"a", "a", "b", "b"});
  CHECK(std::abs(s - expected) < 1e-12);
  CHECK(s > 0.9);
}

TEST_CASE("silhouette of random labels is near zero") {
  const Matrix x = RandomMatrix(200, 8, 21);
  std::mt19937_64 rng(3);
  std::vector<std::string> labels;
  for (int i = 0; i < 200; ++i) labels.push_back(std::to_string(rng() % 4));
  CHECK(std::abs(Clusterness(x, labels)) < 0.1);
}

TEST_CASE("silhouette of identical points is zero") {
  CHECK(Clusterness(Matrix::Ones(4, 3), {"a", "b", "a", "b"}) == 0.0);
}

TEST_CASE("silhouette errors") {
  const Matrix x = RandomMatrix(4, 2, 1);
  CHECK_THROWS_AS(Clusterness(x, {"a", "a", "a", "a"}), ValidationError);
  CHECK_THROWS_AS(Clusterness(x, {"a", "a", "a", "b"}), ValidationError);
  CHECK_THROWS_AS(Clusterness(x, {"a", "b"}), DimensionError);
}

TEST_CASE("silhouette is invariant under similarity transforms") {
  const Matrix x = RandomMatrix(30, 5, 8);
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? "x" : (i % 3 == 1 ? "y" : "z"));
  const double base = Clusterness(x, labels);
  const Eigen::HouseholderQR<Matrix> qr(RandomMatrix(5, 5, 9));
  const Matrix rot = qr.householderQ();
  const RowVector shift = RandomMatrix(1, 5, 10);
  const Matrix moved = ((x * rot) * 3.7).rowwise() + shift;
  CHECK(std::abs(Clusterness(moved, labels) - base) < 1e-10);
}

TEST_CASE("pca of 2d data preserves distances") {
  const Matrix x = RandomMatrix(12, 2, 4);
  const Matrix y = ProjectPca(x);
  CHECK((PairwiseDistances(x) - PairwiseDistances(y)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca of collinear points has a flat second axis") {
  Matrix x(6, 3);
  for (int i = 0; i < 6; ++i) x.row(i) << 1.0 + i, 2.0 - 0.5 * i, 3.0 * i;
  const Matrix y = ProjectPca(x);
  CHECK(y.col(1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca matches an independent eigendecomposition") {
  const Matrix x = RandomMatrix(10, 5, 12);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / 9.0;
  const auto axes = PowerAxes(cov, 2);
  const Matrix y = ProjectPca(x);
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd expected = centered * axes[k];
    const double sign = expected.dot(y.col(k)) < 0 ? -1.0 : 1.0;
    CHECK((sign * y.col(k) - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
  // Gram structure of the projection.
  Matrix oracle(10, 2);
  oracle.col(0) = centered * axes[0];
  oracle.col(1) = centered * axes[1];
  CHECK((y * y.transpose() - oracle * oracle.transpose()).cwiseAbs().maxCoeff() < 1e-8);
  const double v0 = y.col(0).squaredNorm(), v1 = y.col(1).squaredNorm();
  CHECK(v0 >= v1);
  CHECK(std::abs(v0 / 9.0 - axes[0].dot(cov * axes[0])) < 1e-10);
}

TEST_CASE("projection errors and determinism") {
  CHECK_THROWS_AS(Project2d(RandomMatrix(2, 4, 1), ProjectionMethod::kPca, 1), ValidationError);
  CHECK_THROWS_AS(Project2d(RandomMatrix(2, 4, 1), ProjectionMethod::kTsne, 1), ValidationError);
  const Matrix x = RandomMatrix(15, 4, 2);
  CHECK(Project2d(x, ProjectionMethod::kTsne, 5) == Project2d(x, ProjectionMethod::kTsne, 5));
  CHECK(Project2d(x, ProjectionMethod::kPca, 5) == Project2d(x, ProjectionMethod::kPca, 9));
  CHECK(ParseProjectionMethod("tsne") == ProjectionMethod::kTsne);
  CHECK_THROWS_AS(ParseProjectionMethod("umap"), ValidationError);
}

TEST_CASE("tsne keeps separated clusters apart") {
  Matrix x = RandomMatrix(20, 6, 30, 0.1);
  std::vector<std::string> labels;
  for (int i = 0; i < 20; ++i) {
    if (i >= 10) x.row(i).array() += 5.0;
    labels.push_back(i < 10 ? "a" : "b");
  }
  const Matrix y = ProjectTsne(x, 1);
  CHECK(y.rows() == 20);
  CHECK(Clusterness(y, labels) > 0.5);
}

TEST_CASE("collect_embeddings shapes and content-only tp rows") {
  const Corpus corpus = TinyCorpus();
  const Checkpoint ckpt = TinyCheckpoint(true, true);
  const EmbeddingSet ref = CollectEmbeddings(ckpt, corpus, EmbeddingSource::kRefEnc);
  CHECK(ref.embeddings.rows() == 4);
  CHECK(ref.embeddings.cols() == ckpt.model.config.style_dim);
  CHECK(ref.speakers == std::vector<std::string>{"s1", "s2", "s1", "s2"});
  CHECK(ref.embeddings.row(0) != ref.embeddings.row(1));
  const EmbeddingSet tp = CollectEmbeddings(ckpt, corpus, EmbeddingSource::kTp, 2);
  CHECK(tp.embeddings.row(0) == tp.embeddings.row(1));
  CHECK(tp.embeddings.row(0) != tp.embeddings.row(2));

  Corpus twice = corpus;
  twice.records[1] = twice.records[0];
  twice.mels[1] = twice.mels[0];
  const EmbeddingSet rep = CollectEmbeddings(ckpt, twice, EmbeddingSource::kRefEnc);
  CHECK(rep.embeddings.row(0) == rep.embeddings.row(1));
}

TEST_CASE("collect_embeddings errors") {
  const Corpus corpus = TinyCorpus();
  CHECK_THROWS_AS(CollectEmbeddings(TinyCheckpoint(true, false), corpus, EmbeddingSource::kTp),
                  ValidationError);
  CHECK_THROWS_AS(
      CollectEmbeddings(TinyCheckpoint(false, true), corpus, EmbeddingSource::kRefEnc),
      ValidationError);
}

TEST_CASE("coordinate and plot files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vc_viz_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  EmbeddingSet set;
  set.utterance_ids = {"u1", "u2", "u3"};
  set.speakers = {"p<1>", "p2", "p2"};
  const Matrix coords = Points({{0, 1}, {2, 3}, {4, 5.5}});
  WriteCoordinates((dir / "c.tsv").string(), set, coords);
  std::ifstream in(dir / "c.tsv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "utterance_id\tspeaker\tx\ty");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  WriteScatterSvg((dir / "p.svg").string(), coords, set.speakers, "refenc & pca");
  std::stringstream svg;
  svg << std::ifstream(dir / "p.svg").rdbuf();
  const std::string s = svg.str();
  size_t dots = 0;
  for (size_t p = s.find("<circle"); p != std::string::npos; p = s.find("<circle", p + 1)) ++dots;
  CHECK(dots == 3 + 2);  // points plus legend entries
  CHECK(s.find("p&lt;1&gt;") != std::string::npos);
  CHECK(s.find("refenc &amp; pca") != std::string::npos);
  CHECK_THROWS_AS(WriteCoordinates((dir / "x.tsv").string(), set, Matrix::Zero(2, 2)),
                  DimensionError);
}

}  // namespace
}  // namespace vc
