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

#include "vc/viz.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "vc/gst.h"
#include "vc/tp.h"

namespace vc {

const char* EmbeddingSourceName(EmbeddingSource source) {
  return source == EmbeddingSource::kRefEnc ? "refenc" : "tp";
}

EmbeddingSource ParseEmbeddingSource(const std::string& name) {
  if (name == "refenc") return EmbeddingSource::kRefEnc;
  if (name == "tp") return EmbeddingSource::kTp;
  throw ValidationError("unknown embedding mode '" + name + "' (want refenc or tp)");
}

const char* ProjectionMethodName(ProjectionMethod method) {
  return method == ProjectionMethod::kPca ? "pca" : "tsne";
}

ProjectionMethod ParseProjectionMethod(const std::string& name) {
  if (name == "pca") return ProjectionMethod::kPca;
  if (name == "tsne") return ProjectionMethod::kTsne;
  throw ValidationError("unknown projection '" + name + "' (want pca or tsne)");
}

EmbeddingSet CollectEmbeddings(const Checkpoint& ckpt, const Corpus& corpus,
                               EmbeddingSource source, int workers) {
  const VcModel& model = ckpt.model;
  if (source == EmbeddingSource::kRefEnc && !model.has_gst())
    throw ValidationError("collect_embeddings: checkpoint has no gst.* parameters");
  if (source == EmbeddingSource::kTp && !model.has_tp())
    throw ValidationError("collect_embeddings: checkpoint has no tp.* parameters");
  EmbeddingSet set;
  set.embeddings.resize(static_cast<Eigen::Index>(corpus.size()), model.config.style_dim);
  ParallelFor(corpus.size(), workers, [&](size_t i) {
    const StyleEmbedding e =
        source == EmbeddingSource::kRefEnc
            ? RefEnc(corpus.mels[i], model)
            : PredictStyle(
                  EncodeContent(RecognizeContent(ckpt, corpus.records[i], corpus.mels[i]), model),
                  model);
    set.embeddings.row(static_cast<Eigen::Index>(i)) = e.vector;
  });
  for (const UtteranceRecord& r : corpus.records) {
    set.utterance_ids.push_back(r.utterance_id);
    set.speakers.push_back(r.speaker_id);
  }
  return set;
}

namespace {

void RequireRows(const Matrix& data) {
  if (data.rows() < 3) throw ValidationError("project_2d: need at least 3 points");
}

Matrix SquaredDistances(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  return d;
}

// Row i of the result is the Gaussian conditional distribution around point i
// whose entropy matches log(perplexity).
Matrix ConditionalAffinities(const Matrix& sq, double perplexity) {
  const Eigen::Index n = sq.rows();
  const double target = std::log(perplexity);
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        p(i, j) = std::exp(-beta * sq(i, j));
        sum += p(i, j);
        weighted += p(i, j) * sq(i, j);
      }
      if (sum <= 0.0) {
        hi = beta;
        beta = (lo + hi) / 2.0;
        continue;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      p.row(i) /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-10) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
  }
  return p;
}

}  // namespace

Matrix ProjectPca(const Matrix& data) {
  RequireRows(data);
  const Matrix centered = data.rowwise() - data.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw VcError("project_2d: eigensolve failed");
  Matrix axes = Matrix::Zero(data.cols(), 2);
  const Eigen::Index dims = data.cols();
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, dims); ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(dims - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    axes.col(k) = v;
  }
  return centered * axes;
}

Matrix ProjectTsne(const Matrix& data, uint64_t seed, const TsneConfig& config) {
  RequireRows(data);
  const Eigen::Index n = data.rows();
  const double perplexity =
      std::min(config.perplexity, std::max(1.0, static_cast<double>(n - 1) / 3.0));
  const Matrix cond = ConditionalAffinities(SquaredDistances(data), perplexity);
  Matrix p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1e-4);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) y(i, 0) = gauss(rng), y(i, 1) = gauss(rng);
  Matrix velocity = Matrix::Zero(n, 2), gains = Matrix::Ones(n, 2);
  Matrix grad(n, 2), q(n, n);
  for (int it = 0; it < config.iterations; ++it) {
    const double exaggerate = it < config.exaggeration_iterations ? config.exaggeration : 1.0;
    const double momentum = it < config.exaggeration_iterations ? 0.5 : 0.8;
    double qsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        q(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        qsum += q(i, j);
      }
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (exaggerate * p(i, j) - q(i, j) / qsum) * q(i, j);
        grad.row(i) += 4.0 * w * (y.row(i) - y.row(j));
      }
    for (Eigen::Index i = 0; i < n; ++i)
      for (int k = 0; k < 2; ++k) {
        const bool same_sign = (grad(i, k) > 0.0) == (velocity(i, k) > 0.0);
        gains(i, k) = std::max(0.01, same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2);
        velocity(i, k) = momentum * velocity(i, k) - config.learning_rate * gains(i, k) * grad(i, k);
      }
    y += velocity;
    y = y.rowwise() - y.colwise().mean();
  }
  return y;
}

Matrix Project2d(const Matrix& data, ProjectionMethod method, uint64_t seed) {
  return method == ProjectionMethod::kPca ? ProjectPca(data) : ProjectTsne(data, seed);
}

double Clusterness(const Matrix& data, const std::vector<std::string>& labels) {
  const Eigen::Index n = data.rows();
  if (static_cast<size_t>(n) != labels.size())
    throw DimensionError("clusterness: label count differs from row count");
  std::map<std::string, int> index;
  for (const std::string& l : labels) index.emplace(l, static_cast<int>(index.size()));
  std::vector<int> label(labels.size()), count(index.size(), 0);
  for (size_t i = 0; i < labels.size(); ++i) ++count[label[i] = index.at(labels[i])];
  if (index.size() < 2) throw ValidationError("clusterness: need at least 2 labels");
  for (const auto& [name, id] : index)
    if (count[id] < 2)
      throw ValidationError("clusterness: label '" + name + "' has fewer than 2 points");

  double total = 0.0;
  std::vector<double> sums(index.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sums[label[j]] += (data.row(i) - data.row(j)).norm();
    const int own = label[i];
    const double a = sums[own] / (count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < sums.size(); ++c)
      if (static_cast<int>(c) != own) b = std::min(b, sums[c] / count[c]);
    const double scale = std::max(a, b);
    total += scale > 0.0 ? (b - a) / scale : 0.0;
  }
  return total / static_cast<double>(n);
}

void WriteCoordinates(const std::string& path, const EmbeddingSet& set, const Matrix& coords) {
  if (coords.rows() != static_cast<Eigen::Index>(set.speakers.size()) || coords.cols() != 2)
    throw DimensionError("write_coordinates: coordinates do not match the embedding set");
  std::ostringstream out;
  out.precision(17);
  out << "utterance_id\tspeaker\tx\ty\n";
  for (size_t i = 0; i < set.speakers.size(); ++i)
    out << set.utterance_ids[i] << '\t' << set.speakers[i] << '\t'
        << coords(static_cast<Eigen::Index>(i), 0) << '\t'
        << coords(static_cast<Eigen::Index>(i), 1) << '\n';
  WriteFileAtomic(path, out.str());
}

namespace {

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void WriteScatterSvg(const std::string& path, const Matrix& coords,
                     const std::vector<std::string>& speakers, const std::string& title) {
  if (coords.rows() != static_cast<Eigen::Index>(speakers.size()) || coords.cols() != 2)
    throw DimensionError("write_scatter: coordinates do not match the labels");
  const double size = 480.0, margin = 40.0, legend = 160.0;
  std::map<std::string, int> color;
  for (const std::string& s : speakers) color.emplace(s, 0);
  int next = 0;
  for (auto& [name, c] : color) c = next++;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (coords.rows() > 0) {
    xmin = coords.col(0).minCoeff(), xmax = coords.col(0).maxCoeff();
    ymin = coords.col(1).minCoeff(), ymax = coords.col(1).maxCoeff();
  }
  const double xr = std::max(xmax - xmin, 1e-12), yr = std::max(ymax - ymin, 1e-12);

  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + legend
      << "\" height=\"" << size << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << XmlEscape(title) << "</text>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double x = margin + (coords(i, 0) - xmin) / xr * (size - 2 * margin);
    const double y = size - margin - (coords(i, 1) - ymin) / yr * (size - 2 * margin);
    out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\""
        << kPalette[color.at(speakers[i]) % 10] << "\"/>\n";
  }
  int row = 0;
  for (const auto& [name, c] : color) {
    const double y = margin + 18.0 * row++;
    out << "<circle cx=\"" << size + 10 << "\" cy=\"" << y << "\" r=\"5\" fill=\""
        << kPalette[c % 10] << "\"/>\n"
        << "<text x=\"" << size + 20 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << XmlEscape(name) << "</text>\n";
  }
  out << "</svg>\n";
  WriteFileAtomic(path, out.str());
}

}  // namespace vc
