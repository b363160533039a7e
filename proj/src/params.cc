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

#include "vc/params.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vc {

int ParameterStore::Add(const std::string& group, const std::string& name,
                        Matrix init) {
  Parameter p{group, name, std::move(init)};
  const std::string key = p.key();
  if (index_.count(key)) throw ValidationError("duplicate parameter " + key);
  index_[key] = size();
  params_.push_back(std::move(p));
  return size() - 1;
}

int ParameterStore::Find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

int ParameterStore::Index(const std::string& key) const {
  int i = Find(key);
  if (i < 0) throw ValidationError("no parameter named " + key);
  return i;
}

int64_t ParameterStore::NumScalars() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParameterStore::Groups() const {
  std::vector<std::string> groups;
  for (const auto& p : params_) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end())
      groups.push_back(p.group);
  }
  return groups;
}

bool ParameterStore::HasGroup(const std::string& group) const {
  for (const auto& p : params_)
    if (GroupMatches(group, p.group)) return true;
  return false;
}

std::map<std::string, Matrix> ParameterStore::Snapshot(
    const std::string& group_pattern) const {
  std::map<std::string, Matrix> out;
  for (const auto& p : params_)
    if (GroupMatches(group_pattern, p.group)) out[p.key()] = p.value;
  return out;
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (size() != other.size()) return false;
  for (int i = 0; i < size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.key() != b.key()) return false;
    if (a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      return false;
    if (a.value != b.value) return false;
  }
  return true;
}

bool GroupMatches(const std::string& pattern, const std::string& group) {
  if (pattern.size() >= 2 && pattern.compare(pattern.size() - 2, 2, ".*") == 0) {
    const std::string prefix = pattern.substr(0, pattern.size() - 1);
    return group.compare(0, prefix.size(), prefix) == 0;
  }
  return pattern == group;
}

void AccumulateGradients(const Gradients& from, Gradients* into) {
  if (into->size() < from.size()) into->resize(from.size());
  for (size_t i = 0; i < from.size(); ++i) {
    if (from[i].size() == 0) continue;
    if ((*into)[i].size() == 0) {
      (*into)[i] = from[i];
    } else {
      (*into)[i] += from[i];
    }
  }
}

double AdamUpdate(const AdamConfig& config,
                  const std::vector<std::string>& trainable_groups,
                  const Gradients& grads, ParameterStore* store,
                  AdamState* state) {
  std::vector<int> active;
  for (int i = 0; i < store->size(); ++i) {
    if (i >= static_cast<int>(grads.size()) || grads[i].size() == 0) continue;
    const auto& group = store->at(i).group;
    bool trainable = std::any_of(
        trainable_groups.begin(), trainable_groups.end(),
        [&](const std::string& pat) { return GroupMatches(pat, group); });
    if (trainable) active.push_back(i);
  }

  double sq = 0.0;
  for (int i : active) sq += grads[i].squaredNorm();
  const double norm = std::sqrt(sq);
  double scale = 1.0;
  if (config.grad_clip > 0.0 && norm > config.grad_clip)
    scale = config.grad_clip / norm;

  state->step += 1;
  const double t = static_cast<double>(state->step);
  double lr = config.learning_rate;
  if (config.warmup_steps > 0)
    lr *= std::min(1.0, t / static_cast<double>(config.warmup_steps));
  if (config.decay_steps > 0) {
    const double done = std::clamp(
        (t - config.warmup_steps) / static_cast<double>(config.decay_steps), 0.0, 1.0);
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * done));
    lr *= config.final_lr_fraction + (1.0 - config.final_lr_fraction) * cosine;
  }
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);

  for (int i : active) {
    Parameter& p = store->at(i);
    const std::string key = p.key();
    Matrix& m = state->first_moment[key];
    Matrix& v = state->second_moment[key];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      // Newly created or grown parameter: keep overlapping history.
      Matrix m2 = Matrix::Zero(p.value.rows(), p.value.cols());
      Matrix v2 = Matrix::Zero(p.value.rows(), p.value.cols());
      const auto r = std::min(m.rows(), m2.rows());
      const auto c = std::min(m.cols(), m2.cols());
      if (r > 0 && c > 0) {
        m2.topLeftCorner(r, c) = m.topLeftCorner(r, c);
        v2.topLeftCorner(r, c) = v.topLeftCorner(r, c);
      }
      m = std::move(m2);
      v = std::move(v2);
    }
    const Matrix g = grads[i] * scale;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.value.array() -= lr * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + config.epsilon);
  }
  return norm;
}

}  // namespace vc
