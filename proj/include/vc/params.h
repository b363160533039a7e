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

#ifndef VC_PARAMS_H_
#define VC_PARAMS_H_

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "vc/common.h"

namespace vc {

// A named trainable tensor. Its key is "<group>/<name>"; the group is the
// unit that stage plans freeze or train (e.g. "gst.refenc").
struct Parameter {
  std::string group;
  std::string name;
  Matrix value;

  std::string key() const { return group + "/" + name; }
};

// Ordered collection of parameters. Insertion order is stable and is the
// order used for serialization and gradient reduction.
class ParameterStore {
 public:
  int Add(const std::string& group, const std::string& name, Matrix init);

  // Returns -1 when absent.
  int Find(const std::string& key) const;
  int Index(const std::string& key) const;  // throws when absent

  Parameter& at(int i) { return params_.at(i); }
  const Parameter& at(int i) const { return params_.at(i); }
  const Matrix& value(const std::string& key) const {
    return params_[Index(key)].value;
  }
  Matrix& mutable_value(const std::string& key) {
    return params_[Index(key)].value;
  }

  int size() const { return static_cast<int>(params_.size()); }
  int64_t NumScalars() const;

  // Distinct group names in first-appearance order.
  std::vector<std::string> Groups() const;
  bool HasGroup(const std::string& group) const;

  // Copies the values of every parameter in |group|, keyed by parameter key.
  std::map<std::string, Matrix> Snapshot(const std::string& group_pattern) const;

  bool operator==(const ParameterStore& other) const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> index_;
};

// "gst.*" matches every group starting with "gst."; anything else must match
// exactly.
bool GroupMatches(const std::string& pattern, const std::string& group);

// Gradients aligned with ParameterStore indices. An empty matrix means the
// parameter received no gradient.
using Gradients = std::vector<Matrix>;

void AccumulateGradients(const Gradients& from, Gradients* into);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int warmup_steps = 0;
  // Cosine decay from learning_rate to final_lr_fraction * learning_rate
  // over decay_steps (after warmup); 0 keeps the rate constant.
  int decay_steps = 0;
  double final_lr_fraction = 1.0;
  double grad_clip = 1.0;  // global L2 norm; <= 0 disables
};

// First and second moments keyed by parameter key, so a parameter that grows
// (the speaker table) keeps its history for the existing rows.
struct AdamState {
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
  int64_t step = 0;
};

// Applies one update to the parameters whose group is in |trainable_groups|.
// Parameters outside those groups are not touched at all.
// Returns the pre-clipping global gradient norm.
double AdamUpdate(const AdamConfig& config,
                  const std::vector<std::string>& trainable_groups,
                  const Gradients& grads, ParameterStore* store,
                  AdamState* state);

}  // namespace vc

#endif  // VC_PARAMS_H_
