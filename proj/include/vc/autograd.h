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

#ifndef VC_AUTOGRAD_H_
#define VC_AUTOGRAD_H_

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Graph records every operation applied to Vars created from it. Calling
// Backward() on a 1x1 Var propagates gradients to every leaf that requires
// them. Parameter leaves come from a ParameterStore; whether a parameter
// requires a gradient is decided by the graph's gradient groups, which is how
// stop-gradient stages are expressed. Gradients still flow *through* frozen
// parameters' operations to upstream trainable leaves.

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vc/common.h"
#include "vc/params.h"

namespace vc::ag {

class Graph;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  // |store| may be null when only constants and inputs are used.
  explicit Graph(const ParameterStore* store = nullptr);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Restricts which parameter groups receive gradients. Patterns follow
  // GroupMatches(). The default is every group.
  void SetGradGroups(std::vector<std::string> patterns);

  Var Constant(Matrix value);
  // A leaf that requires a gradient; used to differentiate w.r.t. inputs.
  Var Input(Matrix value);
  // Parameter leaf, created once per key and cached.
  Var Param(const std::string& key);

  void Backward(const Var& loss);

  // Gradient of the last Backward() w.r.t. |v| (zero matrix when none).
  Matrix Grad(const Var& v) const;

  // Parameter gradients aligned with the store's indices.
  Gradients ParamGradients() const;

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // Low-level hooks used by the op implementations.
  using BackwardFn = std::function<void(Graph&, int)>;
  Var Emit(Matrix value, std::vector<int> inputs, BackwardFn fn);
  const Matrix& value_of(int id) const { return nodes_[id].value; }
  const Matrix& grad_of(int id) const { return nodes_[id].grad; }
  bool requires_grad_of(int id) const { return nodes_[id].requires_grad; }
  void AccumulateGrad(int id, const Matrix& g);
  template <typename Expr>
  void AccumulateGradExpr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    int param_index = -1;
    BackwardFn backward;
  };

  bool ParamRequiresGrad(int index) const;

  const ParameterStore* store_;
  std::vector<std::string> grad_groups_;
  bool all_groups_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;  // store index -> node id
};

// Elementwise and linear-algebra ops. All operands must come from the same
// graph; shapes are checked and violations throw DimensionError.
Var MatMul(const Var& a, const Var& b);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);  // Hadamard
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
// a (n x m) + row (1 x m) broadcast over rows.
Var AddRow(const Var& a, const Var& row);
Var Transpose(const Var& a);
Var Tanh(const Var& a);
Var Sigmoid(const Var& a);
Var Relu(const Var& a);
Var Softplus(const Var& a);
Var Exp(const Var& a);
Var SoftmaxRows(const Var& a);
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);
Var SliceCols(const Var& a, Eigen::Index start, Eigen::Index count);
// Output row i is row indices[i] of |a|, or zeros when indices[i] < 0.
Var GatherRows(const Var& a, const std::vector<int>& indices);
Var MeanRows(const Var& a);  // (n x m) -> (1 x m)
Var SumAll(const Var& a);    // -> 1x1
// Blocks gradient flow; the value passes through unchanged.
Var StopGradient(const Var& a);

// sum |pred - target| over all entries -> 1x1.
Var AbsDiffSum(const Var& pred, const Matrix& target);
// sum of weighted binary cross-entropy with logits -> 1x1. Positive targets
// are weighted by |pos_weight|.
Var BceWithLogitsSum(const Var& logits, const Matrix& targets,
                     double pos_weight);
// Row of log-Gaussian scores -(j - mu)^2 / (2 sigma^2), j = 0..length-1.
// |mu| and |sigma| are 1x1.
Var GaussianScores(const Var& mu, const Var& sigma, Eigen::Index length);

// Gated recurrent unit step. |input_gates| is the (1 x 3G) input projection
// (bias included) ordered [update, reset, candidate]; |recurrent| is the
// (G x 3G) hidden-to-hidden matrix.
//   z = sigmoid(x_z + h U_z), r = sigmoid(x_r + h U_r),
//   n = tanh(x_n + r * (h U_n)), h' = (1 - z) * n + z * h.
Var GruCell(const Var& input_gates, const Var& hidden, const Var& recurrent);

inline Var operator+(const Var& a, const Var& b) { return Add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return Sub(a, b); }

}  // namespace vc::ag

#endif  // VC_AUTOGRAD_H_
