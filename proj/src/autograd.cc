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

#include "vc/autograd.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vc::ag {

namespace {

std::string ShapeStr(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

void CheckSame(const Var& a, const Var& b, const char* op) {
  if (a.graph() != b.graph())
    throw DimensionError(std::string(op) + ": operands from different graphs");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeStr(a.value()) + " vs " + ShapeStr(b.value()));
}

double StableSoftplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Matrix& Var::value() const { return graph_->value_of(id_); }
bool Var::requires_grad() const { return graph_->requires_grad_of(id_); }

Graph::Graph(const ParameterStore* store) : store_(store) {
  nodes_.reserve(1024);
}

void Graph::SetGradGroups(std::vector<std::string> patterns) {
  grad_groups_ = std::move(patterns);
  all_groups_ = false;
}

bool Graph::ParamRequiresGrad(int index) const {
  if (all_groups_) return true;
  const std::string& group = store_->at(index).group;
  return std::any_of(grad_groups_.begin(), grad_groups_.end(),
                     [&](const std::string& p) { return GroupMatches(p, group); });
}

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, num_nodes() - 1);
}

Var Graph::Input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, num_nodes() - 1);
}

Var Graph::Param(const std::string& key) {
  if (store_ == nullptr) throw ValidationError("graph has no parameter store");
  const int index = store_->Index(key);
  auto it = param_nodes_.find(index);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = store_->at(index).value;
  n.requires_grad = ParamRequiresGrad(index);
  n.param_index = index;
  nodes_.push_back(std::move(n));
  param_nodes_[index] = num_nodes() - 1;
  return Var(this, num_nodes() - 1);
}

Var Graph::Emit(Matrix value, std::vector<int> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (int i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, num_nodes() - 1);
}

void Graph::AccumulateGrad(int id, const Matrix& g) { AccumulateGradExpr(id, g); }

void Graph::Backward(const Var& loss) {
  if (loss.graph() != this) throw ValidationError("loss from another graph");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw DimensionError("Backward() needs a 1x1 loss, got " +
                         ShapeStr(loss.value()));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, i);
  }
}

Matrix Graph::Grad(const Var& v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Gradients Graph::ParamGradients() const {
  Gradients out(store_ ? store_->size() : 0);
  for (const auto& [index, node] : param_nodes_) {
    if (nodes_[node].grad.size() != 0) out[index] = nodes_[node].grad;
  }
  return out;
}

Var MatMul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw DimensionError("MatMul: " + ShapeStr(a.value()) + " x " +
                         ShapeStr(b.value()));
  const int ia = a.id(), ib = b.id();
  return a.graph()->Emit(a.value() * b.value(), {ia, ib},
                         [ia, ib](Graph& g, int self) {
                           const Matrix& d = g.grad_of(self);
                           if (g.requires_grad_of(ia))
                             g.AccumulateGradExpr(ia, d * g.value_of(ib).transpose());
                           if (g.requires_grad_of(ib))
                             g.AccumulateGradExpr(ib, g.value_of(ia).transpose() * d);
                         });
}

Var Add(const Var& a, const Var& b) {
  CheckSame(a, b, "Add");
  const int ia = a.id(), ib = b.id();
  return a.graph()->Emit(a.value() + b.value(), {ia, ib},
                         [ia, ib](Graph& g, int self) {
                           g.AccumulateGrad(ia, g.grad_of(self));
                           g.AccumulateGrad(ib, g.grad_of(self));
                         });
}

Var Sub(const Var& a, const Var& b) {
  CheckSame(a, b, "Sub");
  const int ia = a.id(), ib = b.id();
  return a.graph()->Emit(a.value() - b.value(), {ia, ib},
                         [ia, ib](Graph& g, int self) {
                           g.AccumulateGrad(ia, g.grad_of(self));
                           g.AccumulateGradExpr(ib, -g.grad_of(self));
                         });
}

Var Mul(const Var& a, const Var& b) {
  CheckSame(a, b, "Mul");
  const int ia = a.id(), ib = b.id();
  return a.graph()->Emit(
      a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Graph& g, int self) {
        const Matrix& d = g.grad_of(self);
        g.AccumulateGradExpr(ia, d.cwiseProduct(g.value_of(ib)));
        g.AccumulateGradExpr(ib, d.cwiseProduct(g.value_of(ia)));
      });
}

Var Scale(const Var& a, double s) {
  const int ia = a.id();
  return a.graph()->Emit(a.value() * s, {ia}, [ia, s](Graph& g, int self) {
    g.AccumulateGradExpr(ia, g.grad_of(self) * s);
  });
}

Var AddScalar(const Var& a, double s) {
  const int ia = a.id();
  return a.graph()->Emit(a.value().array() + s, {ia}, [ia](Graph& g, int self) {
    g.AccumulateGrad(ia, g.grad_of(self));
  });
}

Var AddRow(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw DimensionError("AddRow: " + ShapeStr(a.value()) + " + " +
                         ShapeStr(row.value()));
  const int ia = a.id(), ir = row.id();
  Matrix v = a.value().rowwise() + row.value().row(0);
  return a.graph()->Emit(std::move(v), {ia, ir}, [ia, ir](Graph& g, int self) {
    const Matrix& d = g.grad_of(self);
    g.AccumulateGrad(ia, d);
    g.AccumulateGradExpr(ir, d.colwise().sum());
  });
}

Var Transpose(const Var& a) {
  const int ia = a.id();
  return a.graph()->Emit(a.value().transpose(), {ia}, [ia](Graph& g, int self) {
    g.AccumulateGradExpr(ia, g.grad_of(self).transpose());
  });
}

Var Tanh(const Var& a) {
  const int ia = a.id();
  return a.graph()->Emit(a.value().array().tanh().matrix(), {ia},
                         [ia](Graph& g, int self) {
                           const Matrix& y = g.value_of(self);
                           g.AccumulateGradExpr(
                               ia, (g.grad_of(self).array() *
                                    (1.0 - y.array().square()))
                                       .matrix());
                         });
}

Var Sigmoid(const Var& a) {
  const int ia = a.id();
  Matrix v = a.value().unaryExpr([](double x) { return StableSigmoid(x); });
  return a.graph()->Emit(std::move(v), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value_of(self);
    g.AccumulateGradExpr(
        ia, (g.grad_of(self).array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var Relu(const Var& a) {
  const int ia = a.id();
  return a.graph()->Emit(a.value().cwiseMax(0.0), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.value_of(ia);
    g.AccumulateGradExpr(
        ia, (x.array() > 0.0).select(g.grad_of(self), 0.0).matrix());
  });
}

Var Softplus(const Var& a) {
  const int ia = a.id();
  Matrix v = a.value().unaryExpr([](double x) { return StableSoftplus(x); });
  return a.graph()->Emit(std::move(v), {ia}, [ia](Graph& g, int self) {
    const Matrix s = g.value_of(ia).unaryExpr([](double x) { return StableSigmoid(x); });
    g.AccumulateGradExpr(ia, g.grad_of(self).cwiseProduct(s));
  });
}

Var Exp(const Var& a) {
  const int ia = a.id();
  return a.graph()->Emit(a.value().array().exp().matrix(), {ia},
                         [ia](Graph& g, int self) {
                           g.AccumulateGradExpr(
                               ia, g.grad_of(self).cwiseProduct(g.value_of(self)));
                         });
}

Var SoftmaxRows(const Var& a) {
  const int ia = a.id();
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double mx = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  return a.graph()->Emit(std::move(y), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value_of(self);
    const Matrix& d = g.grad_of(self);
    const Vector dots = d.cwiseProduct(y).rowwise().sum();
    Matrix dx = y.cwiseProduct(d.colwise() - dots);
    g.AccumulateGrad(ia, dx);
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("ConcatCols: no operands");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DimensionError("ConcatCols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix v(rows, cols);
  std::vector<Eigen::Index> widths;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    widths.push_back(p.cols());
    c += p.cols();
  }
  return parts[0].graph()->Emit(std::move(v), ids,
                                [ids, widths](Graph& g, int self) {
                                  const Matrix& d = g.grad_of(self);
                                  Eigen::Index c = 0;
                                  for (size_t k = 0; k < ids.size(); ++k) {
                                    if (g.requires_grad_of(ids[k]))
                                      g.AccumulateGradExpr(ids[k], d.middleCols(c, widths[k]));
                                    c += widths[k];
                                  }
                                });
}

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("ConcatRows: no operands");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("ConcatRows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix v(rows, cols);
  std::vector<Eigen::Index> heights;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    heights.push_back(p.rows());
    r += p.rows();
  }
  return parts[0].graph()->Emit(std::move(v), ids,
                                [ids, heights](Graph& g, int self) {
                                  const Matrix& d = g.grad_of(self);
                                  Eigen::Index r = 0;
                                  for (size_t k = 0; k < ids.size(); ++k) {
                                    if (g.requires_grad_of(ids[k]))
                                      g.AccumulateGradExpr(ids[k], d.middleRows(r, heights[k]));
                                    r += heights[k];
                                  }
                                });
}

Var SliceCols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw DimensionError("SliceCols out of range");
  const int ia = a.id();
  const Eigen::Index total = a.cols();
  return a.graph()->Emit(a.value().middleCols(start, count), {ia},
                         [ia, start, count, total](Graph& g, int self) {
                           Matrix d = Matrix::Zero(g.grad_of(self).rows(), total);
                           d.middleCols(start, count) = g.grad_of(self);
                           g.AccumulateGrad(ia, d);
                         });
}

Var GatherRows(const Var& a, const std::vector<int>& indices) {
  const int ia = a.id();
  Matrix v(static_cast<Eigen::Index>(indices.size()), a.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    const int k = indices[i];
    if (k >= a.rows()) throw DimensionError("GatherRows: index out of range");
    if (k < 0) {
      v.row(i).setZero();
    } else {
      v.row(i) = a.value().row(k);
    }
  }
  const Eigen::Index src_rows = a.rows();
  return a.graph()->Emit(std::move(v), {ia},
                         [ia, indices, src_rows](Graph& g, int self) {
                           const Matrix& d = g.grad_of(self);
                           Matrix dx = Matrix::Zero(src_rows, d.cols());
                           for (size_t i = 0; i < indices.size(); ++i)
                             if (indices[i] >= 0) dx.row(indices[i]) += d.row(i);
                           g.AccumulateGrad(ia, dx);
                         });
}

Var MeanRows(const Var& a) {
  const int ia = a.id();
  const double n = static_cast<double>(a.rows());
  return a.graph()->Emit(a.value().colwise().mean(), {ia},
                         [ia, n](Graph& g, int self) {
                           const Eigen::Index rows = g.value_of(ia).rows();
                           g.AccumulateGradExpr(
                               ia, (g.grad_of(self) / n).replicate(rows, 1));
                         });
}

Var SumAll(const Var& a) {
  const int ia = a.id();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.graph()->Emit(std::move(v), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.value_of(ia);
    g.AccumulateGradExpr(ia, Matrix::Constant(x.rows(), x.cols(), g.grad_of(self)(0, 0)));
  });
}

Var StopGradient(const Var& a) {
  return a.graph()->Constant(a.value());
}

Var AbsDiffSum(const Var& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw DimensionError("AbsDiffSum: " + ShapeStr(pred.value()) + " vs " +
                         ShapeStr(target));
  const int ip = pred.id();
  Matrix diff = pred.value() - target;
  Matrix v(1, 1);
  v(0, 0) = diff.cwiseAbs().sum();
  Matrix sign = diff.unaryExpr([](double x) {
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  });
  return pred.graph()->Emit(std::move(v), {ip},
                            [ip, sign = std::move(sign)](Graph& g, int self) {
                              g.AccumulateGradExpr(ip, sign * g.grad_of(self)(0, 0));
                            });
}

Var BceWithLogitsSum(const Var& logits, const Matrix& targets,
                     double pos_weight) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw DimensionError("BceWithLogitsSum: shape mismatch");
  const int il = logits.id();
  const Matrix& x = logits.value();
  double total = 0.0;
  Matrix dx(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i), yi = targets(i);
    total += pos_weight * yi * StableSoftplus(-xi) + (1.0 - yi) * StableSoftplus(xi);
    dx(i) = -pos_weight * yi * StableSigmoid(-xi) + (1.0 - yi) * StableSigmoid(xi);
  }
  Matrix v(1, 1);
  v(0, 0) = total;
  return logits.graph()->Emit(std::move(v), {il},
                              [il, dx = std::move(dx)](Graph& g, int self) {
                                g.AccumulateGradExpr(il, dx * g.grad_of(self)(0, 0));
                              });
}

Var GaussianScores(const Var& mu, const Var& sigma, Eigen::Index length) {
  if (mu.rows() != 1 || mu.cols() != 1 || sigma.rows() != 1 || sigma.cols() != 1)
    throw DimensionError("GaussianScores: mu and sigma must be 1x1");
  const double m = mu.value()(0, 0);
  const double s = sigma.value()(0, 0);
  Matrix v(1, length);
  for (Eigen::Index j = 0; j < length; ++j) {
    const double d = static_cast<double>(j) - m;
    v(0, j) = -d * d / (2.0 * s * s);
  }
  const int im = mu.id(), is = sigma.id();
  return mu.graph()->Emit(std::move(v), {im, is},
                          [im, is, m, s, length](Graph& g, int self) {
                            const Matrix& d = g.grad_of(self);
                            double dmu = 0.0, dsig = 0.0;
                            for (Eigen::Index j = 0; j < length; ++j) {
                              const double r = static_cast<double>(j) - m;
                              dmu += d(0, j) * r / (s * s);
                              dsig += d(0, j) * r * r / (s * s * s);
                            }
                            g.AccumulateGrad(im, Matrix::Constant(1, 1, dmu));
                            g.AccumulateGrad(is, Matrix::Constant(1, 1, dsig));
                          });
}

Var GruCell(const Var& input_gates, const Var& hidden, const Var& recurrent) {
  const Eigen::Index g = hidden.cols();
  if (hidden.rows() != 1 || input_gates.rows() != 1 || input_gates.cols() != 3 * g ||
      recurrent.rows() != g || recurrent.cols() != 3 * g)
    throw DimensionError("GruCell: inconsistent shapes");
  const Matrix& x = input_gates.value();
  const Matrix& h = hidden.value();
  const Matrix hu = h * recurrent.value();  // (1, 3G)
  RowVector z(g), r(g), n(g), out(g);
  for (Eigen::Index k = 0; k < g; ++k) {
    z(k) = StableSigmoid(x(0, k) + hu(0, k));
    r(k) = StableSigmoid(x(0, g + k) + hu(0, g + k));
    n(k) = std::tanh(x(0, 2 * g + k) + r(k) * hu(0, 2 * g + k));
    out(k) = (1.0 - z(k)) * n(k) + z(k) * h(0, k);
  }
  const int ix = input_gates.id(), ih = hidden.id(), iu = recurrent.id();
  return hidden.graph()->Emit(
      out, {ix, ih, iu},
      [ix, ih, iu, g, z, r, n, hu](Graph& gr, int self) {
        const Matrix& d = gr.grad_of(self);
        const Matrix& h = gr.value_of(ih);
        // Gradients w.r.t. the pre-activations of the three gates.
        Matrix dx(1, 3 * g), dhu(1, 3 * g);
        Matrix dh = Matrix::Zero(1, g);
        for (Eigen::Index k = 0; k < g; ++k) {
          const double dout = d(0, k);
          const double dz = dout * (h(0, k) - n(k));
          const double dn = dout * (1.0 - z(k));
          dh(0, k) += dout * z(k);
          const double dn_pre = dn * (1.0 - n(k) * n(k));
          const double dr = dn_pre * hu(0, 2 * g + k);
          const double dz_pre = dz * z(k) * (1.0 - z(k));
          const double dr_pre = dr * r(k) * (1.0 - r(k));
          dx(0, k) = dz_pre;
          dx(0, g + k) = dr_pre;
          dx(0, 2 * g + k) = dn_pre;
          dhu(0, k) = dz_pre;
          dhu(0, g + k) = dr_pre;
          dhu(0, 2 * g + k) = dn_pre * r(k);
        }
        gr.AccumulateGrad(ix, dx);
        if (gr.requires_grad_of(ih))
          gr.AccumulateGradExpr(ih, dh + dhu * gr.value_of(iu).transpose());
        if (gr.requires_grad_of(iu))
          gr.AccumulateGradExpr(iu, h.transpose() * dhu);
      });
}

}  // namespace vc::ag
