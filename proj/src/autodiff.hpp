/*
 * Copyright 2026 The NIB Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NIB_SRC_AUTODIFF_HPP_
#define NIB_SRC_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace nib {

class Graph;

// Handle to a node recorded on a Graph tape. Cheap to copy; only valid while
// the owning Graph is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

enum class OpKind {
  kInput,
  kConstant,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kScaleBy,
  kAddRowBroadcast,
  kTranspose,
  kSliceCols,
  kConcatCols,
  kConcatRows,
  kSelectRow,
  kSoftmax,
  kGelu,
  kLayerNorm,
  kEmbeddingLookup,
  kMeanPool,
  kSum,
  kCosineSimilarity,
};

// Tape-based reverse-mode differentiation. Nodes are appended in creation
// order, which is a topological order, and Backward() walks the tape in
// reverse. One Graph per forward pass; a Graph is not thread-safe.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf whose gradient is tracked.
  Var Input(Tensor value);
  // Leaf excluded from differentiation.
  Var Constant(Tensor value);

  // Reverse sweep from a scalar loss. Gradients accumulate, so calling it
  // twice on the same tape adds the second sweep on top of the first.
  void Backward(Var loss);

  // Gradient of the last Backward() loss w.r.t. `v`; zeros when `v` does not
  // influence the loss.
  Tensor Grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const { return nodes_[v.id_].kind; }
  const std::vector<std::size_t>& parents(Var v) const { return nodes_[v.id_].parents; }

  // Used by op implementations.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;
  Var Record(OpKind kind, Tensor value, std::vector<std::size_t> parents,
             BackwardFn backward);
  const Tensor& ValueOf(std::size_t id) const { return nodes_[id].value; }
  std::span<const double> GradOf(std::size_t id) const { return nodes_[id].grad; }
  // Accumulation buffer of a parent, or nullptr if it does not need a gradient.
  double* GradBuffer(std::size_t id);

 private:
  friend class Var;

  struct Node {
    OpKind kind;
    std::vector<std::size_t> parents;
    Tensor value;
    bool needs_grad = false;
    std::vector<double> grad;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

// Differentiable ops. All operands must belong to the same Graph.
Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
// Scales `a` by the one-element node `s`; differentiable in both.
Var ScaleBy(Var a, Var s);
// a[m x n] + bias[n] broadcast over rows.
Var AddRowBroadcast(Var a, Var bias);
Var Transpose(Var a);
Var SliceCols(Var a, std::size_t begin, std::size_t count);
Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
// Row `r` of a matrix as a [1 x n] matrix.
Var SelectRow(Var a, std::size_t r);
// axis is 0 (columns) or 1 (rows) for matrices; rank-1 tensors use axis 0.
Var Softmax(Var a, std::size_t axis);
Var Gelu(Var a);
// Row-wise normalization followed by gain/bias over the last axis.
Var LayerNorm(Var a, Var gain, Var bias, double eps);
Var EmbeddingLookup(Var table, std::span<const std::size_t> ids);
// Mean over `axis`; the result drops that axis.
Var MeanPool(Var a, std::size_t axis);
Var Sum(Var a);
// Cosine of the flattened operands. Throws kDegenerateInput on a zero norm.
Var CosineSimilarity(Var u, Var v);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
Tensor FiniteDiffGrad(const std::function<double(const Tensor&)>& f,
                      const Tensor& x, double h);

// ||a - b||_2 / max(||a||_2, ||b||_2), and 0 when both are zero.
double RelativeError(const Tensor& a, const Tensor& b);

}  // namespace nib

#endif  // NIB_SRC_AUTODIFF_HPP_
