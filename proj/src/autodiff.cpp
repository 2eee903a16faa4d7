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

#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "error.hpp"

namespace nib {

const Tensor& Var::value() const {
  Check(graph_ != nullptr, ErrorCode::kInvalidArgument, "unbound Var");
  return graph_->ValueOf(id_);
}

Var Graph::Input(Tensor value) {
  nodes_.push_back(Node{OpKind::kInput, {}, std::move(value), true, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Graph::Constant(Tensor value) {
  nodes_.push_back(Node{OpKind::kConstant, {}, std::move(value), false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Graph::Record(OpKind kind, Tensor value, std::vector<std::size_t> parents,
                  BackwardFn backward) {
  bool needs_grad = false;
  for (std::size_t p : parents) {
    Check(p < nodes_.size(), ErrorCode::kInvalidArgument, "dangling parent id");
    needs_grad = needs_grad || nodes_[p].needs_grad;
  }
  nodes_.push_back(Node{kind, std::move(parents), std::move(value), needs_grad, {},
                        needs_grad ? std::move(backward) : BackwardFn()});
  return Var(this, nodes_.size() - 1);
}

double* Graph::GradBuffer(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return nullptr;
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad.data();
}

void Graph::Backward(Var loss) {
  Check(loss.graph_ == this, ErrorCode::kInvalidArgument, "loss from another graph");
  Check(nodes_[loss.id_].value.size() == 1, ErrorCode::kDimension,
        "backward() needs a scalar loss, got " +
            ShapeString(nodes_[loss.id_].value.shape()));
  if (!nodes_[loss.id_].needs_grad) return;
  GradBuffer(loss.id_)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this, i);
  }
}

Tensor Graph::Grad(Var v) const {
  const Node& node = nodes_[v.id_];
  if (node.grad.empty()) return Tensor::Zeros(node.value.shape());
  return Tensor(node.value.shape(), node.grad);
}

namespace {

Graph& SameGraph(Var a, Var b) {
  Check(&a.graph() == &b.graph(), ErrorCode::kInvalidArgument,
        "operands belong to different graphs");
  return a.graph();
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  Check(a.shape() == b.shape(), ErrorCode::kDimension,
        std::string(op) + ": shape mismatch " + ShapeString(a.shape()) + " vs " +
            ShapeString(b.shape()));
}

void RequireMatrix(const Tensor& a, const char* op) {
  Check(a.rank() == 2, ErrorCode::kDimension,
        std::string(op) + ": expected a matrix, got " + ShapeString(a.shape()));
}

}  // namespace

Var MatMul(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireMatrix(av, "matmul");
  RequireMatrix(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Check(bv.rows() == k, ErrorCode::kDimension,
        "matmul: inner dimensions differ " + ShapeString(av.shape()) + " x " +
            ShapeString(bv.shape()));
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return g.Record(OpKind::kMatMul, Tensor({m, n}, std::move(out)), {a.id(), b.id()},
                  [ai = a.id(), bi = b.id(), m, k, n](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    const Tensor& av = g.ValueOf(ai);
                    const Tensor& bv = g.ValueOf(bi);
                    if (double* da = g.GradBuffer(ai)) {
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          double acc = 0.0;
                          for (std::size_t j = 0; j < n; ++j)
                            acc += up[i * n + j] * bv[p * n + j];
                          da[i * k + p] += acc;
                        }
                    }
                    if (double* db = g.GradBuffer(bi)) {
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          const double aip = av[i * k + p];
                          for (std::size_t j = 0; j < n; ++j)
                            db[p * n + j] += aip * up[i * n + j];
                        }
                    }
                  });
}

namespace {

enum class Pointwise { kAdd, kSub, kMul };

Var Elementwise(Var a, Var b, Pointwise kind) {
  Graph& g = SameGraph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireSameShape(av, bv, "elementwise");
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (kind) {
      case Pointwise::kAdd: out[i] = av[i] + bv[i]; break;
      case Pointwise::kSub: out[i] = av[i] - bv[i]; break;
      case Pointwise::kMul: out[i] = av[i] * bv[i]; break;
    }
  }
  const OpKind op = kind == Pointwise::kAdd   ? OpKind::kAdd
                    : kind == Pointwise::kSub ? OpKind::kSub
                                              : OpKind::kMul;
  return g.Record(op, Tensor(av.shape(), std::move(out)), {a.id(), b.id()},
                  [ai = a.id(), bi = b.id(), kind](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    const Tensor& av = g.ValueOf(ai);
                    const Tensor& bv = g.ValueOf(bi);
                    if (double* da = g.GradBuffer(ai)) {
                      for (std::size_t i = 0; i < up.size(); ++i)
                        da[i] += kind == Pointwise::kMul ? up[i] * bv[i] : up[i];
                    }
                    if (double* db = g.GradBuffer(bi)) {
                      for (std::size_t i = 0; i < up.size(); ++i) {
                        if (kind == Pointwise::kMul) db[i] += up[i] * av[i];
                        else if (kind == Pointwise::kSub) db[i] -= up[i];
                        else db[i] += up[i];
                      }
                    }
                  });
}

}  // namespace

Var Add(Var a, Var b) { return Elementwise(a, b, Pointwise::kAdd); }
Var Sub(Var a, Var b) { return Elementwise(a, b, Pointwise::kSub); }
Var Mul(Var a, Var b) { return Elementwise(a, b, Pointwise::kMul); }

Var Scale(Var a, double s) {
  const Tensor& av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return a.graph().Record(OpKind::kScale, Tensor(av.shape(), std::move(out)), {a.id()},
                          [ai = a.id(), s](Graph& g, std::size_t self) {
                            auto up = g.GradOf(self);
                            if (double* da = g.GradBuffer(ai))
                              for (std::size_t i = 0; i < up.size(); ++i) da[i] += up[i] * s;
                          });
}

Var ScaleBy(Var a, Var s) {
  Graph& g = SameGraph(a, s);
  const Tensor& av = a.value();
  const double sv = s.value().item();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * sv;
  return g.Record(OpKind::kScaleBy, Tensor(av.shape(), std::move(out)), {a.id(), s.id()},
                  [ai = a.id(), si = s.id()](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    const Tensor& av = g.ValueOf(ai);
                    const double sv = g.ValueOf(si)[0];
                    if (double* da = g.GradBuffer(ai))
                      for (std::size_t i = 0; i < up.size(); ++i) da[i] += up[i] * sv;
                    if (double* ds = g.GradBuffer(si)) {
                      double acc = 0.0;
                      for (std::size_t i = 0; i < up.size(); ++i) acc += up[i] * av[i];
                      ds[0] += acc;
                    }
                  });
}

Var AddRowBroadcast(Var a, Var bias) {
  Graph& g = SameGraph(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  RequireMatrix(av, "add_row_broadcast");
  const std::size_t m = av.rows(), n = av.cols();
  Check(bv.size() == n, ErrorCode::kDimension,
        "add_row_broadcast: bias " + ShapeString(bv.shape()) + " vs rows of " +
            ShapeString(av.shape()));
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  return g.Record(OpKind::kAddRowBroadcast, Tensor(av.shape(), std::move(out)),
                  {a.id(), bias.id()},
                  [ai = a.id(), bi = bias.id(), m, n](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    if (double* da = g.GradBuffer(ai))
                      for (std::size_t i = 0; i < m * n; ++i) da[i] += up[i];
                    if (double* db = g.GradBuffer(bi))
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j) db[j] += up[i * n + j];
                  });
}

Var Transpose(Var a) {
  const Tensor& av = a.value();
  RequireMatrix(av, "transpose");
  const std::size_t m = av.rows(), n = av.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.graph().Record(OpKind::kTranspose, Tensor({n, m}, std::move(out)), {a.id()},
                          [ai = a.id(), m, n](Graph& g, std::size_t self) {
                            auto up = g.GradOf(self);
                            if (double* da = g.GradBuffer(ai))
                              for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < n; ++j)
                                  da[i * n + j] += up[j * m + i];
                          });
}

Var SliceCols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  RequireMatrix(av, "slice_cols");
  const std::size_t m = av.rows(), n = av.cols();
  Check(begin + count <= n, ErrorCode::kDimension,
        "slice_cols: range [" + std::to_string(begin) + ", " +
            std::to_string(begin + count) + ") exceeds " + std::to_string(n) + " columns");
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = av[i * n + begin + j];
  return a.graph().Record(OpKind::kSliceCols, Tensor({m, count}, std::move(out)), {a.id()},
                          [ai = a.id(), m, n, begin, count](Graph& g, std::size_t self) {
                            auto up = g.GradOf(self);
                            if (double* da = g.GradBuffer(ai))
                              for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < count; ++j)
                                  da[i * n + begin + j] += up[i * count + j];
                          });
}

Var ConcatCols(std::span<const Var> parts) {
  Check(!parts.empty(), ErrorCode::kDimension, "concat_cols: no operands");
  Graph& g = parts.front().graph();
  const std::size_t m = parts.front().value().rows();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (Var p : parts) {
    SameGraph(parts.front(), p);
    RequireMatrix(p.value(), "concat_cols");
    Check(p.value().rows() == m, ErrorCode::kDimension, "concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += widths.back();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[i * total + offset + j] = pv[i * widths[k] + j];
    offset += widths[k];
  }
  return g.Record(OpKind::kConcatCols, Tensor({m, total}, std::move(out)), ids,
                  [ids, widths, m, total](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (double* d = g.GradBuffer(ids[k]))
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < widths[k]; ++j)
                            d[i * widths[k] + j] += up[i * total + offset + j];
                      offset += widths[k];
                    }
                  });
}

Var ConcatRows(std::span<const Var> parts) {
  Check(!parts.empty(), ErrorCode::kDimension, "concat_rows: no operands");
  Graph& g = parts.front().graph();
  const std::size_t n = parts.front().value().cols();
  std::vector<std::size_t> ids, sizes;
  std::vector<double> out;
  for (Var p : parts) {
    SameGraph(parts.front(), p);
    Check(p.value().rank() <= 2 && p.value().cols() == n, ErrorCode::kDimension,
          "concat_rows: column counts differ");
    ids.push_back(p.id());
    sizes.push_back(p.value().size());
    out.insert(out.end(), p.value().values().begin(), p.value().values().end());
  }
  const std::size_t m = out.size() / n;
  return g.Record(OpKind::kConcatRows, Tensor({m, n}, std::move(out)), ids,
                  [ids, sizes](Graph& g, std::size_t self) {
                    auto up = g.GradOf(self);
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (double* d = g.GradBuffer(ids[k]))
                        for (std::size_t i = 0; i < sizes[k]; ++i) d[i] += up[offset + i];
                      offset += sizes[k];
                    }
                  });
}

Var SelectRow(Var a, std::size_t r) {
  const Tensor& av = a.value();
  RequireMatrix(av, "select_row");
  const std::size_t m = av.rows(), n = av.cols();
  Check(r < m, ErrorCode::kDimension,
        "select_row: row " + std::to_string(r) + " of " + std::to_string(m));
  std::vector<double> out(av.values().begin() + r * n, av.values().begin() + (r + 1) * n);
  return a.graph().Record(OpKind::kSelectRow, Tensor({1, n}, std::move(out)), {a.id()},
                          [ai = a.id(), r, n](Graph& g, std::size_t self) {
                            auto up = g.GradOf(self);
                            if (double* da = g.GradBuffer(ai))
                              for (std::size_t j = 0; j < n; ++j) da[r * n + j] += up[j];
                          });
}

namespace {

// Iterates the independent lanes of `axis` as (offset, stride, length).
struct Lanes {
  std::size_t count, stride, length, lane_step;
};

Lanes LanesFor(const Tensor& a, std::size_t axis, const char* op) {
  if (a.rank() == 1) {
    Check(axis == 0, ErrorCode::kDimension, std::string(op) + ": axis out of range");
    return {1, 1, a.size(), 0};
  }
  RequireMatrix(a, op);
  Check(axis <= 1, ErrorCode::kDimension, std::string(op) + ": axis out of range");
  const std::size_t m = a.rows(), n = a.cols();
  // axis 1: lanes are rows; axis 0: lanes are columns.
  return axis == 1 ? Lanes{m, 1, n, n} : Lanes{n, n, m, 1};
}

}  // namespace

Var Softmax(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  const Lanes lanes = LanesFor(av, axis, "softmax");
  std::vector<double> out(av.size());
  for (std::size_t l = 0; l < lanes.count; ++l) {
    const std::size_t base = l * lanes.lane_step;
    double hi = av[base];
    for (std::size_t t = 1; t < lanes.length; ++t) hi = std::max(hi, av[base + t * lanes.stride]);
    double total = 0.0;
    for (std::size_t t = 0; t < lanes.length; ++t) {
      const std::size_t i = base + t * lanes.stride;
      out[i] = std::exp(av[i] - hi);
      total += out[i];
    }
    for (std::size_t t = 0; t < lanes.length; ++t) out[base + t * lanes.stride] /= total;
  }
  return a.graph().Record(
      OpKind::kSoftmax, Tensor(av.shape(), std::move(out)), {a.id()},
      [ai = a.id(), lanes](Graph& g, std::size_t self) {
        double* da = g.GradBuffer(ai);
        if (!da) return;
        auto up = g.GradOf(self);
        const Tensor& y = g.ValueOf(self);
        for (std::size_t l = 0; l < lanes.count; ++l) {
          const std::size_t base = l * lanes.lane_step;
          double dot = 0.0;
          for (std::size_t t = 0; t < lanes.length; ++t) {
            const std::size_t i = base + t * lanes.stride;
            dot += up[i] * y[i];
          }
          for (std::size_t t = 0; t < lanes.length; ++t) {
            const std::size_t i = base + t * lanes.stride;
            da[i] += y[i] * (up[i] - dot);
          }
        }
      });
}

Var Gelu(Var a) {
  const Tensor& av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] / std::numbers::sqrt2));
  }
  return a.graph().Record(OpKind::kGelu, Tensor(av.shape(), std::move(out)), {a.id()},
                          [ai = a.id()](Graph& g, std::size_t self) {
                            double* da = g.GradBuffer(ai);
                            if (!da) return;
                            auto up = g.GradOf(self);
                            const Tensor& x = g.ValueOf(ai);
                            const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi *
                                                        std::numbers::sqrt2;
                            for (std::size_t i = 0; i < up.size(); ++i) {
                              const double cdf = 0.5 * (1.0 + std::erf(x[i] / std::numbers::sqrt2));
                              const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
                              da[i] += up[i] * (cdf + x[i] * pdf);
                            }
                          });
}

Var LayerNorm(Var a, Var gain, Var bias, double eps) {
  Graph& g = SameGraph(a, gain);
  SameGraph(a, bias);
  Check(eps >= 0.0, ErrorCode::kInvalidArgument, "layer_norm: negative eps");
  const Tensor& av = a.value();
  const std::size_t m = av.rows(), n = av.cols();
  Check(gain.value().size() == n && bias.value().size() == n, ErrorCode::kDimension,
        "layer_norm: gain/bias width differs from " + std::to_string(n));
  std::vector<double> normalized(m * n), inv_std(m), out(m * n);
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += av[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = av[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    Check(var + eps > 0.0, ErrorCode::kDegenerateInput,
          "layer_norm: zero variance row with eps = 0");
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normalized[i * n + j] = (av[i * n + j] - mean) * inv_std[i];
      out[i * n + j] = normalized[i * n + j] * gv[j] + bv[j];
    }
  }
  return g.Record(
      OpKind::kLayerNorm, Tensor(av.shape(), std::move(out)), {a.id(), gain.id(), bias.id()},
      [ai = a.id(), gi = gain.id(), bi = bias.id(), m, n, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
        auto up = g.GradOf(self);
        const Tensor& gv = g.ValueOf(gi);
        if (double* dg = g.GradBuffer(gi))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) dg[j] += up[i * n + j] * normalized[i * n + j];
        if (double* db = g.GradBuffer(bi))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) db[j] += up[i * n + j];
        if (double* da = g.GradBuffer(ai)) {
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dy = up[i * n + j] * gv[j];
              sum_dy += dy;
              sum_dy_xhat += dy * normalized[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const double dy = up[i * n + j] * gv[j];
              da[i * n + j] += inv_std[i] * (dy - inv_n * sum_dy -
                                             normalized[i * n + j] * inv_n * sum_dy_xhat);
            }
          }
        }
      });
}

Var EmbeddingLookup(Var table, std::span<const std::size_t> ids) {
  const Tensor& tv = table.value();
  RequireMatrix(tv, "embedding_lookup");
  const std::size_t rows = tv.rows(), n = tv.cols();
  std::vector<double> out;
  out.reserve(ids.size() * n);
  for (std::size_t id : ids) {
    Check(id < rows, ErrorCode::kInvalidArgument,
          "embedding_lookup: id " + std::to_string(id) + " out of range for " +
              std::to_string(rows) + " rows");
    out.insert(out.end(), tv.values().begin() + id * n, tv.values().begin() + (id + 1) * n);
  }
  std::vector<std::size_t> id_copy(ids.begin(), ids.end());
  return table.graph().Record(
      OpKind::kEmbeddingLookup, Tensor({ids.size(), n}, std::move(out)), {table.id()},
      [ti = table.id(), n, id_copy = std::move(id_copy)](Graph& g, std::size_t self) {
        auto up = g.GradOf(self);
        if (double* dt = g.GradBuffer(ti))
          for (std::size_t r = 0; r < id_copy.size(); ++r)
            for (std::size_t j = 0; j < n; ++j) dt[id_copy[r] * n + j] += up[r * n + j];
      });
}

Var MeanPool(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  const Lanes lanes = LanesFor(av, axis, "mean_pool");
  std::vector<double> out(lanes.count, 0.0);
  for (std::size_t l = 0; l < lanes.count; ++l) {
    const std::size_t base = l * lanes.lane_step;
    for (std::size_t t = 0; t < lanes.length; ++t) out[l] += av[base + t * lanes.stride];
    out[l] /= static_cast<double>(lanes.length);
  }
  Shape shape = av.rank() == 1 ? Shape{} : Shape{lanes.count};
  return a.graph().Record(OpKind::kMeanPool, Tensor(std::move(shape), std::move(out)),
                          {a.id()}, [ai = a.id(), lanes](Graph& g, std::size_t self) {
                            double* da = g.GradBuffer(ai);
                            if (!da) return;
                            auto up = g.GradOf(self);
                            const double inv = 1.0 / static_cast<double>(lanes.length);
                            for (std::size_t l = 0; l < lanes.count; ++l) {
                              const std::size_t base = l * lanes.lane_step;
                              for (std::size_t t = 0; t < lanes.length; ++t)
                                da[base + t * lanes.stride] += up[l] * inv;
                            }
                          });
}

Var Sum(Var a) {
  const Tensor& av = a.value();
  double total = 0.0;
  for (double v : av.values()) total += v;
  return a.graph().Record(OpKind::kSum, Tensor::Scalar(total), {a.id()},
                          [ai = a.id()](Graph& g, std::size_t self) {
                            const double up = g.GradOf(self)[0];
                            if (double* da = g.GradBuffer(ai))
                              for (std::size_t i = 0; i < g.ValueOf(ai).size(); ++i) da[i] += up;
                          });
}

Var CosineSimilarity(Var u, Var v) {
  Graph& g = SameGraph(u, v);
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  Check(uv.size() == vv.size(), ErrorCode::kDimension,
        "cosine_similarity: sizes " + std::to_string(uv.size()) + " vs " +
            std::to_string(vv.size()));
  double dot = 0.0, uu = 0.0, vv2 = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    dot += uv[i] * vv[i];
    uu += uv[i] * uv[i];
    vv2 += vv[i] * vv[i];
  }
  Check(uu > 0.0 && vv2 > 0.0, ErrorCode::kDegenerateInput,
        "cosine_similarity: zero-norm operand");
  const double nu = std::sqrt(uu), nv = std::sqrt(vv2);
  const double cosine = std::clamp(dot / (nu * nv), -1.0, 1.0);
  return g.Record(OpKind::kCosineSimilarity, Tensor::Scalar(cosine), {u.id(), v.id()},
                  [ui = u.id(), vi = v.id(), nu, nv, dot](Graph& g, std::size_t self) {
                    const double up = g.GradOf(self)[0];
                    const Tensor& uv = g.ValueOf(ui);
                    const Tensor& vv = g.ValueOf(vi);
                    const double c = dot / (nu * nv);
                    if (double* du = g.GradBuffer(ui))
                      for (std::size_t i = 0; i < uv.size(); ++i)
                        du[i] += up * (vv[i] / (nu * nv) - c * uv[i] / (nu * nu));
                    if (double* dv = g.GradBuffer(vi))
                      for (std::size_t i = 0; i < vv.size(); ++i)
                        dv[i] += up * (uv[i] / (nu * nv) - c * vv[i] / (nv * nv));
                  });
}

Tensor FiniteDiffGrad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                      double h) {
  Check(h > 0.0, ErrorCode::kInvalidArgument, "finite_diff_grad: h must be positive");
  std::vector<double> grad(x.size());
  std::vector<double> probe = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double plus = f(Tensor(x.shape(), probe));
    probe[i] = original - h;
    const double minus = f(Tensor(x.shape(), probe));
    probe[i] = original;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return Tensor(x.shape(), std::move(grad));
}

double RelativeError(const Tensor& a, const Tensor& b) {
  Check(a.size() == b.size(), ErrorCode::kDimension, "relative_error: size mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / scale;
}

}  // namespace nib
