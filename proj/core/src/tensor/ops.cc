// Copyright (c) 2026 The dualasr Authors. All Rights Reserved.
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

#include "dualasr/tensor/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "dualasr/errors.h"

namespace dualasr::ops {

namespace {

using internal::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

[[noreturn]] void ShapeFail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

DType ResultType(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t->dtype() == DType::kF64) return DType::kF64;
  }
  return DType::kF32;
}

// Tape to record on, or nullptr when no input needs a gradient.
Tape* RecordingTape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::Active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

NodePtr MakeOutput(const char* op, Shape shape, std::vector<double> value,
                   DType dtype) {
  for (double& v : value) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value in output of shape " +
                         ShapeToString(shape));
    }
    if (dtype == DType::kF32) v = static_cast<double>(static_cast<float>(v));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->dtype = dtype;
  return node;
}

// Creates the output node and, if needed, records the backward rule. The
// rule receives the output node (whose grad is populated) by reference.
template <typename BackwardRule>
Tensor Finish(const char* op, Shape shape, std::vector<double> value,
              std::initializer_list<const Tensor*> inputs, BackwardRule rule) {
  NodePtr out = MakeOutput(op, std::move(shape), std::move(value), ResultType(inputs));
  if (Tape* tape = RecordingTape(inputs)) {
    out->requires_grad = true;
    std::vector<NodePtr> in;
    in.reserve(inputs.size());
    for (const Tensor* t : inputs) in.push_back(t->node_ptr());
    Node* raw = out.get();
    tape->Record(op, std::move(in), out, [raw, rule = std::move(rule)]() { rule(*raw); });
  }
  return Tensor::FromNode(std::move(out));
}

// Gradient buffer of an input, or nullptr when it does not need one.
std::vector<double>* GradOf(const NodePtr& n) {
  return n->requires_grad ? &n->EnsureGrad() : nullptr;
}

bool IsSuffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

void CheckBroadcast(const char* op, const Tensor& a, const Tensor& b) {
  if (!IsSuffix(a.shape(), b.shape())) {
    ShapeFail(op, "cannot broadcast " + ShapeToString(b.shape()) + " onto " +
                      ShapeToString(a.shape()));
  }
}

int NormalizeAxis(const char* op, int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    ShapeFail(op, "axis " + std::to_string(axis) + " out of range for rank " +
                      std::to_string(rank));
  }
  return a;
}

int64_t Prod(const Shape& s, size_t begin, size_t end) {
  int64_t p = 1;
  for (size_t i = begin; i < end; ++i) p *= s[i];
  return p;
}

template <typename F, typename D>
Tensor Unary(const char* op, const Tensor& x, F forward, D derivative) {
  auto xv = x.data();
  std::vector<double> y(xv.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = forward(xv[i]);
  NodePtr xn = x.node_ptr();
  return Finish(op, x.shape(), std::move(y), {&x},
                [xn, derivative](const Node& out) {
                  std::vector<double>* gx = GradOf(xn);
                  if (!gx) return;
                  for (size_t i = 0; i < out.grad.size(); ++i) {
                    (*gx)[i] += out.grad[i] * derivative(xn->value[i], out.value[i]);
                  }
                });
}

double SigmoidScalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    ShapeFail("matmul", "incompatible shapes " + ShapeToString(a.shape()) + " x " +
                            ShapeToString(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> y(m * n);
  MutMap(y.data(), m, n).noalias() =
      ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return Finish("matmul", {m, n}, std::move(y), {&a, &b},
                [an, bn, m, k, n](const Node& out) {
                  ConstMap g(out.grad.data(), m, n);
                  if (auto* ga = GradOf(an)) {
                    MutMap(ga->data(), m, k).noalias() +=
                        g * ConstMap(bn->value.data(), k, n).transpose();
                  }
                  if (auto* gb = GradOf(bn)) {
                    MutMap(gb->data(), k, n).noalias() +=
                        ConstMap(an->value.data(), m, k).transpose() * g;
                  }
                });
}

Tensor Transpose(const Tensor& x) {
  if (x.rank() != 2) ShapeFail("transpose", "expects rank 2, got " + ShapeToString(x.shape()));
  const int64_t r = x.dim(0), c = x.dim(1);
  std::vector<double> y(r * c);
  MutMap(y.data(), c, r) = ConstMap(x.data().data(), r, c).transpose();
  NodePtr xn = x.node_ptr();
  return Finish("transpose", {c, r}, std::move(y), {&x}, [xn, r, c](const Node& out) {
    if (auto* gx = GradOf(xn)) {
      MutMap(gx->data(), r, c) += ConstMap(out.grad.data(), c, r).transpose();
    }
  });
}

namespace {

template <typename F, typename DA, typename DB>
Tensor Binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  CheckBroadcast(op, a, b);
  auto av = a.data(), bv = b.data();
  const size_t n = av.size(), nb = bv.size();
  std::vector<double> y(n);
  if (nb == 0) ShapeFail(op, "empty broadcast operand");
  for (size_t i = 0; i < n; ++i) y[i] = f(av[i], bv[i % nb]);
  NodePtr an = a.node_ptr(), bn = b.node_ptr();
  return Finish(op, a.shape(), std::move(y), {&a, &b},
                [an, bn, n, nb, da, db](const Node& out) {
                  auto* ga = GradOf(an);
                  auto* gb = GradOf(bn);
                  for (size_t i = 0; i < n; ++i) {
                    const double g = out.grad[i];
                    const double x = an->value[i], z = bn->value[i % nb];
                    if (ga) (*ga)[i] += g * da(x, z);
                    if (gb) (*gb)[i % nb] += g * db(x, z);
                  }
                });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  return Binary(
      "add", a, b, [](double x, double z) { return x + z; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return Binary(
      "sub", a, b, [](double x, double z) { return x - z; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return Binary(
      "mul", a, b, [](double x, double z) { return x * z; },
      [](double, double z) { return z; }, [](double x, double) { return x; });
}

Tensor Scale(const Tensor& x, double factor) {
  return Unary(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor AddScalar(const Tensor& x, double value) {
  return Unary(
      "add_scalar", x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor Concat(std::span<const Tensor> xs, int axis) {
  if (xs.empty()) ShapeFail("concat", "no inputs");
  const Shape& s0 = xs[0].shape();
  const int ax = NormalizeAxis("concat", axis, static_cast<int>(s0.size()));
  int64_t total = 0;
  for (const Tensor& t : xs) {
    const Shape& s = t.shape();
    bool ok = s.size() == s0.size();
    for (size_t i = 0; ok && i < s.size(); ++i) {
      if (static_cast<int>(i) != ax && s[i] != s0[i]) ok = false;
    }
    if (!ok) {
      ShapeFail("concat", "shape " + ShapeToString(s) + " does not match " +
                              ShapeToString(s0) + " outside axis " + std::to_string(ax));
    }
    total += s[ax];
  }
  Shape out_shape = s0;
  out_shape[ax] = total;
  const int64_t outer = Prod(s0, 0, ax);
  const int64_t inner = Prod(s0, ax + 1, s0.size());
  std::vector<double> y(outer * total * inner);
  std::vector<int64_t> widths;
  int64_t offset = 0;
  for (const Tensor& t : xs) {
    const int64_t w = t.dim(ax) * inner;
    auto v = t.data();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(v.begin() + o * w, w, y.begin() + o * total * inner + offset);
    }
    widths.push_back(w);
    offset += w;
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& t : xs) nodes.push_back(t.node_ptr());
  NodePtr out = MakeOutput("concat", out_shape, std::move(y), [&] {
    for (const Tensor& t : xs)
      if (t.dtype() == DType::kF64) return DType::kF64;
    return DType::kF32;
  }());
  Tape* tape = Tape::Active();
  bool any = false;
  for (const Tensor& t : xs) any = any || t.requires_grad();
  if (tape && any) {
    out->requires_grad = true;
    Node* raw = out.get();
    const int64_t row = total * inner;
    tape->Record("concat", nodes, out, [raw, nodes, widths, outer, row]() {
      int64_t off = 0;
      for (size_t i = 0; i < nodes.size(); ++i) {
        if (auto* g = GradOf(nodes[i])) {
          for (int64_t o = 0; o < outer; ++o) {
            for (int64_t j = 0; j < widths[i]; ++j) {
              (*g)[o * widths[i] + j] += raw->grad[o * row + off + j];
            }
          }
        }
        off += widths[i];
      }
    });
  }
  return Tensor::FromNode(std::move(out));
}

Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t length) {
  const Shape& s = x.shape();
  const int ax = NormalizeAxis("slice", axis, static_cast<int>(s.size()));
  if (start < 0 || length < 0 || start + length > s[ax]) {
    ShapeFail("slice", "range [" + std::to_string(start) + ", " +
                           std::to_string(start + length) + ") out of bounds for axis " +
                           std::to_string(ax) + " of " + ShapeToString(s));
  }
  const int64_t outer = Prod(s, 0, ax);
  const int64_t inner = Prod(s, ax + 1, s.size());
  const int64_t src_row = s[ax] * inner, dst_row = length * inner, off = start * inner;
  Shape out_shape = s;
  out_shape[ax] = length;
  std::vector<double> y(outer * dst_row);
  auto v = x.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(v.begin() + o * src_row + off, dst_row, y.begin() + o * dst_row);
  }
  NodePtr xn = x.node_ptr();
  return Finish("slice", out_shape, std::move(y), {&x},
                [xn, outer, src_row, dst_row, off](const Node& out) {
                  if (auto* g = GradOf(xn)) {
                    for (int64_t o = 0; o < outer; ++o) {
                      for (int64_t j = 0; j < dst_row; ++j) {
                        (*g)[o * src_row + off + j] += out.grad[o * dst_row + j];
                      }
                    }
                  }
                });
}

Tensor Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.numel()) {
    ShapeFail("reshape", ShapeToString(x.shape()) + " -> " + ShapeToString(shape));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  NodePtr xn = x.node_ptr();
  return Finish("reshape", std::move(shape), std::move(y), {&x}, [xn](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (size_t i = 0; i < out.grad.size(); ++i) (*g)[i] += out.grad[i];
    }
  });
}

Tensor EmbeddingLookup(const Tensor& table, std::span<const int64_t> ids) {
  if (table.rank() != 2) {
    ShapeFail("embedding_lookup", "table must be rank 2, got " + ShapeToString(table.shape()));
  }
  const int64_t vocab = table.dim(0), d = table.dim(1);
  std::vector<int64_t> idx(ids.begin(), ids.end());
  std::vector<double> y(idx.size() * d);
  auto tv = table.data();
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= vocab) {
      ShapeFail("embedding_lookup", "id " + std::to_string(idx[i]) +
                                        " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(tv.begin() + idx[i] * d, d, y.begin() + i * d);
  }
  NodePtr tn = table.node_ptr();
  const int64_t rows = static_cast<int64_t>(idx.size());
  return Finish("embedding_lookup", {rows, d}, std::move(y),
                {&table}, [tn, idx = std::move(idx), d](const Node& out) {
                  if (auto* g = GradOf(tn)) {
                    for (size_t i = 0; i < idx.size(); ++i) {
                      for (int64_t j = 0; j < d; ++j) (*g)[idx[i] * d + j] += out.grad[i * d + j];
                    }
                  }
                });
}

Tensor LogSoftmax(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) == 0) ShapeFail("log_softmax", "empty last axis");
  const int64_t c = x.dim(-1), rows = x.numel() / c;
  auto v = x.data();
  std::vector<double> y(v.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = v.data() + r * c;
    const double m = *std::max_element(in, in + c);
    double s = 0.0;
    for (int64_t j = 0; j < c; ++j) s += std::exp(in[j] - m);
    const double lse = m + std::log(s);
    for (int64_t j = 0; j < c; ++j) y[r * c + j] = in[j] - lse;
  }
  NodePtr xn = x.node_ptr();
  return Finish("log_softmax", x.shape(), std::move(y), {&x}, [xn, rows, c](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (int64_t r = 0; r < rows; ++r) {
        double gs = 0.0;
        for (int64_t j = 0; j < c; ++j) gs += out.grad[r * c + j];
        for (int64_t j = 0; j < c; ++j) {
          (*g)[r * c + j] += out.grad[r * c + j] - std::exp(out.value[r * c + j]) * gs;
        }
      }
    }
  });
}

Tensor Softmax(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) == 0) ShapeFail("softmax", "empty last axis");
  const int64_t c = x.dim(-1), rows = x.numel() / c;
  auto v = x.data();
  std::vector<double> y(v.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = v.data() + r * c;
    const double m = *std::max_element(in, in + c);
    double s = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      y[r * c + j] = std::exp(in[j] - m);
      s += y[r * c + j];
    }
    for (int64_t j = 0; j < c; ++j) y[r * c + j] /= s;
  }
  NodePtr xn = x.node_ptr();
  return Finish("softmax", x.shape(), std::move(y), {&x}, [xn, rows, c](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (int64_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (int64_t j = 0; j < c; ++j) dot += out.grad[r * c + j] * out.value[r * c + j];
        for (int64_t j = 0; j < c; ++j) {
          (*g)[r * c + j] += out.value[r * c + j] * (out.grad[r * c + j] - dot);
        }
      }
    }
  });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) ShapeFail("layer_norm", "scalar input");
  const int64_t c = x.dim(-1), rows = x.numel() / c;
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    ShapeFail("layer_norm", "gamma/beta " + ShapeToString(gamma.shape()) + "/" +
                                ShapeToString(beta.shape()) + " do not match last axis of " +
                                ShapeToString(x.shape()));
  }
  auto v = x.data();
  auto gv = gamma.data(), bv = beta.data();
  std::vector<double> y(v.size());
  std::vector<double> xhat(v.size());
  std::vector<double> inv_std(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = v.data() + r * c;
    double mean = 0.0;
    for (int64_t j = 0; j < c; ++j) mean += in[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < c; ++j) {
      xhat[r * c + j] = (in[j] - mean) * inv_std[r];
      y[r * c + j] = xhat[r * c + j] * gv[j] + bv[j];
    }
  }
  NodePtr xn = x.node_ptr(), gn = gamma.node_ptr(), bn = beta.node_ptr();
  return Finish("layer_norm", x.shape(), std::move(y), {&x, &gamma, &beta},
                [xn, gn, bn, rows, c, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](const Node& out) {
                  auto* gx = GradOf(xn);
                  auto* gg = GradOf(gn);
                  auto* gb = GradOf(bn);
                  std::vector<double> dxhat(c);
                  for (int64_t r = 0; r < rows; ++r) {
                    const double* g = out.grad.data() + r * c;
                    const double* xh = xhat.data() + r * c;
                    double mean_d = 0.0, mean_dx = 0.0;
                    for (int64_t j = 0; j < c; ++j) {
                      if (gg) (*gg)[j] += g[j] * xh[j];
                      if (gb) (*gb)[j] += g[j];
                      dxhat[j] = g[j] * gn->value[j];
                      mean_d += dxhat[j];
                      mean_dx += dxhat[j] * xh[j];
                    }
                    if (!gx) continue;
                    mean_d /= static_cast<double>(c);
                    mean_dx /= static_cast<double>(c);
                    for (int64_t j = 0; j < c; ++j) {
                      (*gx)[r * c + j] += inv_std[r] * (dxhat[j] - mean_d - xh[j] * mean_dx);
                    }
                  }
                });
}

Tensor Swish(const Tensor& x) {
  return Unary(
      "swish", x, [](double v) { return v * SigmoidScalar(v); },
      [](double v, double) {
        const double s = SigmoidScalar(v);
        return s + v * s * (1.0 - s);
      });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(
      "sigmoid", x, [](double v) { return SigmoidScalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Relu(const Tensor& x) {
  return Unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor DepthwiseConv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != x.dim(1) ||
      bias.shape() != Shape{x.dim(1)}) {
    ShapeFail("depthwise_conv1d", "x " + ShapeToString(x.shape()) + ", weight " +
                                      ShapeToString(weight.shape()) + ", bias " +
                                      ShapeToString(bias.shape()));
  }
  const int64_t t_len = x.dim(0), ch = x.dim(1), k = weight.dim(0);
  if (k % 2 == 0) ShapeFail("depthwise_conv1d", "kernel size must be odd, got " + std::to_string(k));
  const int64_t pad = (k - 1) / 2;
  auto xv = x.data(), wv = weight.data(), bv = bias.data();
  std::vector<double> y(t_len * ch);
  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t c = 0; c < ch; ++c) y[t * ch + c] = bv[c];
    for (int64_t j = 0; j < k; ++j) {
      const int64_t src = t + j - pad;
      if (src < 0 || src >= t_len) continue;
      for (int64_t c = 0; c < ch; ++c) y[t * ch + c] += wv[j * ch + c] * xv[src * ch + c];
    }
  }
  NodePtr xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  return Finish("depthwise_conv1d", {t_len, ch}, std::move(y), {&x, &weight, &bias},
                [xn, wn, bn, t_len, ch, k, pad](const Node& out) {
                  auto* gx = GradOf(xn);
                  auto* gw = GradOf(wn);
                  auto* gb = GradOf(bn);
                  for (int64_t t = 0; t < t_len; ++t) {
                    const double* g = out.grad.data() + t * ch;
                    if (gb) {
                      for (int64_t c = 0; c < ch; ++c) (*gb)[c] += g[c];
                    }
                    for (int64_t j = 0; j < k; ++j) {
                      const int64_t src = t + j - pad;
                      if (src < 0 || src >= t_len) continue;
                      for (int64_t c = 0; c < ch; ++c) {
                        if (gw) (*gw)[j * ch + c] += g[c] * xn->value[src * ch + c];
                        if (gx) (*gx)[src * ch + c] += g[c] * wn->value[j * ch + c];
                      }
                    }
                  }
                });
}

Tensor PointwiseConv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || bias.shape() != Shape{weight.dim(1)}) {
    ShapeFail("pointwise_conv1d", "weight " + ShapeToString(weight.shape()) + ", bias " +
                                      ShapeToString(bias.shape()));
  }
  return Add(MatMul(x, weight), bias);
}

Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride) {
  if (x.rank() != 3 || weight.rank() != 4 || weight.dim(1) != x.dim(0) ||
      bias.shape() != Shape{weight.dim(0)} || stride < 1) {
    ShapeFail("conv2d", "x " + ShapeToString(x.shape()) + ", weight " +
                            ShapeToString(weight.shape()) + ", bias " +
                            ShapeToString(bias.shape()) + ", stride " + std::to_string(stride));
  }
  const int64_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (h < kh || w < kw) {
    ShapeFail("conv2d", "input " + ShapeToString(x.shape()) + " smaller than kernel");
  }
  const int64_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
  const int64_t patch = cin * kh * kw, npos = oh * ow;
  // im2col: cols[pos, (ci, i, j)]
  std::vector<double> cols(npos * patch);
  auto xv = x.data();
  for (int64_t oy = 0; oy < oh; ++oy) {
    for (int64_t ox = 0; ox < ow; ++ox) {
      double* row = cols.data() + (oy * ow + ox) * patch;
      for (int64_t ci = 0; ci < cin; ++ci) {
        for (int64_t i = 0; i < kh; ++i) {
          const double* src = xv.data() + (ci * h + oy * stride + i) * w + ox * stride;
          for (int64_t j = 0; j < kw; ++j) *row++ = src[j];
        }
      }
    }
  }
  // out[co, pos] = W[co, patch] . cols[pos, patch]^T + b[co]
  std::vector<double> y(cout * npos);
  MutMap ym(y.data(), cout, npos);
  ym.noalias() = ConstMap(weight.data().data(), cout, patch) *
                 ConstMap(cols.data(), npos, patch).transpose();
  auto bv = bias.data();
  for (int64_t co = 0; co < cout; ++co) ym.row(co).array() += bv[co];
  NodePtr xn = x.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  return Finish(
      "conv2d", {cout, oh, ow}, std::move(y), {&x, &weight, &bias},
      [xn, wn, bn, cols = std::move(cols), cin, h, w, cout, kh, kw, oh, ow, patch, npos,
       stride](const Node& out) {
        ConstMap g(out.grad.data(), cout, npos);
        if (auto* gb = GradOf(bn)) {
          for (int64_t co = 0; co < cout; ++co) (*gb)[co] += g.row(co).sum();
        }
        if (auto* gw = GradOf(wn)) {
          MutMap(gw->data(), cout, patch).noalias() += g * ConstMap(cols.data(), npos, patch);
        }
        if (auto* gx = GradOf(xn)) {
          RowMat dcols = g.transpose() * ConstMap(wn->value.data(), cout, patch);
          for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
              const double* row = dcols.data() + (oy * ow + ox) * patch;
              for (int64_t ci = 0; ci < cin; ++ci) {
                for (int64_t i = 0; i < kh; ++i) {
                  double* dst = gx->data() + (ci * h + oy * stride + i) * w + ox * stride;
                  for (int64_t j = 0; j < kw; ++j) dst[j] += *row++;
                }
              }
            }
          }
        }
      });
}

Tensor DropoutMaskApply(const Tensor& x, const Tensor& mask) {
  if (mask.shape() != x.shape()) {
    ShapeFail("dropout_mask_apply", "mask " + ShapeToString(mask.shape()) +
                                        " does not match input " + ShapeToString(x.shape()));
  }
  if (mask.requires_grad()) ShapeFail("dropout_mask_apply", "mask must be a constant");
  auto xv = x.data(), mv = mask.data();
  std::vector<double> y(xv.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mv[i];
  NodePtr xn = x.node_ptr(), mn = mask.node_ptr();
  return Finish("dropout_mask_apply", x.shape(), std::move(y), {&x}, [xn, mn](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (size_t i = 0; i < out.grad.size(); ++i) (*g)[i] += out.grad[i] * mn->value[i];
    }
  });
}

Tensor MaskedFill(const Tensor& x, std::span<const uint8_t> mask, double value) {
  const size_t n = static_cast<size_t>(x.numel());
  if (mask.empty() || n % mask.size() != 0) {
    ShapeFail("masked_fill", "mask of " + std::to_string(mask.size()) +
                                 " entries cannot cover " + ShapeToString(x.shape()));
  }
  std::vector<uint8_t> m(mask.begin(), mask.end());
  auto xv = x.data();
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = m[i % m.size()] ? value : xv[i];
  NodePtr xn = x.node_ptr();
  return Finish("masked_fill", x.shape(), std::move(y), {&x},
                [xn, m = std::move(m)](const Node& out) {
                  if (auto* g = GradOf(xn)) {
                    for (size_t i = 0; i < out.grad.size(); ++i) {
                      if (!m[i % m.size()]) (*g)[i] += out.grad[i];
                    }
                  }
                });
}

Tensor Sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  NodePtr xn = x.node_ptr();
  return Finish("sum", {}, {s}, {&x}, [xn](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (double& v : *g) v += out.grad[0];
    }
  });
}

Tensor Mean(const Tensor& x) {
  if (x.numel() == 0) ShapeFail("mean", "empty input");
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  NodePtr xn = x.node_ptr();
  return Finish("mean", {}, {s / n}, {&x}, [xn, n](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (double& v : *g) v += out.grad[0] / n;
    }
  });
}

Tensor Gather(const Tensor& x, Shape out_shape, std::span<const int64_t> index, double fill) {
  if (NumElements(out_shape) != static_cast<int64_t>(index.size())) {
    ShapeFail("gather", "index count " + std::to_string(index.size()) +
                            " does not match output shape " + ShapeToString(out_shape));
  }
  const int64_t n = x.numel();
  std::vector<int64_t> idx(index.begin(), index.end());
  auto xv = x.data();
  std::vector<double> y(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) {
      ShapeFail("gather", "index " + std::to_string(idx[i]) + " outside input of " +
                              std::to_string(n) + " elements");
    }
    y[i] = idx[i] < 0 ? fill : xv[idx[i]];
  }
  NodePtr xn = x.node_ptr();
  return Finish("gather", std::move(out_shape), std::move(y), {&x},
                [xn, idx = std::move(idx)](const Node& out) {
                  if (auto* g = GradOf(xn)) {
                    for (size_t i = 0; i < idx.size(); ++i) {
                      if (idx[i] >= 0) (*g)[idx[i]] += out.grad[i];
                    }
                  }
                });
}

Tensor LogSumExpRows(const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) == 0) {
    ShapeFail("logsumexp_rows", "expects non-empty rank 2, got " + ShapeToString(x.shape()));
  }
  const int64_t rows = x.dim(0), c = x.dim(1);
  auto v = x.data();
  std::vector<double> y(c);
  for (int64_t j = 0; j < c; ++j) {
    double m = v[j];
    for (int64_t r = 1; r < rows; ++r) m = std::max(m, v[r * c + j]);
    double s = 0.0;
    for (int64_t r = 0; r < rows; ++r) s += std::exp(v[r * c + j] - m);
    y[j] = m + std::log(s);
  }
  NodePtr xn = x.node_ptr();
  return Finish("logsumexp_rows", {c}, std::move(y), {&x}, [xn, rows, c](const Node& out) {
    if (auto* g = GradOf(xn)) {
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t j = 0; j < c; ++j) {
          (*g)[r * c + j] += out.grad[j] * std::exp(xn->value[r * c + j] - out.value[j]);
        }
      }
    }
  });
}

}  // namespace dualasr::ops
