// Copyright (c) 2026 The BIP Authors
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

#include "tensor/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.h"

namespace bip {

int64_t NumElements(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string ShapeToString(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

namespace {

[[noreturn]] void ShapeError(const std::string& what) {
  Throw(ErrorCode::kUsage, "ShapeMismatch: " + what);
}

int LastDim(const Shape& s) { return s.empty() ? 1 : s.back(); }

int64_t RowCount(const Shape& s) {
  return s.empty() ? 1 : NumElements(s) / s.back();
}

// Matmul operand layout: batch count and per-matrix strides.
struct MatmulPlan {
  int batches;
  int m, k, n;
  bool a_batched, b_batched;
};

MatmulPlan PlanMatmul(const Shape& a, const Shape& b) {
  MatmulPlan p{};
  if (a.size() == 2 && b.size() == 2) {
    if (a[1] != b[0]) ShapeError("matmul " + ShapeToString(a) + " x " +
                                 ShapeToString(b));
    p = {1, a[0], a[1], b[1], false, false};
  } else if (a.size() == 3 && b.size() == 3) {
    if (a[0] != b[0] || a[2] != b[1])
      ShapeError("matmul " + ShapeToString(a) + " x " + ShapeToString(b));
    p = {a[0], a[1], a[2], b[2], true, true};
  } else if (a.size() == 3 && b.size() == 2) {
    if (a[2] != b[0])
      ShapeError("matmul " + ShapeToString(a) + " x " + ShapeToString(b));
    p = {a[0], a[1], a[2], b[1], true, false};
  } else {
    ShapeError("matmul ranks " + ShapeToString(a) + " x " + ShapeToString(b));
  }
  return p;
}

enum class AddMode { kSame, kBiasLast, kBroadcastRows };

AddMode PlanAdd(const Shape& a, const Shape& b) {
  if (a == b) return AddMode::kSame;
  if (b.size() == 1 && b[0] == LastDim(a)) return AddMode::kBiasLast;
  if (b.size() + 1 == a.size() &&
      std::equal(b.begin(), b.end(), a.begin() + 1))
    return AddMode::kBroadcastRows;
  ShapeError("add " + ShapeToString(a) + " + " + ShapeToString(b));
}

Shape InferShape(OpKind kind, const Attrs& attrs,
                 const std::vector<const Shape*>& in) {
  switch (kind) {
    case OpKind::kLeaf:
      Throw(ErrorCode::kUsage, "leaf has no inputs");
    case OpKind::kMatmul: {
      auto p = PlanMatmul(*in[0], *in[1]);
      return p.a_batched ? Shape{p.batches, p.m, p.n} : Shape{p.m, p.n};
    }
    case OpKind::kTransposeLast2: {
      Shape s = *in[0];
      if (s.size() < 2) ShapeError("transpose needs rank >= 2");
      std::swap(s[s.size() - 1], s[s.size() - 2]);
      return s;
    }
    case OpKind::kAdd:
      PlanAdd(*in[0], *in[1]);
      return *in[0];
    case OpKind::kMul:
      if (*in[0] != *in[1] && NumElements(*in[1]) != 1)
        ShapeError("mul " + ShapeToString(*in[0]) + " * " +
                   ShapeToString(*in[1]));
      return *in[0];
    case OpKind::kScale:
    case OpKind::kExp:
    case OpKind::kRelu:
    case OpKind::kSoftmax:
    case OpKind::kL2Normalize:
    case OpKind::kDetach:
      return *in[0];
    case OpKind::kLayerNorm: {
      int d = LastDim(*in[0]);
      if (in[1]->size() != 1 || (*in[1])[0] != d || *in[1] != *in[2])
        ShapeError("layer_norm gamma/beta must be [last_dim]");
      return *in[0];
    }
    case OpKind::kConv1d: {
      const Shape& x = *in[0];
      const Shape& w = *in[1];
      if (x.size() != 3 || w.size() != 3 || w[1] != x[2] || w[0] % 2 == 0)
        ShapeError("conv1d x " + ShapeToString(x) + " w " + ShapeToString(w));
      if (in[2]->size() != 1 || (*in[2])[0] != w[2])
        ShapeError("conv1d bias");
      return Shape{x[0], x[1], w[2]};
    }
    case OpKind::kEmbedding: {
      if (in[0]->size() != 2) ShapeError("embedding table must be rank 2");
      if (NumElements(attrs.shape) != static_cast<int64_t>(attrs.ids.size()))
        ShapeError("embedding id shape mismatch");
      for (int id : attrs.ids)
        if (id < 0 || id >= (*in[0])[0])
          Throw(ErrorCode::kData, "UnknownToken: embedding id out of range");
      Shape s = attrs.shape;
      s.push_back((*in[0])[1]);
      return s;
    }
    case OpKind::kMeanPool: {
      const Shape& x = *in[0];
      if (x.size() != 3) ShapeError("mean_pool needs rank 3");
      if (!attrs.mask.empty() &&
          attrs.mask.size() != static_cast<size_t>(x[0]) * x[1])
        Throw(ErrorCode::kUsage, "MaskMismatch: mean_pool mask size");
      return Shape{x[0], x[2]};
    }
    case OpKind::kReshape:
      if (NumElements(attrs.shape) != NumElements(*in[0]))
        ShapeError("reshape " + ShapeToString(*in[0]) + " -> " +
                   ShapeToString(attrs.shape));
      return attrs.shape;
    case OpKind::kConcat: {
      Shape s = *in[0];
      int axis = attrs.axis;
      if (axis < 0 || axis >= static_cast<int>(s.size()))
        ShapeError("concat axis");
      for (size_t i = 1; i < in.size(); ++i) {
        Shape o = *in[i];
        if (o.size() != s.size()) ShapeError("concat ranks");
        for (size_t d = 0; d < s.size(); ++d)
          if (d != static_cast<size_t>(axis) && o[d] != s[d])
            ShapeError("concat dims");
        s[axis] += o[axis];
      }
      return s;
    }
    case OpKind::kSlice: {
      Shape s = *in[0];
      if (attrs.axis < 0 || attrs.axis >= static_cast<int>(s.size()) ||
          attrs.start < 0 || attrs.len <= 0 ||
          attrs.start + attrs.len > s[attrs.axis])
        ShapeError("slice bounds");
      s[attrs.axis] = attrs.len;
      return s;
    }
    case OpKind::kMse:
    case OpKind::kMae:
      if (*in[0] != *in[1])
        ShapeError("loss operands " + ShapeToString(*in[0]) + " vs " +
                   ShapeToString(*in[1]));
      if (NumElements(*in[0]) == 0)
        Throw(ErrorCode::kUsage, "EmptyInput: loss over empty tensors");
      return Shape{1};
    case OpKind::kCrossEntropy: {
      if (in[0]->size() != 2) ShapeError("cross_entropy logits rank");
      if (attrs.labels.size() != static_cast<size_t>((*in[0])[0]))
        ShapeError("cross_entropy label count");
      for (int l : attrs.labels)
        if (l < 0 || l >= (*in[0])[1]) ShapeError("cross_entropy label range");
      return Shape{1};
    }
    case OpKind::kMaskedSelect: {
      if (attrs.mask.size() != static_cast<size_t>(NumElements(*in[0])))
        Throw(ErrorCode::kUsage, "MaskMismatch: masked_select mask size");
      int n = 0;
      for (uint8_t m : attrs.mask) n += m ? 1 : 0;
      if (n == 0) Throw(ErrorCode::kUsage, "MaskMismatch: empty selection");
      return Shape{n};
    }
    case OpKind::kSum:
      return Shape{1};
    case OpKind::kRepeatRows: {
      if (in[0]->size() != 2) ShapeError("repeat_rows needs rank 2");
      if (attrs.counts.size() != static_cast<size_t>((*in[0])[0]))
        ShapeError("repeat_rows counts");
      int64_t total = 0;
      for (int c : attrs.counts) {
        if (c < 0) ShapeError("repeat_rows negative count");
        total += c;
      }
      if (total == 0)
        Throw(ErrorCode::kUsage, "AllZeroDurations: nothing to expand");
      return Shape{static_cast<int>(total), (*in[0])[1]};
    }
  }
  Throw(ErrorCode::kUsage, "UnknownOp");
}

constexpr double kLayerNormEps = 1e-5;
constexpr double kNormalizeEps = 1e-12;

// Forward kernels, shared between the f32 tape and the f64 shadow
// evaluation. Reductions accumulate in double either way.
template <typename T>
void ForwardOp(OpKind kind, const Attrs& attrs,
               const std::vector<const Shape*>& shapes,
               const std::vector<const std::vector<T>*>& in,
               const Shape& out_shape, std::vector<T>* out) {
  out->assign(NumElements(out_shape), T(0));
  switch (kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kMatmul: {
      auto p = PlanMatmul(*shapes[0], *shapes[1]);
      const auto& a = *in[0];
      const auto& b = *in[1];
      std::vector<double> acc(p.n);
      for (int bt = 0; bt < p.batches; ++bt) {
        const int64_t ao = p.a_batched ? int64_t(bt) * p.m * p.k : 0;
        const int64_t bo = p.b_batched ? int64_t(bt) * p.k * p.n : 0;
        const int64_t co = int64_t(bt) * p.m * p.n;
        for (int i = 0; i < p.m; ++i) {
          std::fill(acc.begin(), acc.end(), 0.0);
          for (int k = 0; k < p.k; ++k) {
            const double av = a[ao + int64_t(i) * p.k + k];
            const T* brow = b.data() + bo + int64_t(k) * p.n;
            for (int j = 0; j < p.n; ++j) acc[j] += av * double(brow[j]);
          }
          for (int j = 0; j < p.n; ++j)
            (*out)[co + int64_t(i) * p.n + j] = T(acc[j]);
        }
      }
      break;
    }
    case OpKind::kTransposeLast2: {
      const Shape& s = *shapes[0];
      const int m = s[s.size() - 2], n = s[s.size() - 1];
      const int64_t mats = NumElements(s) / (int64_t(m) * n);
      for (int64_t t = 0; t < mats; ++t)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            (*out)[t * m * n + int64_t(j) * m + i] =
                (*in[0])[t * m * n + int64_t(i) * n + j];
      break;
    }
    case OpKind::kAdd: {
      const auto mode = PlanAdd(*shapes[0], *shapes[1]);
      const auto& a = *in[0];
      const auto& b = *in[1];
      if (mode == AddMode::kSame) {
        for (size_t i = 0; i < a.size(); ++i) (*out)[i] = a[i] + b[i];
      } else if (mode == AddMode::kBiasLast) {
        const size_t d = b.size();
        for (size_t i = 0; i < a.size(); ++i) (*out)[i] = a[i] + b[i % d];
      } else {
        const size_t block = b.size();
        for (size_t i = 0; i < a.size(); ++i) (*out)[i] = a[i] + b[i % block];
      }
      break;
    }
    case OpKind::kMul: {
      const auto& a = *in[0];
      const auto& b = *in[1];
      if (b.size() == 1) {
        for (size_t i = 0; i < a.size(); ++i) (*out)[i] = a[i] * b[0];
      } else {
        for (size_t i = 0; i < a.size(); ++i) (*out)[i] = a[i] * b[i];
      }
      break;
    }
    case OpKind::kScale:
      for (size_t i = 0; i < in[0]->size(); ++i)
        (*out)[i] = T(attrs.scalar) * (*in[0])[i];
      break;
    case OpKind::kExp:
      for (size_t i = 0; i < in[0]->size(); ++i)
        (*out)[i] = std::exp((*in[0])[i]);
      break;
    case OpKind::kRelu:
      for (size_t i = 0; i < in[0]->size(); ++i)
        (*out)[i] = (*in[0])[i] > T(0) ? (*in[0])[i] : T(0);
      break;
    case OpKind::kSoftmax: {
      const int d = LastDim(*shapes[0]);
      const int64_t rows = RowCount(*shapes[0]);
      for (int64_t r = 0; r < rows; ++r) {
        const T* x = in[0]->data() + r * d;
        T* y = out->data() + r * d;
        double mx = x[0];
        for (int i = 1; i < d; ++i) mx = std::max(mx, double(x[i]));
        double sum = 0;
        for (int i = 0; i < d; ++i) sum += std::exp(double(x[i]) - mx);
        for (int i = 0; i < d; ++i)
          y[i] = T(std::exp(double(x[i]) - mx) / sum);
      }
      break;
    }
    case OpKind::kLayerNorm: {
      const int d = LastDim(*shapes[0]);
      const int64_t rows = RowCount(*shapes[0]);
      const auto& g = *in[1];
      const auto& b = *in[2];
      for (int64_t r = 0; r < rows; ++r) {
        const T* x = in[0]->data() + r * d;
        T* y = out->data() + r * d;
        double mean = 0;
        for (int i = 0; i < d; ++i) mean += x[i];
        mean /= d;
        double var = 0;
        for (int i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (int i = 0; i < d; ++i)
          y[i] = T((double(x[i]) - mean) * inv * double(g[i]) + double(b[i]));
      }
      break;
    }
    case OpKind::kConv1d: {
      const Shape& xs = *shapes[0];
      const Shape& ws = *shapes[1];
      const int bsz = xs[0], tlen = xs[1], cin = xs[2];
      const int k = ws[0], f = ws[2];
      const int pad = (k - 1) / 2;
      const auto& x = *in[0];
      const auto& w = *in[1];
      const auto& bias = *in[2];
      std::vector<double> acc(f);
      for (int bi = 0; bi < bsz; ++bi)
        for (int t = 0; t < tlen; ++t) {
          for (int j = 0; j < f; ++j) acc[j] = bias[j];
          for (int kk = 0; kk < k; ++kk) {
            const int tt = t + kk - pad;
            if (tt < 0 || tt >= tlen) continue;
            const T* xrow = x.data() + (int64_t(bi) * tlen + tt) * cin;
            const T* wrow = w.data() + int64_t(kk) * cin * f;
            for (int c = 0; c < cin; ++c) {
              const double xv = xrow[c];
              for (int j = 0; j < f; ++j) acc[j] += xv * double(wrow[c * f + j]);
            }
          }
          T* orow = out->data() + (int64_t(bi) * tlen + t) * f;
          for (int j = 0; j < f; ++j) orow[j] = T(acc[j]);
        }
      break;
    }
    case OpKind::kEmbedding: {
      const int d = (*shapes[0])[1];
      for (size_t i = 0; i < attrs.ids.size(); ++i)
        std::copy_n(in[0]->data() + int64_t(attrs.ids[i]) * d, d,
                    out->data() + i * d);
      break;
    }
    case OpKind::kMeanPool: {
      const Shape& xs = *shapes[0];
      const int bsz = xs[0], tlen = xs[1], d = xs[2];
      std::vector<double> acc(d);
      for (int bi = 0; bi < bsz; ++bi) {
        std::fill(acc.begin(), acc.end(), 0.0);
        int count = 0;
        for (int t = 0; t < tlen; ++t) {
          if (!attrs.mask.empty() && !attrs.mask[bi * tlen + t]) continue;
          const T* row = in[0]->data() + (int64_t(bi) * tlen + t) * d;
          for (int j = 0; j < d; ++j) acc[j] += row[j];
          ++count;
        }
        if (count == 0)
          Throw(ErrorCode::kUsage, "MaskMismatch: all-pad row in mean_pool");
        for (int j = 0; j < d; ++j) (*out)[int64_t(bi) * d + j] = T(acc[j] / count);
      }
      break;
    }
    case OpKind::kReshape:
    case OpKind::kDetach:
      *out = *in[0];
      break;
    case OpKind::kConcat: {
      const int axis = attrs.axis;
      const Shape& s0 = *shapes[0];
      int64_t outer = 1;
      for (int d = 0; d < axis; ++d) outer *= s0[d];
      int64_t inner = 1;
      for (size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
      int64_t out_block = NumElements(out_shape) / outer;
      int64_t off = 0;
      for (size_t ii = 0; ii < in.size(); ++ii) {
        const int64_t block = (*shapes[ii])[axis] * inner;
        for (int64_t o = 0; o < outer; ++o)
          std::copy_n(in[ii]->data() + o * block, block,
                      out->data() + o * out_block + off);
        off += block;
      }
      break;
    }
    case OpKind::kSlice: {
      const Shape& s = *shapes[0];
      int64_t outer = 1;
      for (int d = 0; d < attrs.axis; ++d) outer *= s[d];
      int64_t inner = 1;
      for (size_t d = attrs.axis + 1; d < s.size(); ++d) inner *= s[d];
      const int64_t in_block = s[attrs.axis] * inner;
      const int64_t out_block = attrs.len * inner;
      for (int64_t o = 0; o < outer; ++o)
        std::copy_n(in[0]->data() + o * in_block + attrs.start * inner,
                    out_block, out->data() + o * out_block);
      break;
    }
    case OpKind::kMse: {
      double acc = 0;
      for (size_t i = 0; i < in[0]->size(); ++i) {
        const double d = double((*in[0])[i]) - double((*in[1])[i]);
        acc += d * d;
      }
      (*out)[0] = T(acc / in[0]->size());
      break;
    }
    case OpKind::kMae: {
      double acc = 0;
      for (size_t i = 0; i < in[0]->size(); ++i)
        acc += std::abs(double((*in[0])[i]) - double((*in[1])[i]));
      (*out)[0] = T(acc / in[0]->size());
      break;
    }
    case OpKind::kCrossEntropy: {
      const int bsz = (*shapes[0])[0], c = (*shapes[0])[1];
      double acc = 0;
      for (int i = 0; i < bsz; ++i) {
        const T* row = in[0]->data() + int64_t(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, double(row[j]));
        double sum = 0;
        for (int j = 0; j < c; ++j) sum += std::exp(double(row[j]) - mx);
        acc += mx + std::log(sum) - double(row[attrs.labels[i]]);
      }
      (*out)[0] = T(acc / bsz);
      break;
    }
    case OpKind::kMaskedSelect: {
      int64_t n = 0;
      for (size_t i = 0; i < attrs.mask.size(); ++i)
        if (attrs.mask[i]) (*out)[n++] = (*in[0])[i];
      break;
    }
    case OpKind::kL2Normalize: {
      const int d = LastDim(*shapes[0]);
      const int64_t rows = RowCount(*shapes[0]);
      for (int64_t r = 0; r < rows; ++r) {
        const T* x = in[0]->data() + r * d;
        double norm = 0;
        for (int i = 0; i < d; ++i) norm += double(x[i]) * double(x[i]);
        norm = std::max(std::sqrt(norm), kNormalizeEps);
        for (int i = 0; i < d; ++i) (*out)[r * d + i] = T(x[i] / norm);
      }
      break;
    }
    case OpKind::kSum: {
      double acc = 0;
      for (T v : *in[0]) acc += v;
      (*out)[0] = T(acc);
      break;
    }
    case OpKind::kRepeatRows: {
      const int d = (*shapes[0])[1];
      int64_t row = 0;
      for (size_t t = 0; t < attrs.counts.size(); ++t)
        for (int c = 0; c < attrs.counts[t]; ++c) {
          std::copy_n(in[0]->data() + t * d, d, out->data() + row * d);
          ++row;
        }
      break;
    }
  }
}

}  // namespace

TRef Graph::Leaf(const Shape& shape, std::vector<float> data,
                 bool requires_grad) {
  if (NumElements(shape) != static_cast<int64_t>(data.size()))
    ShapeError("leaf data size vs " + ShapeToString(shape));
  Node n;
  n.kind = OpKind::kLeaf;
  n.shape = shape;
  n.value = std::move(data);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, size() - 1};
}

TRef Graph::Zeros(const Shape& shape) {
  return Leaf(shape, std::vector<float>(NumElements(shape), 0.0f));
}

TRef Graph::Apply(OpKind kind, const std::vector<TRef>& inputs, Attrs attrs) {
  Node n;
  n.kind = kind;
  n.attrs = std::move(attrs);
  std::vector<const Shape*> shapes;
  std::vector<const std::vector<float>*> values;
  for (const TRef& t : inputs) {
    BIP_CHECK(t.graph == this && t.id >= 0 && t.id < size())
        << "input from wrong graph";
    n.inputs.push_back(t.id);
    shapes.push_back(&nodes_[t.id].shape);
    values.push_back(&nodes_[t.id].value);
    if (nodes_[t.id].requires_grad) n.requires_grad = true;
  }
  if (kind == OpKind::kDetach) n.requires_grad = false;
  n.shape = InferShape(kind, n.attrs, shapes);
  ForwardOp<float>(kind, n.attrs, shapes, values, n.shape, &n.value);
  nodes_.push_back(std::move(n));
  return {this, size() - 1};
}

TRef Graph::Embedding(TRef table, const std::vector<int>& ids,
                      const Shape& id_shape) {
  Attrs at;
  at.ids = ids;
  at.shape = id_shape;
  return Apply(OpKind::kEmbedding, {table}, at);
}

TRef Graph::MeanPool(TRef x, std::vector<uint8_t> mask) {
  Attrs at;
  at.mask = std::move(mask);
  return Apply(OpKind::kMeanPool, {x}, at);
}

TRef Graph::Reshape(TRef a, const Shape& shape) {
  Attrs at;
  at.shape = shape;
  return Apply(OpKind::kReshape, {a}, at);
}

TRef Graph::Concat(const std::vector<TRef>& xs, int axis) {
  Attrs at;
  at.axis = axis;
  return Apply(OpKind::kConcat, xs, at);
}

TRef Graph::Slice(TRef a, int axis, int start, int len) {
  Attrs at;
  at.axis = axis;
  at.start = start;
  at.len = len;
  return Apply(OpKind::kSlice, {a}, at);
}

TRef Graph::CrossEntropy(TRef logits, const std::vector<int>& labels) {
  Attrs at;
  at.labels = labels;
  return Apply(OpKind::kCrossEntropy, {logits}, at);
}

TRef Graph::MaskedSelect(TRef a, std::vector<uint8_t> mask) {
  Attrs at;
  at.mask = std::move(mask);
  return Apply(OpKind::kMaskedSelect, {a}, at);
}

TRef Graph::RepeatRows(TRef a, std::vector<int> counts) {
  Attrs at;
  at.counts = std::move(counts);
  return Apply(OpKind::kRepeatRows, {a}, at);
}

float Graph::scalar(TRef t) const {
  BIP_CHECK(NumElements(nodes_[t.id].shape) == 1) << "not a scalar";
  return nodes_[t.id].value[0];
}

void Graph::Backward(TRef loss) {
  BIP_CHECK(loss.graph == this) << "loss from wrong graph";
  Node& ln = nodes_[loss.id];
  if (NumElements(ln.shape) != 1)
    Throw(ErrorCode::kUsage, "NotScalarLoss: shape " + ShapeToString(ln.shape));

  for (Node& n : nodes_) {
    if (n.requires_grad)
      n.grad.assign(n.value.size(), 0.0f);
    else
      n.grad.clear();
  }
  if (ln.grad.empty()) ln.grad.assign(1, 0.0f);
  ln.grad[0] = 1.0f;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.kind == OpKind::kLeaf || n.kind == OpKind::kDetach) continue;
    if (!n.requires_grad || n.grad.empty()) continue;
    bool any = false;
    for (float g : n.grad)
      if (g != 0.0f) {
        any = true;
        break;
      }
    if (!any) continue;

    auto gin = [&](int k) -> std::vector<float>* {
      Node& src = nodes_[n.inputs[k]];
      if (!src.requires_grad) return nullptr;
      if (src.grad.empty()) src.grad.assign(src.value.size(), 0.0f);
      return &src.grad;
    };
    auto vin = [&](int k) -> const std::vector<float>& {
      return nodes_[n.inputs[k]].value;
    };
    auto sin = [&](int k) -> const Shape& { return nodes_[n.inputs[k]].shape; };
    const std::vector<float>& gout = n.grad;

    switch (n.kind) {
      case OpKind::kMatmul: {
        auto p = PlanMatmul(sin(0), sin(1));
        auto* ga = gin(0);
        auto* gb = gin(1);
        const auto& a = vin(0);
        const auto& b = vin(1);
        for (int bt = 0; bt < p.batches; ++bt) {
          const int64_t ao = p.a_batched ? int64_t(bt) * p.m * p.k : 0;
          const int64_t bo = p.b_batched ? int64_t(bt) * p.k * p.n : 0;
          const int64_t co = int64_t(bt) * p.m * p.n;
          if (ga) {
            for (int i = 0; i < p.m; ++i)
              for (int k = 0; k < p.k; ++k) {
                double acc = 0;
                const float* grow = gout.data() + co + int64_t(i) * p.n;
                const float* brow = b.data() + bo + int64_t(k) * p.n;
                for (int j = 0; j < p.n; ++j) acc += double(grow[j]) * brow[j];
                (*ga)[ao + int64_t(i) * p.k + k] += float(acc);
              }
          }
          if (gb) {
            for (int k = 0; k < p.k; ++k) {
              float* gbrow = gb->data() + bo + int64_t(k) * p.n;
              for (int i = 0; i < p.m; ++i) {
                const double av = a[ao + int64_t(i) * p.k + k];
                const float* grow = gout.data() + co + int64_t(i) * p.n;
                for (int j = 0; j < p.n; ++j)
                  gbrow[j] += float(av * double(grow[j]));
              }
            }
          }
        }
        break;
      }
      case OpKind::kTransposeLast2: {
        auto* ga = gin(0);
        if (!ga) break;
        const Shape& s = sin(0);
        const int m = s[s.size() - 2], nn = s[s.size() - 1];
        const int64_t mats = NumElements(s) / (int64_t(m) * nn);
        for (int64_t t = 0; t < mats; ++t)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < nn; ++j)
              (*ga)[t * m * nn + int64_t(i) * nn + j] +=
                  gout[t * m * nn + int64_t(j) * m + i];
        break;
      }
      case OpKind::kAdd: {
        auto mode = PlanAdd(sin(0), sin(1));
        if (auto* ga = gin(0))
          for (size_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i];
        if (auto* gb = gin(1)) {
          if (mode == AddMode::kSame) {
            for (size_t i = 0; i < gout.size(); ++i) (*gb)[i] += gout[i];
          } else {
            const size_t block = gb->size();
            for (size_t i = 0; i < gout.size(); ++i)
              (*gb)[i % block] += gout[i];
          }
        }
        break;
      }
      case OpKind::kMul: {
        const auto& a = vin(0);
        const auto& b = vin(1);
        if (b.size() == 1) {
          if (auto* ga = gin(0))
            for (size_t i = 0; i < gout.size(); ++i)
              (*ga)[i] += gout[i] * b[0];
          if (auto* gb = gin(1)) {
            double acc = 0;
            for (size_t i = 0; i < gout.size(); ++i)
              acc += double(gout[i]) * a[i];
            (*gb)[0] += float(acc);
          }
        } else {
          if (auto* ga = gin(0))
            for (size_t i = 0; i < gout.size(); ++i)
              (*ga)[i] += gout[i] * b[i];
          if (auto* gb = gin(1))
            for (size_t i = 0; i < gout.size(); ++i)
              (*gb)[i] += gout[i] * a[i];
        }
        break;
      }
      case OpKind::kScale:
        if (auto* ga = gin(0))
          for (size_t i = 0; i < gout.size(); ++i)
            (*ga)[i] += float(n.attrs.scalar) * gout[i];
        break;
      case OpKind::kExp:
        if (auto* ga = gin(0))
          for (size_t i = 0; i < gout.size(); ++i)
            (*ga)[i] += gout[i] * n.value[i];
        break;
      case OpKind::kRelu:
        if (auto* ga = gin(0)) {
          const auto& x = vin(0);
          for (size_t i = 0; i < gout.size(); ++i)
            if (x[i] > 0) (*ga)[i] += gout[i];
        }
        break;
      case OpKind::kSoftmax: {
        auto* ga = gin(0);
        if (!ga) break;
        const int d = LastDim(sin(0));
        const int64_t rows = RowCount(sin(0));
        for (int64_t r = 0; r < rows; ++r) {
          const float* y = n.value.data() + r * d;
          const float* dy = gout.data() + r * d;
          double dot = 0;
          for (int i = 0; i < d; ++i) dot += double(dy[i]) * y[i];
          for (int i = 0; i < d; ++i)
            (*ga)[r * d + i] += float(y[i] * (double(dy[i]) - dot));
        }
        break;
      }
      case OpKind::kLayerNorm: {
        const int d = LastDim(sin(0));
        const int64_t rows = RowCount(sin(0));
        const auto& x = vin(0);
        const auto& g = vin(1);
        auto* gx = gin(0);
        auto* gg = gin(1);
        auto* gb = gin(2);
        for (int64_t r = 0; r < rows; ++r) {
          const float* xr = x.data() + r * d;
          const float* dy = gout.data() + r * d;
          double mean = 0;
          for (int i = 0; i < d; ++i) mean += xr[i];
          mean /= d;
          double var = 0;
          for (int i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
          var /= d;
          const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
          double sum_dg = 0, sum_dgx = 0;
          for (int i = 0; i < d; ++i) {
            const double xhat = (xr[i] - mean) * inv;
            const double dg = double(dy[i]) * g[i];
            sum_dg += dg;
            sum_dgx += dg * xhat;
            if (gg) (*gg)[i] += float(double(dy[i]) * xhat);
            if (gb) (*gb)[i] += dy[i];
          }
          if (gx)
            for (int i = 0; i < d; ++i) {
              const double xhat = (xr[i] - mean) * inv;
              const double dg = double(dy[i]) * g[i];
              (*gx)[r * d + i] +=
                  float(inv * (dg - sum_dg / d - xhat * sum_dgx / d));
            }
        }
        break;
      }
      case OpKind::kConv1d: {
        const Shape& xs = sin(0);
        const Shape& ws = sin(1);
        const int bsz = xs[0], tlen = xs[1], cin = xs[2];
        const int k = ws[0], f = ws[2];
        const int pad = (k - 1) / 2;
        const auto& x = vin(0);
        const auto& w = vin(1);
        auto* gx = gin(0);
        auto* gw = gin(1);
        auto* gb = gin(2);
        for (int bi = 0; bi < bsz; ++bi)
          for (int t = 0; t < tlen; ++t) {
            const float* grow = gout.data() + (int64_t(bi) * tlen + t) * f;
            if (gb)
              for (int j = 0; j < f; ++j) (*gb)[j] += grow[j];
            for (int kk = 0; kk < k; ++kk) {
              const int tt = t + kk - pad;
              if (tt < 0 || tt >= tlen) continue;
              const int64_t xoff = (int64_t(bi) * tlen + tt) * cin;
              for (int c = 0; c < cin; ++c) {
                const int64_t woff = (int64_t(kk) * cin + c) * f;
                if (gx) {
                  double acc = 0;
                  for (int j = 0; j < f; ++j)
                    acc += double(grow[j]) * w[woff + j];
                  (*gx)[xoff + c] += float(acc);
                }
                if (gw) {
                  const double xv = x[xoff + c];
                  for (int j = 0; j < f; ++j)
                    (*gw)[woff + j] += float(xv * double(grow[j]));
                }
              }
            }
          }
        break;
      }
      case OpKind::kEmbedding: {
        auto* gt = gin(0);
        if (!gt) break;
        const int d = sin(0)[1];
        for (size_t i = 0; i < n.attrs.ids.size(); ++i) {
          float* row = gt->data() + int64_t(n.attrs.ids[i]) * d;
          const float* grow = gout.data() + i * d;
          for (int j = 0; j < d; ++j) row[j] += grow[j];
        }
        break;
      }
      case OpKind::kMeanPool: {
        auto* gx = gin(0);
        if (!gx) break;
        const Shape& xs = sin(0);
        const int bsz = xs[0], tlen = xs[1], d = xs[2];
        for (int bi = 0; bi < bsz; ++bi) {
          int count = 0;
          for (int t = 0; t < tlen; ++t)
            if (n.attrs.mask.empty() || n.attrs.mask[bi * tlen + t]) ++count;
          const float* grow = gout.data() + int64_t(bi) * d;
          for (int t = 0; t < tlen; ++t) {
            if (!n.attrs.mask.empty() && !n.attrs.mask[bi * tlen + t]) continue;
            float* xrow = gx->data() + (int64_t(bi) * tlen + t) * d;
            for (int j = 0; j < d; ++j) xrow[j] += grow[j] / count;
          }
        }
        break;
      }
      case OpKind::kReshape:
        if (auto* ga = gin(0))
          for (size_t i = 0; i < gout.size(); ++i) (*ga)[i] += gout[i];
        break;
      case OpKind::kConcat: {
        const int axis = n.attrs.axis;
        const Shape& s0 = sin(0);
        int64_t outer = 1;
        for (int d = 0; d < axis; ++d) outer *= s0[d];
        int64_t inner = 1;
        for (size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
        const int64_t out_block = NumElements(n.shape) / outer;
        int64_t off = 0;
        for (size_t ii = 0; ii < n.inputs.size(); ++ii) {
          const int64_t block = sin(ii)[axis] * inner;
          if (auto* ga = gin(ii))
            for (int64_t o = 0; o < outer; ++o)
              for (int64_t j = 0; j < block; ++j)
                (*ga)[o * block + j] += gout[o * out_block + off + j];
          off += block;
        }
        break;
      }
      case OpKind::kSlice: {
        auto* ga = gin(0);
        if (!ga) break;
        const Shape& s = sin(0);
        int64_t outer = 1;
        for (int d = 0; d < n.attrs.axis; ++d) outer *= s[d];
        int64_t inner = 1;
        for (size_t d = n.attrs.axis + 1; d < s.size(); ++d) inner *= s[d];
        const int64_t in_block = s[n.attrs.axis] * inner;
        const int64_t out_block = n.attrs.len * inner;
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t j = 0; j < out_block; ++j)
            (*ga)[o * in_block + n.attrs.start * inner + j] +=
                gout[o * out_block + j];
        break;
      }
      case OpKind::kMse: {
        const auto& a = vin(0);
        const auto& b = vin(1);
        const float g0 = gout[0];
        const double scale = 2.0 / a.size();
        auto* ga = gin(0);
        auto* gb = gin(1);
        for (size_t i = 0; i < a.size(); ++i) {
          const float g = float(scale * (double(a[i]) - b[i]) * g0);
          if (ga) (*ga)[i] += g;
          if (gb) (*gb)[i] -= g;
        }
        break;
      }
      case OpKind::kMae: {
        const auto& a = vin(0);
        const auto& b = vin(1);
        const float g0 = gout[0];
        const double scale = 1.0 / a.size();
        auto* ga = gin(0);
        auto* gb = gin(1);
        for (size_t i = 0; i < a.size(); ++i) {
          const double d = double(a[i]) - b[i];
          const float g = float(scale * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * g0);
          if (ga) (*ga)[i] += g;
          if (gb) (*gb)[i] -= g;
        }
        break;
      }
      case OpKind::kCrossEntropy: {
        auto* ga = gin(0);
        if (!ga) break;
        const int bsz = sin(0)[0], c = sin(0)[1];
        const auto& x = vin(0);
        const float g0 = gout[0];
        for (int i = 0; i < bsz; ++i) {
          const float* row = x.data() + int64_t(i) * c;
          double mx = row[0];
          for (int j = 1; j < c; ++j) mx = std::max(mx, double(row[j]));
          double sum = 0;
          for (int j = 0; j < c; ++j) sum += std::exp(double(row[j]) - mx);
          for (int j = 0; j < c; ++j) {
            double p = std::exp(double(row[j]) - mx) / sum;
            if (j == n.attrs.labels[i]) p -= 1.0;
            (*ga)[int64_t(i) * c + j] += float(p / bsz * g0);
          }
        }
        break;
      }
      case OpKind::kMaskedSelect: {
        auto* ga = gin(0);
        if (!ga) break;
        int64_t k = 0;
        for (size_t i = 0; i < n.attrs.mask.size(); ++i)
          if (n.attrs.mask[i]) (*ga)[i] += gout[k++];
        break;
      }
      case OpKind::kL2Normalize: {
        auto* ga = gin(0);
        if (!ga) break;
        const int d = LastDim(sin(0));
        const int64_t rows = RowCount(sin(0));
        const auto& x = vin(0);
        for (int64_t r = 0; r < rows; ++r) {
          const float* xr = x.data() + r * d;
          const float* y = n.value.data() + r * d;
          const float* dy = gout.data() + r * d;
          double norm = 0;
          for (int i = 0; i < d; ++i) norm += double(xr[i]) * xr[i];
          norm = std::max(std::sqrt(norm), kNormalizeEps);
          double dot = 0;
          for (int i = 0; i < d; ++i) dot += double(dy[i]) * y[i];
          for (int i = 0; i < d; ++i)
            (*ga)[r * d + i] += float((double(dy[i]) - dot * y[i]) / norm);
        }
        break;
      }
      case OpKind::kSum:
        if (auto* ga = gin(0))
          for (size_t i = 0; i < ga->size(); ++i) (*ga)[i] += gout[0];
        break;
      case OpKind::kRepeatRows: {
        auto* ga = gin(0);
        if (!ga) break;
        const int d = sin(0)[1];
        int64_t row = 0;
        for (size_t t = 0; t < n.attrs.counts.size(); ++t)
          for (int c = 0; c < n.attrs.counts[t]; ++c) {
            const float* grow = gout.data() + (row++) * d;
            for (int j = 0; j < d; ++j) (*ga)[t * d + j] += grow[j];
          }
        break;
      }
      case OpKind::kLeaf:
      case OpKind::kDetach:
        break;
    }
  }
}

std::vector<double> Graph::EvalShadow(TRef target, int leaf, int elem,
                                      double delta) const {
  BIP_CHECK(target.graph == this);
  // Restrict the sweep to ancestors of the target.
  std::vector<char> needed(nodes_.size(), 0);
  std::vector<int> stack{target.id};
  needed[target.id] = 1;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    for (int in : nodes_[id].inputs)
      if (!needed[in]) {
        needed[in] = 1;
        stack.push_back(in);
      }
  }
  std::vector<std::vector<double>> memo(nodes_.size());
  for (int id = 0; id <= target.id; ++id) {
    if (!needed[id]) continue;
    const Node& n = nodes_[id];
    if (n.kind == OpKind::kLeaf) {
      memo[id].assign(n.value.begin(), n.value.end());
      if (id == leaf) memo[id][elem] += delta;
      continue;
    }
    std::vector<const Shape*> shapes;
    std::vector<const std::vector<double>*> values;
    for (int in : n.inputs) {
      shapes.push_back(&nodes_[in].shape);
      values.push_back(&memo[in]);
    }
    ForwardOp<double>(n.kind, n.attrs, shapes, values, n.shape, &memo[id]);
  }
  return memo[target.id];
}

}  // namespace bip
