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

#ifndef BIP_TENSOR_TENSOR_H_
#define BIP_TENSOR_TENSOR_H_

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace bip {

using Shape = std::vector<int>;

int64_t NumElements(const Shape& s);
std::string ShapeToString(const Shape& s);

enum class OpKind {
  kLeaf,
  kMatmul,
  kTransposeLast2,
  kAdd,
  kMul,
  kScale,
  kExp,
  kRelu,
  kSoftmax,
  kLayerNorm,
  kConv1d,
  kEmbedding,
  kMeanPool,
  kReshape,
  kConcat,
  kSlice,
  kMse,
  kMae,
  kCrossEntropy,
  kMaskedSelect,
  kL2Normalize,
  kSum,
  kRepeatRows,
  kDetach,
};

struct Attrs {
  double scalar = 0;                 // kScale factor
  int axis = 0, start = 0, len = 0;  // kSlice / kConcat
  Shape shape;                       // kReshape target; kEmbedding id shape
  std::vector<int> ids;              // kEmbedding row indices
  std::vector<uint8_t> mask;         // kMaskedSelect / kMeanPool, flattened
  std::vector<int> labels;           // kCrossEntropy
  std::vector<int> counts;           // kRepeatRows
};

struct Node {
  OpKind kind = OpKind::kLeaf;
  std::vector<int> inputs;
  Attrs attrs;
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated by Backward for grad-requiring nodes
  bool requires_grad = false;
};

// Handle to a node inside a Graph.
struct TRef {
  class Graph* graph = nullptr;
  int id = -1;
  bool valid() const { return graph != nullptr && id >= 0; }
};

// Eager tape: Apply computes the forward value immediately; creation order
// is a topological order, so Backward is a single reverse sweep.
class Graph {
 public:
  TRef Leaf(const Shape& shape, std::vector<float> data,
            bool requires_grad = false);
  TRef Zeros(const Shape& shape);

  TRef Apply(OpKind kind, const std::vector<TRef>& inputs, Attrs attrs = {});

  // Convenience builders.
  TRef MatMul(TRef a, TRef b) { return Apply(OpKind::kMatmul, {a, b}); }
  TRef TransposeLast2(TRef a) { return Apply(OpKind::kTransposeLast2, {a}); }
  TRef Add(TRef a, TRef b) { return Apply(OpKind::kAdd, {a, b}); }
  TRef Mul(TRef a, TRef b) { return Apply(OpKind::kMul, {a, b}); }
  TRef Scale(TRef a, double s) {
    Attrs at;
    at.scalar = s;
    return Apply(OpKind::kScale, {a}, at);
  }
  TRef Exp(TRef a) { return Apply(OpKind::kExp, {a}); }
  TRef Relu(TRef a) { return Apply(OpKind::kRelu, {a}); }
  TRef Softmax(TRef a) { return Apply(OpKind::kSoftmax, {a}); }
  TRef LayerNorm(TRef x, TRef gamma, TRef beta) {
    return Apply(OpKind::kLayerNorm, {x, gamma, beta});
  }
  TRef Conv1d(TRef x, TRef w, TRef b) {
    return Apply(OpKind::kConv1d, {x, w, b});
  }
  TRef Embedding(TRef table, const std::vector<int>& ids, const Shape& id_shape);
  TRef MeanPool(TRef x, std::vector<uint8_t> mask = {});
  TRef Reshape(TRef a, const Shape& shape);
  TRef Concat(const std::vector<TRef>& xs, int axis);
  TRef Slice(TRef a, int axis, int start, int len);
  TRef Mse(TRef a, TRef b) { return Apply(OpKind::kMse, {a, b}); }
  TRef Mae(TRef a, TRef b) { return Apply(OpKind::kMae, {a, b}); }
  TRef CrossEntropy(TRef logits, const std::vector<int>& labels);
  TRef MaskedSelect(TRef a, std::vector<uint8_t> mask);
  TRef L2Normalize(TRef a) { return Apply(OpKind::kL2Normalize, {a}); }
  TRef Sum(TRef a) { return Apply(OpKind::kSum, {a}); }
  TRef RepeatRows(TRef a, std::vector<int> counts);
  TRef Detach(TRef a) { return Apply(OpKind::kDetach, {a}); }

  const Node& node(int id) const { return nodes_[id]; }
  const Node& node(TRef t) const { return nodes_[t.id]; }
  const std::vector<float>& value(TRef t) const { return nodes_[t.id].value; }
  const std::vector<float>& grad(TRef t) const { return nodes_[t.id].grad; }
  float scalar(TRef t) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  // Reverse sweep from a scalar loss. Grad buffers of every
  // grad-requiring node are (re)set; unreachable ones stay zero.
  void Backward(TRef loss);

  // f64 shadow evaluation of `target` with element `elem` of leaf
  // `leaf` perturbed by `delta`. The float tape is left untouched.
  std::vector<double> EvalShadow(TRef target, int leaf, int elem,
                                 double delta) const;

 private:
  // Deque keeps node (and value) references stable across Apply calls.
  std::deque<Node> nodes_;
};

}  // namespace bip

#endif  // BIP_TENSOR_TENSOR_H_
