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

#include "tensor/layers.h"

#include <cmath>

#include "common/error.h"

namespace bip {

TRef Linear(GraphBinder* b, const std::string& prefix, TRef x, int in,
            int out) {
  Graph* g = b->graph();
  TRef w = b->P(prefix + ".w", {in, out}, ParamInit::Uniform(in));
  TRef bias = b->P(prefix + ".b", {out}, ParamInit::Zeros());
  return g->Add(g->MatMul(x, w), bias);
}

TRef LayerNormed(GraphBinder* b, const std::string& prefix, TRef x, int dim) {
  Graph* g = b->graph();
  TRef gamma = b->P(prefix + ".gamma", {dim}, ParamInit::Ones());
  TRef beta = b->P(prefix + ".beta", {dim}, ParamInit::Zeros());
  return g->LayerNorm(x, gamma, beta);
}

TRef AttentionBlock(GraphBinder* b, const std::string& prefix, TRef x,
                    int dim, int heads) {
  Graph* g = b->graph();
  BIP_CHECK(dim % heads == 0) << "embed dim not divisible by heads";
  const int dh = dim / heads;

  TRef ln1 = LayerNormed(b, prefix + ".ln1", x, dim);
  TRef q = Linear(b, prefix + ".q", ln1, dim, dim);
  TRef k = Linear(b, prefix + ".k", ln1, dim, dim);
  TRef v = Linear(b, prefix + ".v", ln1, dim, dim);

  std::vector<TRef> head_outs;
  for (int h = 0; h < heads; ++h) {
    TRef qh = g->Slice(q, 2, h * dh, dh);
    TRef kh = g->Slice(k, 2, h * dh, dh);
    TRef vh = g->Slice(v, 2, h * dh, dh);
    TRef scores = g->Scale(g->MatMul(qh, g->TransposeLast2(kh)),
                           1.0 / std::sqrt(double(dh)));
    head_outs.push_back(g->MatMul(g->Softmax(scores), vh));
  }
  TRef mha = g->Concat(head_outs, 2);
  TRef attended = g->Add(x, Linear(b, prefix + ".proj", mha, dim, dim));

  TRef ln2 = LayerNormed(b, prefix + ".ln2", attended, dim);
  TRef ffn = Linear(b, prefix + ".ffn2",
                    g->Relu(Linear(b, prefix + ".ffn1", ln2, dim, 4 * dim)),
                    4 * dim, dim);
  return g->Add(attended, ffn);
}

TRef AddPositional(GraphBinder* b, const std::string& name, TRef x, int t,
                   int dim) {
  TRef pos = b->P(name, {t, dim}, ParamInit::Uniform(dim));
  return b->graph()->Add(x, pos);
}

}  // namespace bip
