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

#ifndef BIP_TENSOR_LAYERS_H_
#define BIP_TENSOR_LAYERS_H_

#include <string>

#include "tensor/optim.h"
#include "tensor/tensor.h"

namespace bip {

// x @ W + b with uniform fan-in init; x may be (N,in) or (B,T,in).
TRef Linear(GraphBinder* b, const std::string& prefix, TRef x, int in,
            int out);

TRef LayerNormed(GraphBinder* b, const std::string& prefix, TRef x, int dim);

// Pre-norm transformer block: x + proj(MHA(LN(x))), then x + FFN(LN(x)).
// Heads are D/heads slices of the projected q/k/v.
TRef AttentionBlock(GraphBinder* b, const std::string& prefix, TRef x,
                    int dim, int heads);

// Learned positional table added to every row batch of (B,T,D).
TRef AddPositional(GraphBinder* b, const std::string& name, TRef x, int t,
                   int dim);

}  // namespace bip

#endif  // BIP_TENSOR_LAYERS_H_
