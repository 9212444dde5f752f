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

#ifndef BIP_TENSOR_GRADCHECK_H_
#define BIP_TENSOR_GRADCHECK_H_

#include <string>
#include <vector>

#include "tensor/tensor.h"

namespace bip {

struct GradCheckOptions {
  double h = 1e-3;              // central-difference step (f64 probe)
  int max_coords_per_param = 64;
  uint64_t seed = 1234;
  double kink_tol = 0.25;       // one-sided slope disagreement ratio
};

struct GradCheckReport {
  double max_rel_error = 0;
  int checked = 0;
  // Coordinates skipped because the two one-sided differences disagree
  // (non-smooth point, e.g. a relu kink).
  std::vector<std::pair<std::string, int>> excluded;
};

// Central finite differences in a full f64 shadow of the tape against the
// analytic grads from Backward. Relative error per coordinate is
// |a - n| / max(1e-8, |a| + |n|). Throws NonFiniteValue when any probe
// evaluates non-finite.
GradCheckReport GradCheck(Graph* graph, TRef loss,
                          const std::vector<std::pair<std::string, TRef>>& params,
                          const GradCheckOptions& opt = {});

}  // namespace bip

#endif  // BIP_TENSOR_GRADCHECK_H_
