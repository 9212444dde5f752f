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

#include "tensor/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "common/error.h"
#include "common/rng.h"

namespace bip {

GradCheckReport GradCheck(
    Graph* graph, TRef loss,
    const std::vector<std::pair<std::string, TRef>>& params,
    const GradCheckOptions& opt) {
  graph->Backward(loss);
  const double f0 = graph->EvalShadow(loss, -1, 0, 0.0)[0];
  if (!std::isfinite(f0))
    Throw(ErrorCode::kNumeric, "NonFiniteValue: loss not finite");

  GradCheckReport report;
  Rng rng(opt.seed);
  for (const auto& [name, leaf] : params) {
    const Node& node = graph->node(leaf);
    BIP_CHECK(node.requires_grad) << name << " does not require grad";
    const int n = static_cast<int>(node.value.size());
    std::vector<int> coords;
    if (n <= opt.max_coords_per_param) {
      coords.resize(n);
      for (int i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int i = 0; i < opt.max_coords_per_param; ++i)
        coords.push_back(static_cast<int>(rng.NextBelow(n)));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (int e : coords) {
      const double fp = graph->EvalShadow(loss, leaf.id, e, opt.h)[0];
      const double fm = graph->EvalShadow(loss, leaf.id, e, -opt.h)[0];
      if (!std::isfinite(fp) || !std::isfinite(fm))
        Throw(ErrorCode::kNumeric, "NonFiniteValue: probe of " + name);
      const double numeric = (fp - fm) / (2 * opt.h);
      const double dplus = (fp - f0) / opt.h;
      const double dminus = (f0 - fm) / opt.h;
      // Probe point sits on a kink when the one-sided slopes disagree.
      const double disagreement =
          std::abs(dplus - dminus) /
          std::max(1e-8, std::abs(dplus) + std::abs(dminus));
      if (disagreement > opt.kink_tol) {
        report.excluded.emplace_back(name, e);
        continue;
      }
      const double analytic = node.grad.empty() ? 0.0 : node.grad[e];
      // Both sides reading ~zero is agreement; the relative form would
      // otherwise compare rounding noise against rounding noise.
      const double atol = 1e-6 * std::max(1.0, std::abs(f0));
      const double rel =
          std::abs(analytic) < atol && std::abs(numeric) < atol
              ? 0.0
              : std::abs(analytic - numeric) /
                    std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace bip
