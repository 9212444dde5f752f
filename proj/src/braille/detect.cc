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

#include "braille/detect.h"

#include <algorithm>
#include <cmath>
#include <deque>

#include "common/error.h"

namespace bip {

std::vector<std::pair<double, double>> FindDots(const BrailleImage& img) {
  uint8_t lo = 255, hi = 0;
  for (uint8_t p : img.pixels) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  // Midpoint of foreground/background levels.
  const double threshold = (static_cast<double>(lo) + hi) / 2.0;
  if (lo == hi)
    Throw(ErrorCode::kData, "NoDotsDetected: flat image");

  const int w = img.width, h = img.height;
  std::vector<int> label(static_cast<size_t>(w) * h, -1);
  std::vector<std::pair<double, double>> dots;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t idx = static_cast<size_t>(y) * w + x;
      if (label[idx] >= 0 || img.pixels[idx] >= threshold) continue;
      // Flood-fill one 4-connected component.
      double sx = 0, sy = 0;
      int count = 0;
      std::deque<std::pair<int, int>> queue{{x, y}};
      label[idx] = static_cast<int>(dots.size());
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        sx += cx + 0.5;
        sy += cy + 0.5;
        ++count;
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          size_t nidx = static_cast<size_t>(ny[k]) * w + nx[k];
          if (label[nidx] >= 0 || img.pixels[nidx] >= threshold) continue;
          label[nidx] = label[idx];
          queue.emplace_back(nx[k], ny[k]);
        }
      }
      dots.emplace_back(sx / count, sy / count);
    }
  }
  if (dots.empty()) Throw(ErrorCode::kData, "NoDotsDetected: no dark pixels");
  return dots;
}

std::vector<double> GroupColumns(
    const std::vector<std::pair<double, double>>& dots, double intra_pitch) {
  std::vector<double> xs;
  xs.reserve(dots.size());
  for (const auto& [x, y] : dots) {
    (void)y;
    xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> centers;
  size_t i = 0;
  while (i < xs.size()) {
    size_t j = i;
    double sum = 0;
    // Members join while they stay within half a pitch of the group mean.
    while (j < xs.size() &&
           (j == i || xs[j] - sum / (j - i) <= intra_pitch / 2)) {
      sum += xs[j];
      ++j;
    }
    centers.push_back(sum / (j - i));
    i = j;
  }
  return centers;
}

namespace {

std::vector<double> DistinctDistances(const std::vector<double>& columns,
                                      double tol) {
  std::vector<double> dist;
  for (size_t i = 1; i < columns.size(); ++i)
    dist.push_back(columns[i] - columns[0]);
  std::sort(dist.begin(), dist.end());
  std::vector<double> classes;
  size_t i = 0;
  while (i < dist.size()) {
    size_t j = i;
    double sum = 0;
    while (j < dist.size() && (j == i || dist[j] - sum / (j - i) <= tol)) {
      sum += dist[j];
      ++j;
    }
    classes.push_back(sum / (j - i));
    i = j;
  }
  return classes;
}

}  // namespace

DistanceProfile ComputeProfile(const BrailleImage& img,
                               const RenderStyle& style) {
  auto dots = FindDots(img);
  auto columns = GroupColumns(dots, style.intra_pitch * style.scale);
  DistanceProfile profile;
  profile.reference_x = columns.front();
  // Distances count as distinct when more than 25% of the intra-cell
  // column pitch apart.
  profile.distances =
      DistinctDistances(columns, 0.25 * style.intra_pitch * style.scale);
  return profile;
}

CleanVerdict CleanOvercrop(const BrailleImage& img, int expected_cells,
                           const RenderStyle& style) {
  BIP_CHECK(expected_cells >= 1) << "expected_cells";
  CleanVerdict v;
  v.profile = ComputeProfile(img, style);
  const double s = style.scale;
  const double a = style.intra_pitch * s;
  const double b = style.inter_gap * s;
  const double tol = 0.25 * a;
  // An n-cell crop spans at most (n-1)(a+b)+a between dot columns and can
  // produce at most 2n-1 distinct distances from the leftmost column.
  const double max_span = (expected_cells - 1) * (a + b) + a;
  const size_t max_classes = static_cast<size_t>(2 * expected_cells - 1);
  const double max_seen =
      v.profile.distances.empty() ? 0.0 : v.profile.distances.back();
  v.keep =
      max_seen <= max_span + tol && v.profile.distances.size() <= max_classes;
  // Possible incomplete crop: nothing reaches the expected last cell.
  const double last_cell_x = (expected_cells - 1) * (a + b);
  v.review = v.keep && expected_cells > 1 && max_seen < last_cell_x - tol;
  return v;
}

std::vector<BrailleCell> DetectCells(const BrailleImage& img,
                                     const RenderStyle& style) {
  auto dots = FindDots(img);
  const double s = style.scale;
  const double a = style.intra_pitch * s;
  const double b = style.inter_gap * s;
  const double tol = 0.35 * a;

  int max_cell = -1;
  std::vector<std::tuple<int, int, int>> hits;  // cell, col, row
  for (const auto& [x, y] : dots) {
    // Row from the absolute grid.
    double ry = (y - style.margin_y * s) / a;
    int row = static_cast<int>(std::lround(ry));
    if (row < 0 || row > 2 || std::abs(y - style.RowY(row)) > tol)
      Throw(ErrorCode::kData, "NoDotsDetected: dot off the row grid");
    // Column: cell index c and side j with x ~ margin + c(a+b) + ja.
    double rel = x - style.margin_x * s;
    int c = static_cast<int>(std::floor((rel + a / 2 + tol) / (a + b)));
    c = std::max(c, 0);
    int best_cell = -1, best_col = -1;
    double best_err = 1e9;
    for (int cc = std::max(0, c - 1); cc <= c + 1; ++cc)
      for (int j = 0; j < 2; ++j) {
        double err = std::abs(x - style.ColumnX(cc, j));
        if (err < best_err) {
          best_err = err;
          best_cell = cc;
          best_col = j;
        }
      }
    if (best_err > tol)
      Throw(ErrorCode::kData, "NoDotsDetected: dot off the column grid");
    hits.emplace_back(best_cell, best_col, row);
    max_cell = std::max(max_cell, best_cell);
  }

  std::vector<BrailleCell> cells(static_cast<size_t>(max_cell) + 1);
  for (const auto& [c, j, r] : hits) {
    int dot = j * 3 + r + 1;
    cells[c].mask |= static_cast<uint8_t>(1u << (dot - 1));
  }
  return cells;
}

}  // namespace bip
