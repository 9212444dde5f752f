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

#include "braille/render.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"

namespace bip {

namespace {

void PaintDot(BrailleImage* img, double cx, double cy, double r, uint8_t fg,
              uint8_t bg) {
  int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
  int x1 = std::min(img->width - 1, static_cast<int>(std::ceil(cx + r + 1)));
  int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
  int y1 = std::min(img->height - 1, static_cast<int>(std::ceil(cy + r + 1)));
  const double r2 = r * r;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      // 4x4 supersampled coverage.
      int inside = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          double px = x + (sx + 0.5) / 4.0;
          double py = y + (sy + 0.5) / 4.0;
          double dx = px - cx, dy = py - cy;
          if (dx * dx + dy * dy <= r2) ++inside;
        }
      if (inside == 0) continue;
      double cov = inside / 16.0;
      double value = bg + (static_cast<double>(fg) - bg) * cov;
      uint8_t v = static_cast<uint8_t>(std::lround(value));
      // Darker wins where halos would touch.
      uint8_t& px = img->pixels[y * img->width + x];
      px = std::min(px, v);
    }
  }
}

}  // namespace

BrailleImage RenderCells(const std::vector<BrailleCell>& cells,
                         const RenderStyle& style) {
  const double s = style.scale;
  const double r = style.dot_radius * s;
  if (style.dot_radius <= 0 || style.intra_pitch <= 0 || style.inter_gap <= 0 ||
      style.scale <= 0)
    Throw(ErrorCode::kUsage, "StyleInvalid: nonpositive geometry");
  if (style.dot_radius >= style.intra_pitch / 2)
    Throw(ErrorCode::kUsage, "StyleInvalid: radius >= pitch/2");

  const int ncells = static_cast<int>(cells.size());
  const double span =
      ncells > 0 ? style.ColumnX(ncells - 1, 1) + style.margin_x * s
                 : 2 * style.margin_x * s;
  int width = static_cast<int>(std::lround(span));
  int height = static_cast<int>(
      std::lround((2 * style.intra_pitch + 2 * style.margin_y) * s));
  // Content stays left-aligned; pad on the right only.
  width = std::max(width, height);

  BrailleImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<size_t>(width) * height, style.background);

  Rng jitter(style.jitter_seed);
  for (int c = 0; c < ncells; ++c) {
    for (int dot = 1; dot <= 6; ++dot) {
      if (!cells[c].HasDot(dot)) continue;
      double cx = style.ColumnX(c, BrailleCell::DotCol(dot));
      double cy = style.RowY(BrailleCell::DotRow(dot));
      if (style.jitter > 0) {
        cx += jitter.NextFloat(-style.jitter, style.jitter) * s;
        cy += jitter.NextFloat(-style.jitter, style.jitter) * s;
      }
      PaintDot(&img, cx, cy, r, style.foreground, style.background);
      img.dot_centers.emplace_back(static_cast<float>(cx),
                                   static_cast<float>(cy));
    }
  }
  return img;
}

BrailleImage Flip180(const BrailleImage& img) {
  BrailleImage out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.assign(img.pixels.rbegin(), img.pixels.rend());
  for (const auto& [x, y] : img.dot_centers)
    out.dot_centers.emplace_back(img.width - 1 - x, img.height - 1 - y);
  return out;
}

BrailleImage WithBackground(const BrailleImage& img, uint8_t level) {
  // Infer source levels from the image itself: background is the histogram
  // mode, foreground the darkest pixel.
  std::map<uint8_t, int> hist;
  uint8_t fg = 255;
  for (uint8_t p : img.pixels) {
    ++hist[p];
    fg = std::min(fg, p);
  }
  uint8_t bg = 0;
  int best = -1;
  for (const auto& [v, n] : hist)
    if (n > best) {
      best = n;
      bg = v;
    }

  BrailleImage out = img;
  if (bg == fg) {  // blank image: everything is background
    std::fill(out.pixels.begin(), out.pixels.end(), level);
    return out;
  }
  const double denom = static_cast<double>(bg) - fg;
  for (auto& p : out.pixels) {
    double cov = (static_cast<double>(bg) - p) / denom;
    cov = std::clamp(cov, 0.0, 1.0);
    double value = level - (static_cast<double>(level) - fg) * cov;
    p = static_cast<uint8_t>(std::lround(value));
  }
  return out;
}

void WritePgm(const std::string& path, const BrailleImage& img) {
  std::ostringstream ss;
  ss << "P5\n" << img.width << " " << img.height << "\n255\n";
  ss.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  WriteFileOrThrow(path, ss.str());
}

BrailleImage ReadPgm(const std::string& path) {
  std::string data = ReadFileOrThrow(path);
  std::istringstream ss(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  ss >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    Throw(ErrorCode::kData, "BadHeader: not an 8-bit P5 PGM: " + path);
  ss.get();  // single whitespace after maxval
  BrailleImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h);
  ss.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (ss.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    Throw(ErrorCode::kData, "BadHeader: truncated PGM: " + path);
  return img;
}

}  // namespace bip
