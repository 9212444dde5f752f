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

#ifndef BIP_BRAILLE_RENDER_H_
#define BIP_BRAILLE_RENDER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "braille/cell.h"

namespace bip {

// 8-bit grayscale canvas with the ground-truth dot centers kept alongside.
struct BrailleImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major
  std::vector<std::pair<float, float>> dot_centers;

  uint8_t At(int x, int y) const { return pixels[y * width + x]; }
};

// Geometry in px at scale 1. Dot columns inside a cell (and the three rows)
// sit intra_pitch apart; adjacent cells' facing columns sit inter_gap apart.
// Defaults give a 3-cell image of exactly 120x80.
struct RenderStyle {
  double dot_radius = 6.0;
  double intra_pitch = 18.0;
  double inter_gap = 26.0;
  double margin_x = 7.0;   // canvas edge to first column center
  double margin_y = 22.0;  // canvas edge to first row center
  uint8_t foreground = 40;
  uint8_t background = 230;
  double scale = 1.0;
  double jitter = 0.0;  // max |dx|,|dy| applied to each dot center
  uint64_t jitter_seed = 0;

  double ColumnX(int cell, int col) const {
    return (margin_x + cell * (intra_pitch + inter_gap) + col * intra_pitch) *
           scale;
  }
  double RowY(int row) const { return (margin_y + row * intra_pitch) * scale; }
};

// Anti-aliased dot rendering. Canvas width is padded on the right when the
// natural width would fall below the height (width >= height invariant).
BrailleImage RenderCells(const std::vector<BrailleCell>& cells,
                         const RenderStyle& style);

// Point reflection of the pixel grid; dot centers remapped. Involution.
BrailleImage Flip180(const BrailleImage& img);

// Replaces the background gray level, leaving dot cores untouched and
// rescaling anti-aliased edges accordingly.
BrailleImage WithBackground(const BrailleImage& img, uint8_t level);

// Binary 8-bit PGM (P5).
void WritePgm(const std::string& path, const BrailleImage& img);
BrailleImage ReadPgm(const std::string& path);

}  // namespace bip

#endif  // BIP_BRAILLE_RENDER_H_
