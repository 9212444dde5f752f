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

#ifndef BIP_BRAILLE_DETECT_H_
#define BIP_BRAILLE_DETECT_H_

#include <vector>

#include "braille/render.h"

namespace bip {

// Distances of detected dot columns from the leftmost one, clustered into
// distinct classes. The overcrop rule reads off this profile.
struct DistanceProfile {
  double reference_x = 0;
  std::vector<double> distances;  // strictly increasing class means
};

struct CleanVerdict {
  bool keep = false;
  DistanceProfile profile;
  // Set when the profile has fewer reachable columns than the expected
  // span —  a possible incomplete crop, surfaced for manual review.
  bool review = false;
};

// Dot centroids via midpoint thresholding and 4-connected clustering.
// Throws NoDotsDetected on blank input.
std::vector<std::pair<double, double>> FindDots(const BrailleImage& img);

// Column x-centers (ascending) grouped within half the intra-cell pitch.
std::vector<double> GroupColumns(
    const std::vector<std::pair<double, double>>& dots, double intra_pitch);

DistanceProfile ComputeProfile(const BrailleImage& img,
                               const RenderStyle& style);

// The d5 rule: an image expected to hold n cells is dropped when its
// distance profile reaches beyond the n-cell span (or holds more distinct
// classes than n cells can produce).
CleanVerdict CleanOvercrop(const BrailleImage& img, int expected_cells,
                           const RenderStyle& style);

// Reconstructs cell masks from pixels against the absolute style grid.
// Works on unflipped renders (the generator never centers content).
std::vector<BrailleCell> DetectCells(const BrailleImage& img,
                                     const RenderStyle& style);

}  // namespace bip

#endif  // BIP_BRAILLE_DETECT_H_
