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

#ifndef BIP_DSP_CWT_H_
#define BIP_DSP_CWT_H_

#include <vector>

#include "dsp/dsp.h"

namespace bip {

inline constexpr int kCwtScales = 10;

// Interpolates F0 over unvoiced (zero) gaps and standardizes to zero mean,
// unit variance. Throws AllUnvoiced when no frame is voiced.
struct PitchStats {
  double mean = 0;
  double stddev = 1;
};
std::vector<float> PreparePitchContour(const std::vector<float>& f0_hz,
                                       PitchStats* stats);

// Mexican-hat (DOG2) continuous wavelet transform on a dyadic scale grid
// (two subscales per octave). Rows are scales, columns frames.
FloatMatrix CwtPitch(const std::vector<float>& contour);

// Torrence-Compo delta reconstruction, re-standardized. Callers restore
// Hz with the stats saved by PreparePitchContour.
std::vector<float> InverseCwt(const FloatMatrix& coefficients);

}  // namespace bip

#endif  // BIP_DSP_CWT_H_
