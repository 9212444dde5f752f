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

#ifndef BIP_EVAL_DECODE_H_
#define BIP_EVAL_DECODE_H_

#include <string>
#include <vector>

#include "braille/table.h"
#include "dsp/dsp.h"

namespace bip {

// Oracle mels for every vocabulary syllable: the deterministic stand-in
// for human pronunciation judgment.
struct TemplateBank {
  std::vector<std::string> syllables;
  std::vector<FloatMatrix> mels;
  std::vector<double> mean_level;  // mean log-mel, for the silence fallback
};

TemplateBank BuildTemplateBank(const EncodingTable& table, const DspConfig& cfg,
                               uint64_t style_seed = 0);

struct DecodedSyllable {
  std::string syllable;
  double confidence = 0;  // 0 flags a silent segment (counted wrong)
  double mcd = 0;
};

// Splits the mel at the given frame spans and classifies each segment by
// minimal MCD against the bank.
std::vector<DecodedSyllable> DecodeMel(const FloatMatrix& mel,
                                       const std::vector<int>& span_frames,
                                       const TemplateBank& bank);

}  // namespace bip

#endif  // BIP_EVAL_DECODE_H_
