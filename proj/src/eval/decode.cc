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

#include "eval/decode.h"

#include <algorithm>
#include <cmath>

#include "common/error.h"
#include "dsp/oracle.h"

namespace bip {

namespace {

double MeanLevel(const FloatMatrix& mel) {
  double acc = 0;
  for (float v : mel.data) acc += v;
  return acc / std::max<size_t>(mel.data.size(), 1);
}

// Silence sits at the log floor of the mel extraction.
constexpr double kSilenceLevel = -10.5;  // log(1e-5) is about -11.5

}  // namespace

TemplateBank BuildTemplateBank(const EncodingTable& table, const DspConfig& cfg,
                               uint64_t style_seed) {
  TemplateBank bank;
  auto add = [&](const std::string& syllable, const TextUnit& unit) {
    auto utt = SynthOracle({unit}, style_seed, cfg);
    bank.syllables.push_back(syllable);
    bank.mels.push_back(std::move(utt.mel));
    bank.mean_level.push_back(MeanLevel(bank.mels.back()));
  };
  for (const auto& unit : table.AllSpellUnits())
    add(UnitToSyllables(unit)[0], unit);
  // A pause template, the lowest-energy entry by construction.
  add("sp", TextUnit::Punct(","));
  return bank;
}

std::vector<DecodedSyllable> DecodeMel(const FloatMatrix& mel,
                                       const std::vector<int>& span_frames,
                                       const TemplateBank& bank) {
  if (bank.mels.empty()) Throw(ErrorCode::kUsage, "EmptyBank");
  int total = 0;
  for (int f : span_frames) {
    BIP_CHECK(f > 0) << "span frames";
    total += f;
  }
  BIP_CHECK(total <= mel.rows) << "spans exceed the mel";

  std::vector<DecodedSyllable> out;
  int start = 0;
  for (int f : span_frames) {
    FloatMatrix segment(f, mel.cols);
    for (int t = 0; t < f; ++t)
      for (int m = 0; m < mel.cols; ++m)
        segment.at(t, m) = mel.at(start + t, m);
    start += f;

    DecodedSyllable d;
    if (MeanLevel(segment) < kSilenceLevel) {
      // Silent segment: report the lowest-energy template at confidence 0.
      size_t lowest = 0;
      for (size_t i = 1; i < bank.mels.size(); ++i)
        if (bank.mean_level[i] < bank.mean_level[lowest]) lowest = i;
      d.syllable = bank.syllables[lowest];
      d.confidence = 0;
      d.mcd = Mcd(bank.mels[lowest], segment);
    } else {
      size_t best = 0;
      double best_mcd = 1e300;
      for (size_t i = 0; i < bank.mels.size(); ++i) {
        const double m = Mcd(bank.mels[i], segment);
        if (m < best_mcd) {
          best_mcd = m;
          best = i;
        }
      }
      d.syllable = bank.syllables[best];
      d.mcd = best_mcd;
      d.confidence = 1.0 / (1.0 + best_mcd);
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace bip
