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

#ifndef BIP_DSP_ORACLE_H_
#define BIP_DSP_ORACLE_H_

#include <string>
#include <vector>

#include "braille/cell.h"
#include "dsp/dsp.h"

namespace bip {

// Parametric synthesis: finals are harmonic stacks riding one of four
// tone-dependent F0 templates, initials are shaped noise bursts,
// punctuation is a pause. Targets are exact by construction, which
// replaces forced alignment entirely.
struct OracleUtterance {
  std::vector<float> waveform;          // -1..1
  std::vector<std::string> phonemes;    // e.g. "h", "ao3", "sp"
  std::vector<int> durations;           // frames, sum == mel.rows
  std::vector<float> f0;                // Hz per frame, 0 when unvoiced
  std::vector<float> energy;            // per-frame L2 of the STFT magnitude
  FloatMatrix mel;                      // frames x mel_channels
};

// Phoneme sequence of one unit: spell -> [initial?, final+tone];
// number -> the digits' syllables; punct -> a pause.
std::vector<std::string> UnitToPhonemes(const TextUnit& unit);

// Syllable labels of one unit ("hao3", "er4", ...; puncts read as "sp").
std::vector<std::string> UnitToSyllables(const TextUnit& unit);

// Phonemes of one toned syllable label.
std::vector<std::string> SyllableToPhonemes(const std::string& syllable);

// Frames each phoneme class occupies (fixed per class).
int PhonemeDurationFrames(const std::string& phoneme);

bool IsFinalPhoneme(const std::string& phoneme);

// All phoneme symbols, for the acoustic model vocabulary. Index 0 is PAD.
std::vector<std::string> PhonemeInventory();

OracleUtterance SynthOracle(const std::vector<TextUnit>& units,
                            uint64_t style_seed, const DspConfig& cfg);

// Tone template evaluated at progress u in [0,1], in Hz.
double ToneF0(int tone, double u);

}  // namespace bip

#endif  // BIP_DSP_ORACLE_H_
