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

#include "dsp/oracle.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "braille/table.h"
#include "common/error.h"
#include "common/rng.h"

namespace bip {

namespace {

constexpr int kFinalFrames = 14;
constexpr int kPlosiveFrames = 4;
constexpr int kFricativeFrames = 6;
constexpr int kPauseFrames = 8;

const std::map<char, std::string>& DigitSyllables() {
  static const std::map<char, std::string> map = {
      {'0', "ling2"}, {'1', "i1"},   {'2', "er4"},  {'3', "san1"},
      {'4', "si4"},   {'5', "u3"},   {'6', "liu4"}, {'7', "qi1"},
      {'8', "ba1"},   {'9', "jiu3"},
  };
  return map;
}

bool IsPlosive(const std::string& initial) {
  return initial == "b" || initial == "p" || initial == "d" ||
         initial == "t" || initial == "g" || initial == "k";
}

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string SyllableLabel(const std::string& initial, const std::string& final,
                          int tone) {
  return initial + final + std::to_string(tone);
}

// Splits "hao3" into ("h", "ao", 3) against the encoding table.
void ParseSyllable(const std::string& syl, std::string* initial,
                   std::string* final, int* tone) {
  if (syl.size() < 2 || syl.back() < '1' || syl.back() > '4')
    Throw(ErrorCode::kData, "UnknownPhoneme: bad syllable '" + syl + "'");
  *tone = syl.back() - '0';
  const std::string body = syl.substr(0, syl.size() - 1);
  const auto& table = EncodingTable::Builtin();
  // Longest matching initial prefix whose remainder is a valid final.
  for (int ilen = std::min<int>(2, static_cast<int>(body.size()) - 1);
       ilen >= 0; --ilen) {
    const std::string ini = body.substr(0, ilen);
    const std::string fin = body.substr(ilen);
    if (table.IsValidSpell(ini, fin)) {
      *initial = ini;
      *final = fin;
      return;
    }
  }
  Throw(ErrorCode::kData, "UnknownPhoneme: cannot split '" + syl + "'");
}

}  // namespace

double ToneF0(int tone, double u) {
  switch (tone) {
    case 1:
      return 215.0 + 10.0 * u;  // high, nearly level
    case 2:
      return 160.0 + 80.0 * u;  // rising
    case 3:                     // dipping
      return u < 0.5 ? 170.0 - 80.0 * u : 90.0 + 200.0 * (u - 0.5);
    case 4:
      return 250.0 - 100.0 * u;  // falling
    default:
      Throw(ErrorCode::kData, "UnknownPhoneme: tone " + std::to_string(tone));
  }
}

std::vector<std::string> UnitToSyllables(const TextUnit& unit) {
  switch (unit.kind) {
    case TextKind::kSpell:
      return {SyllableLabel(unit.initial, unit.final, unit.tone)};
    case TextKind::kNumber: {
      std::vector<std::string> out;
      for (char d : unit.digits) {
        auto it = DigitSyllables().find(d);
        if (it == DigitSyllables().end())
          Throw(ErrorCode::kData, std::string("UnknownPhoneme: digit ") + d);
        out.push_back(it->second);
      }
      return out;
    }
    case TextKind::kPunct:
      return {"sp"};
  }
  Throw(ErrorCode::kData, "UnknownPhoneme: bad unit");
}

std::vector<std::string> SyllableToPhonemes(const std::string& syllable) {
  if (syllable == "sp") return {"sp"};
  std::string initial, final;
  int tone = 0;
  ParseSyllable(syllable, &initial, &final, &tone);
  std::vector<std::string> out;
  if (!initial.empty()) out.push_back(initial);
  out.push_back(final + std::to_string(tone));
  return out;
}

std::vector<std::string> UnitToPhonemes(const TextUnit& unit) {
  std::vector<std::string> out;
  for (const auto& syl : UnitToSyllables(unit))
    for (const auto& ph : SyllableToPhonemes(syl)) out.push_back(ph);
  return out;
}

int PhonemeDurationFrames(const std::string& phoneme) {
  if (phoneme == "sp") return kPauseFrames;
  if (IsFinalPhoneme(phoneme)) return kFinalFrames;
  return IsPlosive(phoneme) ? kPlosiveFrames : kFricativeFrames;
}

bool IsFinalPhoneme(const std::string& phoneme) {
  return phoneme != "sp" && !phoneme.empty() && phoneme.back() >= '1' &&
         phoneme.back() <= '4';
}

std::vector<std::string> PhonemeInventory() {
  const auto& table = EncodingTable::Builtin();
  std::vector<std::string> inv;
  inv.push_back("<pad>");
  inv.push_back("sp");
  for (const auto& ini : table.initials()) inv.push_back(ini);
  for (const auto& fin : table.finals())
    for (int tone = 1; tone <= 4; ++tone)
      inv.push_back(fin + std::to_string(tone));
  return inv;
}

OracleUtterance SynthOracle(const std::vector<TextUnit>& units,
                            uint64_t style_seed, const DspConfig& cfg) {
  cfg.Validate();
  OracleUtterance utt;
  for (const auto& u : units)
    for (const auto& ph : UnitToPhonemes(u)) {
      utt.phonemes.push_back(ph);
      utt.durations.push_back(PhonemeDurationFrames(ph));
    }
  BIP_CHECK(!utt.phonemes.empty()) << "no phonemes";

  int total_frames = 0;
  for (int d : utt.durations) total_frames += d;
  const int hop = cfg.hop_length;
  // (T-1)*hop samples produce exactly T centered STFT frames.
  const int64_t len = int64_t(total_frames - 1) * hop;
  BIP_CHECK(len > 0) << "utterance too short";
  utt.waveform.assign(len, 0.0f);
  utt.f0.assign(total_frames, 0.0f);

  // Per-frame phoneme index and F0.
  std::vector<int> frame_phoneme(total_frames);
  {
    int f = 0;
    for (size_t p = 0; p < utt.phonemes.size(); ++p) {
      const int d = utt.durations[p];
      const bool voiced = IsFinalPhoneme(utt.phonemes[p]);
      const int tone = voiced ? utt.phonemes[p].back() - '0' : 0;
      for (int i = 0; i < d; ++i, ++f) {
        frame_phoneme[f] = static_cast<int>(p);
        if (voiced)
          utt.f0[f] = float(ToneF0(tone, d > 1 ? double(i) / (d - 1) : 0.0));
      }
    }
  }

  // Sample-level F0 by linear interpolation between frame centers.
  auto f0_at = [&](int64_t n) {
    const double pos = double(n) / hop;
    const int f0i = std::clamp(int(pos), 0, total_frames - 1);
    const int f1i = std::min(f0i + 1, total_frames - 1);
    const double frac = pos - f0i;
    const double a = utt.f0[f0i], b = utt.f0[f1i];
    if (a <= 0 || b <= 0) return a > 0 ? a : b;
    return a + (b - a) * frac;
  };

  const int sr = cfg.sampling_rate;
  constexpr int kHarmonics = 12;
  double theta = 0.0;
  for (size_t p = 0; p < utt.phonemes.size(); ++p) {
    const std::string& ph = utt.phonemes[p];
    // Sample range of this phoneme from its frame range.
    int first_frame = 0;
    for (size_t q = 0; q < p; ++q) first_frame += utt.durations[q];
    const int64_t n0 = std::min<int64_t>(int64_t(first_frame) * hop, len);
    const int64_t n1 =
        std::min<int64_t>(int64_t(first_frame + utt.durations[p]) * hop, len);
    if (ph == "sp") continue;

    // Plosives release into silence halfway through their slot.
    const int64_t seg_end =
        !IsFinalPhoneme(ph) && IsPlosive(ph) ? n0 + (n1 - n0) / 2 : n1;
    const double edge = 0.005 * sr;  // 5 ms fades against clicks
    auto envelope = [&](int64_t n) {
      const double from_start = double(n - n0);
      const double to_end = double(seg_end - 1 - n);
      return std::min({1.0, from_start / edge, to_end / edge});
    };

    if (IsFinalPhoneme(ph)) {
      // Harmonic stack with a two-formant emphasis per final.
      const uint64_t h = Fnv1a(ph.substr(0, ph.size() - 1));
      const double formant1 = 350.0 + double(h % 500);
      const double formant2 = 1000.0 + double((h >> 16) % 1400);
      double amps[kHarmonics + 1];
      for (int k = 1; k <= kHarmonics; ++k) {
        const double fk = 200.0 * k;
        const double g1 = std::exp(-std::pow((fk - formant1) / 220.0, 2));
        const double g2 = std::exp(-std::pow((fk - formant2) / 260.0, 2));
        amps[k] = (1.0 / k) * (0.4 + 2.2 * g1 + 1.4 * g2);
      }
      for (int64_t n = n0; n < n1; ++n) {
        const double f0 = f0_at(n);
        theta += 2 * M_PI * f0 / sr;
        double s = 0;
        for (int k = 1; k <= kHarmonics; ++k) {
          if (k * f0 >= sr / 2.0) break;
          s += amps[k] * std::sin(k * theta);
        }
        utt.waveform[n] += float(0.16 * envelope(n) * s);
      }
    } else {
      // Noise burst, tilted darker or brighter per initial.
      Rng rng(style_seed ^ Fnv1a(ph) ^ (uint64_t(p) << 32));
      const double tilt = 0.15 + 0.7 * double(Fnv1a(ph) % 1000) / 1000.0;
      double prev = 0;
      for (int64_t n = n0; n < seg_end; ++n) {
        const double white = rng.NextDouble() * 2 - 1;
        const double shaped = tilt * white + (1 - tilt) * (white - prev);
        prev = white;
        utt.waveform[n] += float(0.12 * envelope(n) * shaped);
      }
    }
  }

  float peak = 0;
  for (float v : utt.waveform) peak = std::max(peak, std::abs(v));
  if (peak > 0.95f)
    for (auto& v : utt.waveform) v = v / peak * 0.95f;

  utt.energy = FrameEnergy(Stft(utt.waveform, cfg));
  utt.mel = MelSpectrogram(utt.waveform, cfg);
  BIP_CHECK(utt.mel.rows == total_frames)
      << "frame bookkeeping: " << utt.mel.rows << " vs " << total_frames;
  utt.energy.resize(total_frames);
  return utt;
}

}  // namespace bip
