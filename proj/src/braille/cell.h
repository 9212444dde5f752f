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

#ifndef BIP_BRAILLE_CELL_H_
#define BIP_BRAILLE_CELL_H_

#include <cstdint>
#include <string>

namespace bip {

// One 6-dot braille cell. Bit i is dot i+1; dots are numbered column-major,
// 1,2,3 down the left column and 4,5,6 down the right. Mask 0 is the
// explicit space cell.
struct BrailleCell {
  uint8_t mask = 0;

  BrailleCell() = default;
  explicit BrailleCell(uint8_t m) : mask(m) {}

  bool HasDot(int dot) const { return (mask >> (dot - 1)) & 1; }
  // Dot position inside the 2x3 grid: col 0 = dots 1..3, col 1 = dots 4..6.
  static int DotRow(int dot) { return (dot - 1) % 3; }
  static int DotCol(int dot) { return (dot - 1) / 3; }

  bool operator==(const BrailleCell& o) const { return mask == o.mask; }
};

enum class TextKind { kSpell, kNumber, kPunct };

const char* TextKindName(TextKind k);
TextKind TextKindFromName(const std::string& name);

// One labelled text unit: a pinyin syllable (initial+final+tone), a digit
// string, or a punctuation mark.
struct TextUnit {
  TextKind kind = TextKind::kSpell;
  std::string initial;  // may be empty (zero-initial syllables)
  std::string final;
  int tone = 1;  // 1..4
  std::string digits;
  std::string punct;

  static TextUnit Spell(std::string ini, std::string fin, int tone);
  static TextUnit Number(std::string digits);
  static TextUnit Punct(std::string punct);

  bool operator==(const TextUnit& o) const;
  bool operator<(const TextUnit& o) const { return ToString() < o.ToString(); }

  // Canonical one-token form, e.g. "spell:h,ao,3", "number:24", "punct:!".
  std::string ToString() const;
  static TextUnit FromString(const std::string& s);
};

}  // namespace bip

#endif  // BIP_BRAILLE_CELL_H_
