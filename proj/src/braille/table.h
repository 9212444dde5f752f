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

#ifndef BIP_BRAILLE_TABLE_H_
#define BIP_BRAILLE_TABLE_H_

#include <map>
#include <string>
#include <vector>

#include "braille/cell.h"

namespace bip {

// The dot-assignment table plus the token vocabulary derived from it.
// Entries come from the bundled TSV (data/braille_table.tsv); unlisted
// symbols are rejected, never guessed.
class EncodingTable {
 public:
  static const EncodingTable& Builtin();
  static EncodingTable FromTsv(const std::string& tsv_text);
  static EncodingTable FromFile(const std::string& path);

  // Spell -> [initial? final tone]; Number -> [numsign digits...];
  // Punct -> its cell sequence.
  std::vector<BrailleCell> UnitToCells(const TextUnit& unit) const;

  // Inverse of UnitToCells under the given category.
  TextUnit CellsToUnit(const std::vector<BrailleCell>& cells,
                       TextKind mode) const;

  // Disambiguation rules that make encode/decode a bijection:
  // g/k/h take non-i/v finals, j/q/x take i/v finals, o only after
  // b/p/m/f, e never after b/p/m/f (zero-initial e allowed, o not).
  bool IsValidSpell(const std::string& initial, const std::string& final) const;

  // Every encodable unit of each kind. Spells enumerate all valid
  // (initial|none, final) pairs at all four tones; numbers are the ten
  // single digits (longer strings compose from them).
  std::vector<TextUnit> AllSpellUnits() const;
  std::vector<TextUnit> AllPunctUnits() const;

  const std::vector<std::string>& initials() const { return initials_; }
  const std::vector<std::string>& finals() const { return finals_; }
  const std::vector<std::string>& puncts() const { return puncts_; }

  // Token vocabulary: PAD, BOS, EOS, then one id per initial, final,
  // tone, digit and punctuation symbol.
  int vocab_size() const { return static_cast<int>(id_to_token_.size()); }
  int TokenId(const std::string& token) const;
  const std::string& TokenName(int id) const;
  static constexpr int kPadId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;

  // Fixed-length id sequence (padded/truncated to context_length).
  std::vector<int> Tokenize(const TextUnit& unit, int context_length) const;

 private:
  EncodingTable() = default;
  void BuildVocab();

  std::map<std::string, uint8_t> initial_mask_;
  std::map<std::string, uint8_t> final_mask_;
  std::map<int, uint8_t> tone_mask_;
  std::map<char, uint8_t> digit_mask_;
  uint8_t numsign_mask_ = 0;
  std::map<std::string, std::vector<uint8_t>> punct_cells_;

  std::vector<std::string> initials_;  // table order
  std::vector<std::string> finals_;
  std::vector<std::string> puncts_;

  std::map<uint8_t, std::vector<std::string>> initial_by_mask_;
  std::map<uint8_t, std::vector<std::string>> final_by_mask_;
  std::map<uint8_t, int> tone_by_mask_;
  std::map<uint8_t, char> digit_by_mask_;

  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

}  // namespace bip

#endif  // BIP_BRAILLE_TABLE_H_
