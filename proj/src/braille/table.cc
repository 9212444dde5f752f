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

#include "braille/table.h"

#include <algorithm>

#include "common/error.h"
#include "common/io.h"

namespace bip {

extern const char* kBuiltinBrailleTable;  // generated from the bundled TSV

namespace {

bool StartsWithIorV(const std::string& final) {
  return !final.empty() && (final[0] == 'i' || final[0] == 'v');
}

bool IsLabial(const std::string& initial) {
  return initial == "b" || initial == "p" || initial == "m" || initial == "f";
}

bool InGroup(const std::string& s, const char* const group[3]) {
  return s == group[0] || s == group[1] || s == group[2];
}

constexpr const char* kBackGroup[3] = {"g", "k", "h"};
constexpr const char* kFrontGroup[3] = {"j", "q", "x"};

}  // namespace

const EncodingTable& EncodingTable::Builtin() {
  static const EncodingTable table = FromTsv(kBuiltinBrailleTable);
  return table;
}

EncodingTable EncodingTable::FromFile(const std::string& path) {
  return FromTsv(ReadFileOrThrow(path));
}

EncodingTable EncodingTable::FromTsv(const std::string& tsv_text) {
  EncodingTable t;
  int lineno = 0;
  for (const std::string& raw : SplitString(tsv_text, '\n')) {
    ++lineno;
    std::string line = TrimString(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitString(line, '\t');
    if (fields.size() != 3)
      Throw(ErrorCode::kData, "braille table line " + std::to_string(lineno) +
                                  ": expected 3 tab-separated fields");
    const std::string& kind = fields[0];
    const std::string& symbol = fields[1];
    std::vector<uint8_t> masks;
    for (const std::string& m : SplitString(fields[2], ',')) {
      int v = std::stoi(m);
      if (v < 0 || v > 63)
        Throw(ErrorCode::kData, "braille table line " + std::to_string(lineno) +
                                    ": mask out of range");
      masks.push_back(static_cast<uint8_t>(v));
    }
    if (kind == "initial") {
      t.initial_mask_[symbol] = masks.at(0);
      t.initials_.push_back(symbol);
      t.initial_by_mask_[masks.at(0)].push_back(symbol);
    } else if (kind == "final") {
      t.final_mask_[symbol] = masks.at(0);
      t.finals_.push_back(symbol);
      t.final_by_mask_[masks.at(0)].push_back(symbol);
    } else if (kind == "tone") {
      int tone = std::stoi(symbol);
      t.tone_mask_[tone] = masks.at(0);
      t.tone_by_mask_[masks.at(0)] = tone;
    } else if (kind == "digit") {
      t.digit_mask_[symbol.at(0)] = masks.at(0);
      t.digit_by_mask_[masks.at(0)] = symbol.at(0);
    } else if (kind == "numsign") {
      t.numsign_mask_ = masks.at(0);
    } else if (kind == "punct") {
      t.punct_cells_[symbol] = masks;
      t.puncts_.push_back(symbol);
    } else {
      Throw(ErrorCode::kData, "braille table line " + std::to_string(lineno) +
                                  ": unknown entry kind " + kind);
    }
  }
  t.BuildVocab();
  return t;
}

bool EncodingTable::IsValidSpell(const std::string& initial,
                                 const std::string& final) const {
  if (!final_mask_.count(final)) return false;
  if (!initial.empty() && !initial_mask_.count(initial)) return false;
  if (InGroup(initial, kBackGroup) && StartsWithIorV(final)) return false;
  if (InGroup(initial, kFrontGroup) && !StartsWithIorV(final)) return false;
  if (final == "o" && !IsLabial(initial)) return false;
  if (final == "e" && IsLabial(initial)) return false;
  return true;
}

std::vector<BrailleCell> EncodingTable::UnitToCells(const TextUnit& unit) const {
  std::vector<BrailleCell> cells;
  switch (unit.kind) {
    case TextKind::kSpell: {
      if (unit.tone < 1 || unit.tone > 4)
        Throw(ErrorCode::kData, "UnknownSyllablePart: tone out of range");
      if (!unit.initial.empty()) {
        auto it = initial_mask_.find(unit.initial);
        if (it == initial_mask_.end())
          Throw(ErrorCode::kData,
                "UnknownSyllablePart: initial '" + unit.initial + "'");
        cells.emplace_back(it->second);
      }
      auto fit = final_mask_.find(unit.final);
      if (fit == final_mask_.end())
        Throw(ErrorCode::kData, "UnknownSyllablePart: final '" + unit.final + "'");
      if (!IsValidSpell(unit.initial, unit.final))
        Throw(ErrorCode::kData, "UnknownSyllablePart: combination '" +
                                    unit.initial + "' + '" + unit.final +
                                    "' not encodable");
      cells.emplace_back(fit->second);
      cells.emplace_back(tone_mask_.at(unit.tone));
      break;
    }
    case TextKind::kNumber: {
      if (unit.digits.empty())
        Throw(ErrorCode::kData, "UnknownSyllablePart: empty digit string");
      cells.emplace_back(numsign_mask_);
      for (char d : unit.digits) {
        auto it = digit_mask_.find(d);
        if (it == digit_mask_.end())
          Throw(ErrorCode::kData,
                std::string("UnknownSyllablePart: digit '") + d + "'");
        cells.emplace_back(it->second);
      }
      break;
    }
    case TextKind::kPunct: {
      auto it = punct_cells_.find(unit.punct);
      if (it == punct_cells_.end())
        Throw(ErrorCode::kData, "UnknownPunct: '" + unit.punct + "'");
      for (uint8_t m : it->second) cells.emplace_back(m);
      break;
    }
  }
  return cells;
}

TextUnit EncodingTable::CellsToUnit(const std::vector<BrailleCell>& cells,
                                    TextKind mode) const {
  if (cells.empty()) Throw(ErrorCode::kData, "UnknownCell: empty sequence");
  switch (mode) {
    case TextKind::kSpell: {
      if (cells.size() != 2 && cells.size() != 3)
        Throw(ErrorCode::kData, "UnknownCell: spell needs 2 or 3 cells, got " +
                                    std::to_string(cells.size()));
      const bool has_initial = cells.size() == 3;
      uint8_t tone_mask = cells.back().mask;
      auto tit = tone_by_mask_.find(tone_mask);
      if (tit == tone_by_mask_.end())
        Throw(ErrorCode::kData, "UnknownCell: no tone with mask " +
                                    std::to_string(tone_mask));
      uint8_t final_mask = cells[has_initial ? 1 : 0].mask;
      auto fit = final_by_mask_.find(final_mask);
      if (fit == final_by_mask_.end())
        Throw(ErrorCode::kData, "UnknownCell: no final with mask " +
                                    std::to_string(final_mask));

      std::string initial;
      if (has_initial) {
        auto iit = initial_by_mask_.find(cells[0].mask);
        if (iit == initial_by_mask_.end())
          Throw(ErrorCode::kData, "UnknownCell: no initial with mask " +
                                      std::to_string(cells[0].mask));
        const auto& candidates = iit->second;
        if (candidates.size() == 1) {
          initial = candidates[0];
        } else {
          // Shared g/j, k/q, h/x cells split on the final's first letter;
          // pick the candidate whose group matches.
          std::string front, back;
          for (const auto& c : candidates) {
            if (InGroup(c, kFrontGroup)) front = c;
            if (InGroup(c, kBackGroup)) back = c;
          }
          const auto& fcands = fit->second;
          std::string chosen;
          for (const auto& f : fcands) {
            const std::string& want = StartsWithIorV(f) ? front : back;
            if (!want.empty() && IsValidSpell(want, f)) {
              if (!chosen.empty() && chosen != want)
                Throw(ErrorCode::kData, "AmbiguousDecoding: initial mask " +
                                            std::to_string(cells[0].mask));
              chosen = want;
            }
          }
          if (chosen.empty())
            Throw(ErrorCode::kData, "UnknownCell: unresolvable initial mask " +
                                        std::to_string(cells[0].mask));
          initial = chosen;
        }
      }

      // Shared o/e cell: o only after b/p/m/f.
      std::string final;
      std::vector<std::string> viable;
      for (const auto& f : fit->second)
        if (IsValidSpell(initial, f)) viable.push_back(f);
      if (viable.empty())
        Throw(ErrorCode::kData, "UnknownCell: final mask " +
                                    std::to_string(final_mask) +
                                    " invalid after '" + initial + "'");
      if (viable.size() > 1)
        Throw(ErrorCode::kData, "AmbiguousDecoding: final mask " +
                                    std::to_string(final_mask));
      final = viable[0];
      return TextUnit::Spell(initial, final, tit->second);
    }
    case TextKind::kNumber: {
      if (cells.size() < 2 || cells[0].mask != numsign_mask_)
        Throw(ErrorCode::kData, "UnknownCell: number must start with numsign");
      std::string digits;
      for (size_t i = 1; i < cells.size(); ++i) {
        auto it = digit_by_mask_.find(cells[i].mask);
        if (it == digit_by_mask_.end())
          Throw(ErrorCode::kData, "UnknownCell: no digit with mask " +
                                      std::to_string(cells[i].mask));
        digits.push_back(it->second);
      }
      return TextUnit::Number(digits);
    }
    case TextKind::kPunct: {
      for (const auto& sym : puncts_) {
        const auto& seq = punct_cells_.at(sym);
        if (seq.size() != cells.size()) continue;
        bool eq = true;
        for (size_t i = 0; i < seq.size(); ++i)
          if (seq[i] != cells[i].mask) eq = false;
        if (eq) return TextUnit::Punct(sym);
      }
      Throw(ErrorCode::kData, "UnknownCell: no punctuation with this sequence");
    }
  }
  Throw(ErrorCode::kData, "UnknownCell: bad mode");
}

std::vector<TextUnit> EncodingTable::AllSpellUnits() const {
  std::vector<TextUnit> units;
  std::vector<std::string> inis;
  inis.push_back("");
  for (const auto& i : initials_) inis.push_back(i);
  for (const auto& ini : inis)
    for (const auto& fin : finals_) {
      if (!IsValidSpell(ini, fin)) continue;
      for (int tone = 1; tone <= 4; ++tone)
        units.push_back(TextUnit::Spell(ini, fin, tone));
    }
  return units;
}

std::vector<TextUnit> EncodingTable::AllPunctUnits() const {
  std::vector<TextUnit> units;
  for (const auto& p : puncts_) units.push_back(TextUnit::Punct(p));
  return units;
}

void EncodingTable::BuildVocab() {
  id_to_token_.clear();
  token_to_id_.clear();
  auto add = [&](const std::string& tok) {
    token_to_id_[tok] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(tok);
  };
  add("<pad>");
  add("<bos>");
  add("<eos>");
  for (const auto& i : initials_) add("i:" + i);
  for (const auto& f : finals_) add("f:" + f);
  for (const auto& [tone, mask] : tone_mask_) {
    (void)mask;
    add("t:" + std::to_string(tone));
  }
  for (const auto& [d, mask] : digit_mask_) {
    (void)mask;
    add(std::string("d:") + d);
  }
  for (const auto& p : puncts_) add("p:" + p);
}

int EncodingTable::TokenId(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end())
    Throw(ErrorCode::kData, "UnknownToken: '" + token + "'");
  return it->second;
}

const std::string& EncodingTable::TokenName(int id) const {
  BIP_CHECK(id >= 0 && id < vocab_size()) << "token id " << id;
  return id_to_token_[id];
}

std::vector<int> EncodingTable::Tokenize(const TextUnit& unit,
                                         int context_length) const {
  BIP_CHECK(context_length >= 3) << "context too short";
  std::vector<int> ids;
  ids.push_back(kBosId);
  switch (unit.kind) {
    case TextKind::kSpell:
      if (!unit.initial.empty()) ids.push_back(TokenId("i:" + unit.initial));
      ids.push_back(TokenId("f:" + unit.final));
      ids.push_back(TokenId("t:" + std::to_string(unit.tone)));
      break;
    case TextKind::kNumber:
      for (char d : unit.digits) ids.push_back(TokenId(std::string("d:") + d));
      break;
    case TextKind::kPunct:
      ids.push_back(TokenId("p:" + unit.punct));
      break;
  }
  ids.push_back(kEosId);
  if (static_cast<int>(ids.size()) > context_length) {
    ids.resize(context_length);
    ids.back() = kEosId;
  }
  ids.resize(context_length, kPadId);
  return ids;
}

}  // namespace bip
