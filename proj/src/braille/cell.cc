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

#include "braille/cell.h"

#include "common/error.h"
#include "common/io.h"

namespace bip {

const char* TextKindName(TextKind k) {
  switch (k) {
    case TextKind::kSpell:
      return "spell";
    case TextKind::kNumber:
      return "number";
    case TextKind::kPunct:
      return "punct";
  }
  return "?";
}

TextKind TextKindFromName(const std::string& name) {
  if (name == "spell") return TextKind::kSpell;
  if (name == "number") return TextKind::kNumber;
  if (name == "punct") return TextKind::kPunct;
  Throw(ErrorCode::kData, "unknown text kind: " + name);
}

TextUnit TextUnit::Spell(std::string ini, std::string fin, int tone) {
  TextUnit u;
  u.kind = TextKind::kSpell;
  u.initial = std::move(ini);
  u.final = std::move(fin);
  u.tone = tone;
  return u;
}

TextUnit TextUnit::Number(std::string digits) {
  TextUnit u;
  u.kind = TextKind::kNumber;
  u.digits = std::move(digits);
  return u;
}

TextUnit TextUnit::Punct(std::string punct) {
  TextUnit u;
  u.kind = TextKind::kPunct;
  u.punct = std::move(punct);
  return u;
}

bool TextUnit::operator==(const TextUnit& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case TextKind::kSpell:
      return initial == o.initial && final == o.final && tone == o.tone;
    case TextKind::kNumber:
      return digits == o.digits;
    case TextKind::kPunct:
      return punct == o.punct;
  }
  return false;
}

std::string TextUnit::ToString() const {
  switch (kind) {
    case TextKind::kSpell:
      return "spell:" + initial + "," + final + "," + std::to_string(tone);
    case TextKind::kNumber:
      return "number:" + digits;
    case TextKind::kPunct:
      return "punct:" + punct;
  }
  return "?";
}

TextUnit TextUnit::FromString(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos)
    Throw(ErrorCode::kData, "bad text unit: " + s);
  std::string kind = s.substr(0, colon);
  std::string rest = s.substr(colon + 1);
  if (kind == "spell") {
    auto parts = SplitString(rest, ',');
    if (parts.size() != 3) Throw(ErrorCode::kData, "bad spell unit: " + s);
    return Spell(parts[0], parts[1], std::stoi(parts[2]));
  }
  if (kind == "number") return Number(rest);
  if (kind == "punct") return Punct(rest);
  Throw(ErrorCode::kData, "bad text unit kind: " + s);
}

}  // namespace bip
