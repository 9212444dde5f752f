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

#include "braille/dataset.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "braille/detect.h"
#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"
#include "json.hpp"

namespace bip {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

int Manifest::CountKind(TextKind k) const {
  int n = 0;
  for (const auto& r : records)
    if (r.unit.kind == k) ++n;
  return n;
}

std::vector<ManifestRecord> Manifest::Split(const std::string& split) const {
  std::vector<ManifestRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

std::string Manifest::ImagePath(const ManifestRecord& rec) const {
  return (fs::path(base_dir) / rec.image).string();
}

void SaveManifest(const Manifest& m, const std::string& path) {
  std::ostringstream out;
  for (const auto& r : m.records) {
    ordered_json j;
    j["id"] = r.id;
    j["image"] = r.image;
    j["kind"] = TextKindName(r.unit.kind);
    j["initial"] = r.unit.initial;
    j["final"] = r.unit.final;
    j["tone"] = r.unit.kind == TextKind::kSpell ? r.unit.tone : 0;
    j["digits"] = r.unit.digits;
    j["punct"] = r.unit.punct;
    j["split"] = r.split;
    out << j.dump() << "\n";
  }
  WriteFileOrThrow(path, out.str());
}

Manifest LoadManifest(const std::string& path) {
  Manifest m;
  m.base_dir = fs::path(path).parent_path().string();
  if (m.base_dir.empty()) m.base_dir = ".";
  std::string text = ReadFileOrThrow(path);
  int lineno = 0;
  for (const auto& line : SplitString(text, '\n')) {
    ++lineno;
    if (TrimString(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      Throw(ErrorCode::kData, "manifest line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
    ManifestRecord r;
    r.id = j.at("id").get<std::string>();
    r.image = j.at("image").get<std::string>();
    r.unit.kind = TextKindFromName(j.at("kind").get<std::string>());
    r.unit.initial = j.value("initial", "");
    r.unit.final = j.value("final", "");
    r.unit.tone = j.value("tone", 0);
    r.unit.digits = j.value("digits", "");
    r.unit.punct = j.value("punct", "");
    r.split = j.value("split", "train");
    m.records.push_back(std::move(r));
  }
  return m;
}

namespace {

TextUnit SampleUnit(TextKind kind, const EncodingTable& table,
                    const std::vector<TextUnit>& spell_pool, int max_digits,
                    Rng* rng) {
  switch (kind) {
    case TextKind::kSpell:
      return spell_pool[rng->NextBelow(spell_pool.size())];
    case TextKind::kNumber: {
      int len = 1 + static_cast<int>(rng->NextBelow(
                        static_cast<uint64_t>(max_digits)));
      std::string digits;
      for (int i = 0; i < len; ++i)
        digits.push_back(static_cast<char>('0' + rng->NextBelow(10)));
      return TextUnit::Number(digits);
    }
    case TextKind::kPunct: {
      const auto& ps = table.puncts();
      return TextUnit::Punct(ps[rng->NextBelow(ps.size())]);
    }
  }
  Throw(ErrorCode::kUsage, "bad kind");
}

}  // namespace

Manifest GenerateDataset(const GenSpec& spec, const std::string& out_dir,
                         const EncodingTable& table,
                         const RenderStyle& style) {
  BIP_CHECK(spec.numbers >= 0 && spec.spells >= 0 && spec.puncts >= 0);
  EnsureDir(out_dir);
  EnsureDir((fs::path(out_dir) / "images").string());

  Manifest m;
  m.base_dir = out_dir;
  Rng rng(spec.seed);
  const auto spell_pool = table.AllSpellUnits();

  struct Plan {
    TextKind kind;
    int count;
    char prefix;
  };
  const Plan plans[3] = {{TextKind::kNumber, spec.numbers, 'n'},
                         {TextKind::kSpell, spec.spells, 's'},
                         {TextKind::kPunct, spec.puncts, 'p'}};
  for (const auto& plan : plans) {
    for (int i = 0; i < plan.count; ++i) {
      ManifestRecord r;
      char idbuf[16];
      std::snprintf(idbuf, sizeof(idbuf), "%c%06d", plan.prefix, i);
      r.id = idbuf;
      r.unit = SampleUnit(plan.kind, table, spell_pool, spec.max_digits, &rng);
      r.split = rng.NextDouble() < spec.test_fraction ? "test" : "train";
      r.image = "images/" + r.id + ".pgm";

      RenderStyle st = style;
      st.jitter_seed = rng.NextU64();
      BrailleImage img = RenderCells(table.UnitToCells(r.unit), st);
      WritePgm(m.ImagePath(r), img);
      m.records.push_back(std::move(r));
    }
  }
  SaveManifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
  return m;
}

CleanOutcome CleanManifest(const Manifest& m, int expected_cells,
                           const EncodingTable& table,
                           const RenderStyle& style) {
  CleanOutcome out;
  out.kept.base_dir = m.base_dir;
  for (const auto& r : m.records) {
    int expect = expected_cells;
    if (expect <= 0)
      expect = static_cast<int>(table.UnitToCells(r.unit).size());
    BrailleImage img = ReadPgm(m.ImagePath(r));
    CleanVerdict v = CleanOvercrop(img, expect, style);
    if (v.keep)
      out.kept.records.push_back(r);
    else
      out.dropped_ids.push_back(r.id);
    if (v.review) out.review_ids.push_back(r.id);
  }
  return out;
}

std::vector<AugmentOp> ParseAugmentMethods(const std::string& spec) {
  std::vector<AugmentOp> ops;
  for (const auto& part : SplitString(spec, ',')) {
    std::string p = TrimString(part);
    if (p.empty()) continue;
    if (p == "flip180") {
      ops.push_back({AugmentOp::kFlip180, 0});
    } else if (p.rfind("bg:", 0) == 0) {
      int level = std::stoi(p.substr(3));
      if (level < 0 || level > 255)
        Throw(ErrorCode::kUsage, "background level out of range: " + p);
      ops.push_back({AugmentOp::kBackground, static_cast<uint8_t>(level)});
    } else {
      Throw(ErrorCode::kUsage, "unknown augmentation method: " + p);
    }
  }
  if (ops.empty()) Throw(ErrorCode::kUsage, "no augmentation methods given");
  return ops;
}

Manifest AugmentManifest(const Manifest& m, const std::vector<AugmentOp>& ops) {
  Manifest out;
  out.base_dir = m.base_dir;
  out.records = m.records;
  for (const auto& r : m.records) {
    BrailleImage img = ReadPgm(m.ImagePath(r));
    for (const auto& op : ops) {
      if (op.kind == AugmentOp::kFlip180)
        img = Flip180(img);
      else
        img = WithBackground(img, op.level);
    }
    ManifestRecord aug = r;
    aug.id = r.id + "_aug";
    aug.image = "images/" + aug.id + ".pgm";
    WritePgm(out.ImagePath(aug), img);
    out.records.push_back(std::move(aug));
  }
  return out;
}

}  // namespace bip
