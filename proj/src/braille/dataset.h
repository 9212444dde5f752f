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

#ifndef BIP_BRAILLE_DATASET_H_
#define BIP_BRAILLE_DATASET_H_

#include <string>
#include <vector>

#include "braille/cell.h"
#include "braille/render.h"
#include "braille/table.h"

namespace bip {

struct ManifestRecord {
  std::string id;
  std::string image;  // path relative to the manifest's directory
  TextUnit unit;
  std::string split;  // "train" | "test"
};

struct Manifest {
  std::string base_dir;
  std::vector<ManifestRecord> records;

  int CountKind(TextKind k) const;
  std::vector<ManifestRecord> Split(const std::string& split) const;
  std::string ImagePath(const ManifestRecord& rec) const;
};

// UTF-8 JSON-lines with keys id, image, kind, initial, final, tone,
// digits, punct, split.
void SaveManifest(const Manifest& m, const std::string& path);
Manifest LoadManifest(const std::string& path);

struct GenSpec {
  int numbers = 0;
  int spells = 0;
  int puncts = 0;
  uint64_t seed = 0;
  double test_fraction = 0.2;
  int max_digits = 2;  // sampled digit strings are 1..max_digits long
};

// Writes images/ and manifest.jsonl under out_dir. Sampling is
// seeded-uniform over the encoding table; bit-deterministic in (spec, seed).
Manifest GenerateDataset(const GenSpec& spec, const std::string& out_dir,
                         const EncodingTable& table, const RenderStyle& style);

struct CleanOutcome {
  Manifest kept;
  std::vector<std::string> dropped_ids;
  std::vector<std::string> review_ids;  // possible incomplete crops
};

// Applies the d5 overcrop rule to every record. expected_cells <= 0 derives
// the expectation from each record's own label.
CleanOutcome CleanManifest(const Manifest& m, int expected_cells,
                           const EncodingTable& table,
                           const RenderStyle& style);

struct AugmentOp {
  enum Kind { kFlip180, kBackground } kind = kFlip180;
  uint8_t level = 200;  // background ops only
};

std::vector<AugmentOp> ParseAugmentMethods(const std::string& spec);

// Adds one augmented copy per record (methods applied in order), exactly
// doubling per-category counts. Labels carry over unchanged.
Manifest AugmentManifest(const Manifest& m, const std::vector<AugmentOp>& ops);

}  // namespace bip

#endif  // BIP_BRAILLE_DATASET_H_
