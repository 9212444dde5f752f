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

#ifndef BIP_KNN_KNN_H_
#define BIP_KNN_KNN_H_

#include <map>
#include <vector>

#include "braille/cell.h"
#include "braille/table.h"
#include "i2t/i2t.h"

namespace bip {

// Candidate texts ranked by the learned similarity value p, not by
// Euclidean distance. Immutable once built; queries are concurrent-safe.
class TextIndex {
 public:
  TextIndex(std::vector<TextUnit> units, std::vector<float> embeddings,
            int dim);

  int size() const { return static_cast<int>(units_.size()); }
  int dim() const { return dim_; }
  const std::vector<TextUnit>& units() const { return units_; }
  const std::vector<float>& embeddings() const { return embeddings_; }

  struct Hit {
    TextUnit unit;
    float p;
    int index;
  };
  // Top-k by descending p; ties keep insertion order.
  std::vector<Hit> Query(const std::vector<float>& embedding, int k) const;

 private:
  std::vector<TextUnit> units_;
  std::vector<float> embeddings_;  // size * dim, rows L2-normalized
  int dim_;
};

// Embeds the candidates with the text encoder (deduplicating by unit).
TextIndex BuildTextIndex(const std::vector<TextUnit>& candidates,
                         const I2TModel& model, ParamStore* store,
                         const EncodingTable& table);

// Embeds prepared images (batched) with the image encoder.
std::vector<float> EmbedImages(const std::vector<EncoderImage>& images,
                               const I2TModel& model, ParamStore* store);

struct RecallReport {
  std::map<int, double> recall_at;  // k -> hit rate
  double mean_r = 0;                // mean over the evaluated k values
};

// Hit-rate recall: a query counts at k when its ground truth appears in
// the top-k hits.
RecallReport RecallMetrics(const std::vector<std::vector<TextIndex::Hit>>& results,
                           const std::vector<TextUnit>& ground_truth,
                           const std::vector<int>& ks);

}  // namespace bip

#endif  // BIP_KNN_KNN_H_
