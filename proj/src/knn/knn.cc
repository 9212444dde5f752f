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

#include "knn/knn.h"

#include <algorithm>
#include <set>

#include "common/error.h"

namespace bip {

TextIndex::TextIndex(std::vector<TextUnit> units, std::vector<float> embeddings,
                     int dim)
    : units_(std::move(units)), embeddings_(std::move(embeddings)), dim_(dim) {
  BIP_CHECK(embeddings_.size() == units_.size() * size_t(dim_))
      << "embedding table size";
}

std::vector<TextIndex::Hit> TextIndex::Query(const std::vector<float>& embedding,
                                             int k) const {
  if (k < 1 || k > size())
    Throw(ErrorCode::kUsage, "KOutOfRange: k=" + std::to_string(k) +
                                 " for index of " + std::to_string(size()));
  BIP_CHECK(embedding.size() == size_t(dim_)) << "query dim";
  std::vector<Hit> hits(size());
  for (int i = 0; i < size(); ++i) {
    double acc = 0;
    for (int d = 0; d < dim_; ++d)
      acc += double(embeddings_[size_t(i) * dim_ + d]) * embedding[d];
    hits[i] = {units_[i], float(acc), i};
  }
  // Stable in the insertion order on ties.
  std::stable_sort(hits.begin(), hits.end(),
                   [](const Hit& a, const Hit& b) { return a.p > b.p; });
  hits.resize(k);
  return hits;
}

TextIndex BuildTextIndex(const std::vector<TextUnit>& candidates,
                         const I2TModel& model, ParamStore* store,
                         const EncodingTable& table) {
  if (candidates.empty()) Throw(ErrorCode::kData, "EmptyCandidates");
  std::vector<TextUnit> units;
  std::set<std::string> seen;
  for (const auto& u : candidates)
    if (seen.insert(u.ToString()).second) units.push_back(u);

  const int dim = model.config().out_dim;
  std::vector<float> embeddings;
  embeddings.reserve(units.size() * size_t(dim));
  const int chunk = 64;
  for (size_t start = 0; start < units.size(); start += chunk) {
    const size_t end = std::min(units.size(), start + chunk);
    std::vector<std::vector<int>> tokens;
    for (size_t i = start; i < end; ++i)
      tokens.push_back(
          table.Tokenize(units[i], model.config().context_length));
    Graph g;
    GraphBinder binder(&g, store);
    TRef emb = model.EncodeTexts(&binder, tokens, table.vocab_size());
    const auto& v = g.value(emb);
    embeddings.insert(embeddings.end(), v.begin(), v.end());
  }
  return TextIndex(std::move(units), std::move(embeddings), dim);
}

std::vector<float> EmbedImages(const std::vector<EncoderImage>& images,
                               const I2TModel& model, ParamStore* store) {
  BIP_CHECK(!images.empty()) << "no images";
  const int dim = model.config().out_dim;
  std::vector<float> out;
  out.reserve(images.size() * size_t(dim));
  const size_t chunk = 64;
  for (size_t start = 0; start < images.size(); start += chunk) {
    const size_t end = std::min(images.size(), start + chunk);
    std::vector<EncoderImage> batch(images.begin() + start,
                                    images.begin() + end);
    Graph g;
    GraphBinder binder(&g, store);
    TRef emb = model.EncodeImages(&binder, batch);
    const auto& v = g.value(emb);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

RecallReport RecallMetrics(
    const std::vector<std::vector<TextIndex::Hit>>& results,
    const std::vector<TextUnit>& ground_truth, const std::vector<int>& ks) {
  if (results.empty() || results.size() != ground_truth.size())
    Throw(ErrorCode::kData, "MissingGroundTruth: need one truth per query");
  RecallReport report;
  for (int k : ks) {
    int hits = 0;
    for (size_t q = 0; q < results.size(); ++q) {
      const auto& ranked = results[q];
      for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i)
        if (ranked[i].unit == ground_truth[q]) {
          ++hits;
          break;
        }
    }
    report.recall_at[k] = double(hits) / results.size();
  }
  for (const auto& [k, r] : report.recall_at) {
    (void)k;
    report.mean_r += r;
  }
  report.mean_r /= report.recall_at.size();
  return report;
}

}  // namespace bip
