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

#include "eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "common/error.h"
#include "common/io.h"

namespace bip {

double AccFromSimilarity(const std::vector<float>& matrix, int batch) {
  if (batch <= 0 || matrix.size() != size_t(batch) * batch)
    Throw(ErrorCode::kUsage, "EmptyInput: need a nonempty square matrix");
  int correct = 0;
  for (int i = 0; i < batch; ++i) {
    int arg = 0;
    for (int j = 1; j < batch; ++j)
      if (matrix[size_t(i) * batch + j] > matrix[size_t(i) * batch + arg])
        arg = j;
    if (arg == i) ++correct;
  }
  return double(correct) / batch;
}

double AccFromLabelPairs(const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) Throw(ErrorCode::kUsage, "EmptyInput: no label pairs");
  int correct = 0;
  for (const auto& [predicted, truth] : pairs)
    if (predicted == truth) ++correct;
  return double(correct) / pairs.size();
}

double Wer(const std::vector<WerUtterance>& utterances) {
  if (utterances.empty()) Throw(ErrorCode::kUsage, "ZeroLength: no utterances");
  double sum = 0;
  for (const auto& u : utterances) {
    if (u.total <= 0 || u.wrong < 0 || u.wrong > u.total)
      Throw(ErrorCode::kUsage, "ZeroLength: bad utterance counts");
    sum += double(u.wrong) / u.total;
  }
  return sum / utterances.size();
}

WerUtterance CountWrongUnits(const std::vector<std::string>& reference,
                             const std::vector<std::string>& hypothesis) {
  WerUtterance out;
  out.total = static_cast<int>(reference.size());
  const size_t common = std::min(reference.size(), hypothesis.size());
  for (size_t i = 0; i < common; ++i)
    if (reference[i] != hypothesis[i]) ++out.wrong;
  out.wrong += static_cast<int>(reference.size() - common);
  out.wrong = std::min(out.wrong, out.total);
  return out;
}

double Mos(const std::array<int, 5>& level_counts) {
  int total = 0;
  double weighted = 0;
  for (int level = 1; level <= 5; ++level) {
    const int count = level_counts[level - 1];
    if (count < 0) Throw(ErrorCode::kUsage, "NoRatings: negative count");
    total += count;
    weighted += double(level) * count;
  }
  if (total == 0) Throw(ErrorCode::kUsage, "NoRatings: empty tally");
  return weighted / total;
}

std::array<int, 5> ParseRatingsCsv(const std::string& csv_text) {
  std::array<int, 5> tally{};
  int lineno = 0;
  for (const auto& raw : SplitString(csv_text, '\n')) {
    ++lineno;
    const std::string line = TrimString(raw);
    if (line.empty()) continue;
    auto fields = SplitString(line, ',');
    if (fields.size() != 3)
      Throw(ErrorCode::kData,
            "ratings line " + std::to_string(lineno) + ": need 3 fields");
    if (lineno == 1 && fields[2] == "score") continue;  // header
    const int score = std::stoi(fields[2]);
    if (score < 1 || score > 5)
      Throw(ErrorCode::kData,
            "ratings line " + std::to_string(lineno) + ": score out of 1..5");
    ++tally[score - 1];
  }
  return tally;
}

namespace {

std::map<std::string, int> NgramCounts(const std::vector<std::string>& tokens,
                                       int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) key += tokens[i + j] + "\x1f";
    ++counts[key];
  }
  return counts;
}

}  // namespace

double Bleu4(const std::vector<std::vector<std::string>>& references,
             const std::vector<std::vector<std::string>>& hypotheses) {
  if (references.empty() || references.size() != hypotheses.size())
    Throw(ErrorCode::kUsage, "EmptyCorpus: need aligned nonempty corpora");

  int64_t ref_len = 0, hyp_len = 0;
  int64_t matched[5] = {0, 0, 0, 0, 0};
  int64_t total[5] = {0, 0, 0, 0, 0};
  for (size_t s = 0; s < references.size(); ++s) {
    ref_len += references[s].size();
    hyp_len += hypotheses[s].size();
    for (int n = 1; n <= 4; ++n) {
      auto ref = NgramCounts(references[s], n);
      auto hyp = NgramCounts(hypotheses[s], n);
      for (const auto& [key, count] : hyp) {
        total[n] += count;
        auto it = ref.find(key);
        if (it != ref.end()) matched[n] += std::min(count, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_precision = 0;
  int levels = 0;
  for (int n = 1; n <= 4; ++n) {
    if (total[n] == 0) continue;  // corpus too short for this order
    double p;
    if (matched[n] > 0)
      p = double(matched[n]) / total[n];
    else if (n == 1)
      return 0.0;  // no unigram overlap at all
    else
      p = 1.0 / (total[n] + 1);  // add-one smoothing for empty matches
    log_precision += std::log(p);
    ++levels;
  }
  if (levels == 0) return 0.0;
  const double brevity =
      hyp_len < ref_len ? std::exp(1.0 - double(ref_len) / hyp_len) : 1.0;
  return brevity * std::exp(log_precision / levels);
}

}  // namespace bip
