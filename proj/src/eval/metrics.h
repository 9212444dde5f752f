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

#ifndef BIP_EVAL_METRICS_H_
#define BIP_EVAL_METRICS_H_

#include <array>
#include <string>
#include <vector>

namespace bip {

// Retrieval accuracy on a square similarity matrix: a sample counts as
// correct when its row argmax sits on the diagonal.
double AccFromSimilarity(const std::vector<float>& matrix, int batch);

// Accuracy over (predicted, true) label pairs.
double AccFromLabelPairs(const std::vector<std::pair<int, int>>& pairs);

struct WerUtterance {
  int wrong = 0;
  int total = 0;
};

// Macro-average of per-utterance wrong/total fractions (the paper's
// formula, not edit-distance WER).
double Wer(const std::vector<WerUtterance>& utterances);

// Position-wise comparison of syllable sequences; length mismatches
// count as wrong units against the reference length.
WerUtterance CountWrongUnits(const std::vector<std::string>& reference,
                             const std::vector<std::string>& hypothesis);

// Mean opinion score over a 1..5 tally.
double Mos(const std::array<int, 5>& level_counts);

// Ratings arrive as CSV lines "rater_id,utterance_id,score".
std::array<int, 5> ParseRatingsCsv(const std::string& csv_text);

// Corpus BLEU, n <= 4, brevity penalty; zero-match counts above n=1 get
// add-one smoothing so only a unigram wipeout yields an exact 0.
double Bleu4(const std::vector<std::vector<std::string>>& references,
             const std::vector<std::vector<std::string>>& hypotheses);

}  // namespace bip

#endif  // BIP_EVAL_METRICS_H_
