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

#ifndef BIP_I2T_I2T_H_
#define BIP_I2T_I2T_H_

#include <string>
#include <vector>

#include "braille/dataset.h"
#include "braille/render.h"
#include "braille/table.h"
#include "tensor/layers.h"

namespace bip {

// Desk-scale dual encoder. The paper's ViT-H/14 and RoBERTa-large sit out
// of scope; these defaults train on a CPU in minutes.
struct I2TConfig {
  int patch = 8;
  int embed_dim = 64;
  int heads = 4;
  int blocks = 2;
  int out_dim = 64;
  int context_length = 52;
  int downscale = 2;       // box-average factor applied before patching
  int canvas_width = 64;   // padded canvas after downscaling
  int canvas_height = 40;
  int batch_size = 64;
  int epochs = 25;
  float lr = 1e-3f;  // desk-scale from-scratch rate; the paper's 3e-6
                     // belongs to fine-tuning a pretrained giant
  uint64_t seed = 1;
  float temperature_init = 0.07f;  // logits are p / temperature, learnable

  int patches_x() const { return canvas_width / patch; }
  int patches_y() const { return canvas_height / patch; }
  int num_patches() const { return patches_x() * patches_y(); }
  void Validate() const;
};

// Grayscale canvas normalized to [0,1] ink coverage, fixed canvas size.
struct EncoderImage {
  std::vector<float> pixels;  // canvas_height x canvas_width
};

EncoderImage PrepareImage(const BrailleImage& img, const I2TConfig& cfg);

class I2TModel {
 public:
  explicit I2TModel(const I2TConfig& cfg) : cfg_(cfg) {}

  // (B, out_dim), rows L2-normalized.
  TRef EncodeImages(GraphBinder* b, const std::vector<EncoderImage>& images) const;
  TRef EncodeTexts(GraphBinder* b, const std::vector<std::vector<int>>& tokens,
                   int vocab_size) const;

  // p[i][j] = a_i . b_j / temperature with a learnable log inverse
  // temperature. Off-diagonals are the in-batch negatives.
  TRef SimilarityLogits(GraphBinder* b, TRef img_emb, TRef txt_emb) const;

  // Raw dot products of two embedding matrices (no temperature).
  static std::vector<float> CosineMatrix(const std::vector<float>& a,
                                         const std::vector<float>& b, int dim);

  const I2TConfig& config() const { return cfg_; }

 private:
  I2TConfig cfg_;
};

struct ContrastiveLosses {
  TRef loss_i, loss_t, loss_it;
};

// Eqs of the symmetric objective: row-wise and column-wise cross entropy
// against the diagonal pairing, averaged.
ContrastiveLosses ContrastiveLoss(Graph* g, TRef logits);

// Fraction of rows whose argmax is the diagonal.
double BatchArgmaxAccuracy(const std::vector<float>& logits, int batch);

struct I2TCurveRow {
  int epoch;
  double loss_i, loss_t, loss_it, acc;
};

struct I2TTrainResult {
  std::vector<I2TCurveRow> curve;
};

// Adam over seeded shuffled batches of the train split; per-epoch curve
// appended to `curve` and optionally written as CSV.
I2TTrainResult TrainI2T(const Manifest& manifest, const I2TConfig& cfg,
                        const EncodingTable& table, ParamStore* store,
                        const std::string& curve_csv_path = "");

std::string I2TCurveCsv(const std::vector<I2TCurveRow>& curve);

}  // namespace bip

#endif  // BIP_I2T_I2T_H_
