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

#include "i2t/i2t.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"

namespace bip {

void I2TConfig::Validate() const {
  if (embed_dim % heads != 0)
    Throw(ErrorCode::kUsage, "embed_dim must be divisible by heads");
  if (canvas_width % patch != 0 || canvas_height % patch != 0)
    Throw(ErrorCode::kUsage, "canvas must be a multiple of the patch size");
  if (downscale < 1 || batch_size < 2 || epochs < 1 || context_length < 4)
    Throw(ErrorCode::kUsage, "bad i2t config");
}

EncoderImage PrepareImage(const BrailleImage& img, const I2TConfig& cfg) {
  cfg.Validate();
  const int dw = (img.width + cfg.downscale - 1) / cfg.downscale;
  const int dh = (img.height + cfg.downscale - 1) / cfg.downscale;
  if (dw > cfg.canvas_width || dh > cfg.canvas_height)
    Throw(ErrorCode::kData,
          "image exceeds the encoder canvas: " + std::to_string(img.width) +
              "x" + std::to_string(img.height));
  EncoderImage out;
  out.pixels.assign(size_t(cfg.canvas_width) * cfg.canvas_height, 0.0f);
  for (int y = 0; y < dh; ++y)
    for (int x = 0; x < dw; ++x) {
      // Box average of the downscale x downscale block; ink = darkness.
      double acc = 0;
      int count = 0;
      for (int sy = 0; sy < cfg.downscale; ++sy)
        for (int sx = 0; sx < cfg.downscale; ++sx) {
          const int iy = y * cfg.downscale + sy;
          const int ix = x * cfg.downscale + sx;
          if (iy >= img.height || ix >= img.width) continue;
          acc += img.pixels[size_t(iy) * img.width + ix];
          ++count;
        }
      out.pixels[size_t(y) * cfg.canvas_width + x] =
          float((255.0 - acc / count) / 255.0);
    }
  return out;
}

TRef I2TModel::EncodeImages(GraphBinder* b,
                            const std::vector<EncoderImage>& images) const {
  Graph* g = b->graph();
  const int bsz = static_cast<int>(images.size());
  BIP_CHECK(bsz > 0) << "empty image batch";
  const int p = cfg_.patch;
  const int px = cfg_.patches_x(), py = cfg_.patches_y();
  const int np = cfg_.num_patches();
  const int ppx = p * p;

  // Patchify outside the tape; pixels are constants.
  std::vector<float> patches(size_t(bsz) * np * ppx);
  for (int i = 0; i < bsz; ++i) {
    BIP_CHECK(images[i].pixels.size() ==
              size_t(cfg_.canvas_width) * cfg_.canvas_height)
        << "image " << i << " not prepared for this canvas";
    for (int ty = 0; ty < py; ++ty)
      for (int tx = 0; tx < px; ++tx) {
        const int pi = ty * px + tx;
        for (int sy = 0; sy < p; ++sy)
          for (int sx = 0; sx < p; ++sx)
            patches[(size_t(i) * np + pi) * ppx + sy * p + sx] =
                images[i].pixels[size_t(ty * p + sy) * cfg_.canvas_width +
                                 tx * p + sx];
      }
  }

  TRef x = g->Leaf({bsz * np, ppx}, std::move(patches));
  x = Linear(b, "i2t.img.proj", x, ppx, cfg_.embed_dim);
  x = g->Reshape(x, {bsz, np, cfg_.embed_dim});
  x = AddPositional(b, "i2t.img.pos", x, np, cfg_.embed_dim);
  for (int blk = 0; blk < cfg_.blocks; ++blk)
    x = AttentionBlock(b, "i2t.img.block" + std::to_string(blk), x,
                       cfg_.embed_dim, cfg_.heads);
  x = LayerNormed(b, "i2t.img.ln_out", x, cfg_.embed_dim);
  TRef pooled = g->MeanPool(x);  // global average over patches
  TRef head = Linear(b, "i2t.img.head", pooled, cfg_.embed_dim, cfg_.out_dim);
  return g->L2Normalize(head);
}

TRef I2TModel::EncodeTexts(GraphBinder* b,
                           const std::vector<std::vector<int>>& tokens,
                           int vocab_size) const {
  Graph* g = b->graph();
  const int bsz = static_cast<int>(tokens.size());
  BIP_CHECK(bsz > 0) << "empty text batch";
  const int t = cfg_.context_length;
  std::vector<int> flat;
  std::vector<uint8_t> nonpad;
  flat.reserve(size_t(bsz) * t);
  for (const auto& seq : tokens) {
    BIP_CHECK(static_cast<int>(seq.size()) == t) << "token length";
    for (int id : seq) {
      flat.push_back(id);
      nonpad.push_back(id != EncodingTable::kPadId);
    }
  }
  TRef table = b->P("i2t.txt.embed", {vocab_size, cfg_.embed_dim},
                    ParamInit::Uniform(cfg_.embed_dim));
  TRef x = g->Embedding(table, flat, {bsz, t});
  x = AddPositional(b, "i2t.txt.pos", x, t, cfg_.embed_dim);
  for (int blk = 0; blk < cfg_.blocks; ++blk)
    x = AttentionBlock(b, "i2t.txt.block" + std::to_string(blk), x,
                       cfg_.embed_dim, cfg_.heads);
  x = LayerNormed(b, "i2t.txt.ln_out", x, cfg_.embed_dim);
  TRef pooled = g->MeanPool(x, nonpad);  // mean over non-PAD positions
  TRef head = Linear(b, "i2t.txt.head", pooled, cfg_.embed_dim, cfg_.out_dim);
  return g->L2Normalize(head);
}

TRef I2TModel::SimilarityLogits(GraphBinder* b, TRef img_emb,
                                TRef txt_emb) const {
  Graph* g = b->graph();
  const Shape& a = g->node(img_emb).shape;
  const Shape& t = g->node(txt_emb).shape;
  if (a != t) Throw(ErrorCode::kUsage, "ShapeMismatch: embedding batches");
  TRef scale = b->P("i2t.logit_scale", {1},
                    ParamInit::Const(std::log(1.0 / cfg_.temperature_init)));
  TRef p = g->MatMul(img_emb, g->TransposeLast2(txt_emb));
  return g->Mul(p, g->Exp(scale));
}

std::vector<float> I2TModel::CosineMatrix(const std::vector<float>& a,
                                          const std::vector<float>& b,
                                          int dim) {
  BIP_CHECK(a.size() % dim == 0 && b.size() % dim == 0) << "embedding dims";
  const int n = static_cast<int>(a.size()) / dim;
  const int m = static_cast<int>(b.size()) / dim;
  std::vector<float> out(size_t(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0;
      for (int d = 0; d < dim; ++d)
        acc += double(a[size_t(i) * dim + d]) * b[size_t(j) * dim + d];
      out[size_t(i) * m + j] = float(acc);
    }
  return out;
}

ContrastiveLosses ContrastiveLoss(Graph* g, TRef logits) {
  const Shape& s = g->node(logits).shape;
  if (s.size() != 2 || s[0] != s[1])
    Throw(ErrorCode::kUsage, "NonSquare: similarity matrix " +
                                 ShapeToString(s));
  std::vector<int> diag(s[0]);
  for (int i = 0; i < s[0]; ++i) diag[i] = i;
  ContrastiveLosses out;
  out.loss_i = g->CrossEntropy(logits, diag);
  out.loss_t = g->CrossEntropy(g->TransposeLast2(logits), diag);
  out.loss_it = g->Scale(g->Add(out.loss_i, out.loss_t), 0.5);
  return out;
}

double BatchArgmaxAccuracy(const std::vector<float>& logits, int batch) {
  BIP_CHECK(logits.size() == size_t(batch) * batch) << "square matrix";
  int correct = 0;
  for (int i = 0; i < batch; ++i) {
    int arg = 0;
    for (int j = 1; j < batch; ++j)
      if (logits[size_t(i) * batch + j] > logits[size_t(i) * batch + arg])
        arg = j;
    if (arg == i) ++correct;
  }
  return double(correct) / batch;
}

std::string I2TCurveCsv(const std::vector<I2TCurveRow>& curve) {
  std::ostringstream out;
  out << "epoch,loss_i,loss_t,loss_it,acc\n";
  for (const auto& r : curve)
    out << r.epoch << "," << FormatFloat(r.loss_i) << ","
        << FormatFloat(r.loss_t) << "," << FormatFloat(r.loss_it) << ","
        << FormatFloat(r.acc) << "\n";
  return out.str();
}

I2TTrainResult TrainI2T(const Manifest& manifest, const I2TConfig& cfg,
                        const EncodingTable& table, ParamStore* store,
                        const std::string& curve_csv_path) {
  cfg.Validate();
  auto records = manifest.Split("train");
  if (records.empty())
    Throw(ErrorCode::kData, "EmptyDataset: no train records");

  std::vector<EncoderImage> images;
  std::vector<std::vector<int>> tokens;
  images.reserve(records.size());
  for (const auto& r : records) {
    images.push_back(PrepareImage(ReadPgm(manifest.ImagePath(r)), cfg));
    tokens.push_back(table.Tokenize(r.unit, cfg.context_length));
  }

  I2TModel model(cfg);
  Adam adam(AdamConfig{cfg.lr, 0.9f, 0.999f, 1e-8f});
  Rng rng(cfg.seed);
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  I2TTrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    double sum_i = 0, sum_t = 0, sum_it = 0, sum_acc = 0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) continue;  // contrastive needs negatives
      std::vector<EncoderImage> bi;
      std::vector<std::vector<int>> bt;
      for (size_t i = start; i < end; ++i) {
        bi.push_back(images[order[i]]);
        bt.push_back(tokens[order[i]]);
      }
      Graph g;
      GraphBinder binder(&g, store);
      TRef img = model.EncodeImages(&binder, bi);
      TRef txt = model.EncodeTexts(&binder, bt, table.vocab_size());
      TRef logits = model.SimilarityLogits(&binder, img, txt);
      auto losses = ContrastiveLoss(&g, logits);
      const double li = g.scalar(losses.loss_i);
      const double lt = g.scalar(losses.loss_t);
      const double lit = g.scalar(losses.loss_it);
      if (!std::isfinite(lit))
        Throw(ErrorCode::kNumeric, "DivergedLoss: non-finite contrastive loss");
      g.Backward(losses.loss_it);
      adam.Step(g, binder);
      sum_i += li;
      sum_t += lt;
      sum_it += lit;
      sum_acc +=
          BatchArgmaxAccuracy(g.value(logits), static_cast<int>(end - start));
      ++batches;
    }
    BIP_CHECK(batches > 0) << "batch size larger than dataset";
    result.curve.push_back({epoch, sum_i / batches, sum_t / batches,
                            sum_it / batches, sum_acc / batches});
  }
  if (!curve_csv_path.empty())
    WriteFileOrThrow(curve_csv_path, I2TCurveCsv(result.curve));
  return result;
}

}  // namespace bip
