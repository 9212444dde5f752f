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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "braille/dataset.h"
#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"
#include "doctest.h"
#include "i2t/i2t.h"
#include "knn/knn.h"
#include "tensor/gradcheck.h"
#include "testutil.h"

using namespace bip;

namespace {

I2TConfig TinyConfig() {
  I2TConfig cfg;
  cfg.embed_dim = 32;
  cfg.heads = 4;
  cfg.blocks = 1;
  cfg.out_dim = 32;
  cfg.batch_size = 16;
  cfg.epochs = 60;
  cfg.seed = 3;
  return cfg;
}

EncoderImage RenderUnit(const TextUnit& u, const I2TConfig& cfg,
                        uint64_t jitter_seed = 0) {
  RenderStyle style;
  style.jitter = 0.5;
  style.jitter_seed = jitter_seed;
  return PrepareImage(
      RenderCells(EncodingTable::Builtin().UnitToCells(u), style), cfg);
}

}  // namespace

TEST_CASE("image encoder output is normalized and deterministic") {
  I2TConfig cfg = TinyConfig();
  ParamStore store(1);
  I2TModel model(cfg);
  auto img = RenderUnit(TextUnit::Spell("h", "ao", 3), cfg);

  Graph g;
  GraphBinder binder(&g, &store);
  TRef emb = model.EncodeImages(&binder, {img, img});
  const auto& v = g.value(emb);
  REQUIRE(v.size() == size_t(2 * cfg.out_dim));
  for (int d = 0; d < cfg.out_dim; ++d)
    CHECK(v[d] == v[cfg.out_dim + d]);  // identical inputs, identical rows
  double norm = 0;
  for (int d = 0; d < cfg.out_dim; ++d) norm += double(v[d]) * v[d];
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));

  // Blank vs full-dot cells do not collapse at seeded init.
  auto blank = RenderUnit(TextUnit::Punct(","), cfg);
  auto full = RenderUnit(TextUnit::Number("88"), cfg);
  Graph g2;
  GraphBinder b2(&g2, &store);
  TRef pair = model.EncodeImages(&b2, {blank, full});
  const auto& pv = g2.value(pair);
  double cos = 0;
  for (int d = 0; d < cfg.out_dim; ++d)
    cos += double(pv[d]) * pv[cfg.out_dim + d];
  CHECK(cos < 0.99);
}

TEST_CASE("text encoder masks padding and rejects bad tokens") {
  I2TConfig cfg = TinyConfig();
  const auto& table = EncodingTable::Builtin();
  ParamStore store(2);
  I2TModel model(cfg);
  auto tokens = table.Tokenize(TextUnit::Spell("sh", "uang", 1),
                               cfg.context_length);

  Graph g;
  GraphBinder binder(&g, &store);
  TRef a = model.EncodeTexts(&binder, {tokens}, table.vocab_size());
  // Permuting the PAD region is a no-op on the sequence and the embedding.
  auto permuted = tokens;
  std::swap(permuted[cfg.context_length - 1], permuted[cfg.context_length - 5]);
  Graph g2;
  GraphBinder b2(&g2, &store);
  TRef b = model.EncodeTexts(&b2, {permuted}, table.vocab_size());
  CHECK(g.value(a) == g2.value(b));

  double norm = 0;
  for (float x : g.value(a)) norm += double(x) * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));

  auto bad = tokens;
  bad[1] = table.vocab_size() + 5;
  Graph g3;
  GraphBinder b3(&g3, &store);
  CHECK_THROWS_AS(model.EncodeTexts(&b3, {bad}, table.vocab_size()), Error);
}

TEST_CASE("similarity of orthonormal embeddings is a scaled identity") {
  I2TConfig cfg = TinyConfig();
  cfg.out_dim = 4;
  ParamStore store(3);
  I2TModel model(cfg);
  Graph g;
  GraphBinder binder(&g, &store);
  std::vector<float> eye(16, 0.0f);
  for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
  TRef a = g.Leaf({4, 4}, eye);
  TRef b = g.Leaf({4, 4}, eye);
  TRef p = model.SimilarityLogits(&binder, a, b);
  const auto& v = g.value(p);
  const double inv_t = 1.0 / cfg.temperature_init;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(v[i * 4 + j] ==
            doctest::Approx(i == j ? inv_t : 0.0).epsilon(1e-3));

  // Symmetry: sim(A,B) is the transpose of sim(B,A).
  Rng rng(5);
  std::vector<float> am(12), bm(12);
  for (auto& x : am) x = rng.NextFloat(-1, 1);
  for (auto& x : bm) x = rng.NextFloat(-1, 1);
  TRef ra = g.Leaf({3, 4}, am);
  TRef rb = g.Leaf({3, 4}, bm);
  const auto& ab = g.value(model.SimilarityLogits(&binder, ra, rb));
  const auto& ba = g.value(model.SimilarityLogits(&binder, rb, ra));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(ab[i * 3 + j] == doctest::Approx(ba[j * 3 + i]));

  // B=1 still yields a 1x1 matrix.
  TRef one = g.Leaf({1, 4}, std::vector<float>{1, 0, 0, 0});
  CHECK(g.node(model.SimilarityLogits(&binder, one, one)).shape ==
        Shape{1, 1});
}

TEST_CASE("contrastive loss equals a hand-computed cross entropy") {
  Graph g;
  // p = large identity: both directions saturate to zero loss.
  std::vector<float> strong(9, 0.0f);
  for (int i = 0; i < 3; ++i) strong[i * 3 + i] = 50.0f;
  auto big = ContrastiveLoss(&g, g.Leaf({3, 3}, strong));
  CHECK(g.scalar(big.loss_it) == doctest::Approx(0.0).epsilon(1e-6));

  // All-zero 4x4 matrix: uniform softmax, loss = ln 4 both ways.
  auto zero = ContrastiveLoss(&g, g.Leaf({4, 4}, std::vector<float>(16, 0.0f)));
  CHECK(g.scalar(zero.loss_i) == doctest::Approx(std::log(4.0)));
  CHECK(g.scalar(zero.loss_t) == doctest::Approx(std::log(4.0)));

  // Random 3x3 against brute force.
  Rng rng(7);
  std::vector<float> m(9);
  for (auto& x : m) x = rng.NextFloat(-2, 2);
  auto losses = ContrastiveLoss(&g, g.Leaf({3, 3}, m));
  auto ce = [&](bool rows) {
    double total = 0;
    for (int i = 0; i < 3; ++i) {
      double denom = 0;
      for (int j = 0; j < 3; ++j)
        denom += std::exp(double(rows ? m[i * 3 + j] : m[j * 3 + i]));
      total += -std::log(std::exp(double(m[i * 3 + i])) / denom);
    }
    return total / 3;
  };
  CHECK(g.scalar(losses.loss_i) == doctest::Approx(ce(true)).epsilon(1e-5));
  CHECK(g.scalar(losses.loss_t) == doctest::Approx(ce(false)).epsilon(1e-5));
  // The averaging identity holds exactly in f32.
  CHECK(g.scalar(losses.loss_it) ==
        0.5f * (g.scalar(losses.loss_i) + g.scalar(losses.loss_t)));

  CHECK_THROWS_AS(ContrastiveLoss(&g, g.Leaf({2, 3}, std::vector<float>(6))),
                  Error);
}

TEST_CASE("composed contrastive loss passes grad_check") {
  I2TConfig cfg;
  cfg.patch = 8;
  cfg.canvas_width = 16;
  cfg.canvas_height = 8;
  cfg.embed_dim = 8;
  cfg.heads = 2;
  cfg.blocks = 1;
  cfg.out_dim = 8;
  cfg.context_length = 6;
  ParamStore store(11);
  I2TModel model(cfg);

  std::vector<EncoderImage> images(2);
  Rng rng(13);
  for (auto& img : images) {
    img.pixels.resize(16 * 8);
    for (auto& p : img.pixels) p = rng.NextFloat(0.0f, 1.0f);
  }
  std::vector<std::vector<int>> tokens = {{1, 5, 7, 2, 0, 0},
                                          {1, 9, 4, 6, 2, 0}};
  Graph g;
  GraphBinder binder(&g, &store);
  TRef img = model.EncodeImages(&binder, images);
  TRef txt = model.EncodeTexts(&binder, tokens, 16);
  auto losses = ContrastiveLoss(&g, model.SimilarityLogits(&binder, img, txt));

  std::vector<std::pair<std::string, TRef>> probes;
  for (const auto& [name, id] : binder.bound())
    probes.emplace_back(name, TRef{&g, id});
  GradCheckOptions opt;
  opt.max_coords_per_param = 6;
  opt.h = 1e-4;  // the scaled similarity logits carry strong curvature
  auto report = GradCheck(&g, losses.loss_it, probes, opt);
  CHECK(report.checked > 100);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("one-batch training overfits to full retrieval accuracy") {
  testing::TempDir dir("i2t_overfit");
  const auto& table = EncodingTable::Builtin();
  // Distinct units: duplicate texts would make the contrastive diagonal
  // unreachable by construction.
  std::vector<TextUnit> units = {
      TextUnit::Spell("h", "ao", 3),  TextUnit::Spell("b", "a", 1),
      TextUnit::Spell("sh", "an", 4), TextUnit::Spell("", "e", 2),
      TextUnit::Spell("x", "iong", 1), TextUnit::Spell("l", "v", 3),
      TextUnit::Spell("z", "uan", 2), TextUnit::Spell("m", "ing", 4),
      TextUnit::Number("7"),          TextUnit::Number("24"),
      TextUnit::Number("90"),         TextUnit::Number("3"),
      TextUnit::Number("55"),         TextUnit::Number("18"),
      TextUnit::Punct("!"),           TextUnit::Punct(";")};
  Manifest manifest;
  manifest.base_dir = dir.path();
  EnsureDir(dir.File("images"));
  RenderStyle style;
  style.jitter = 0.5;
  for (size_t i = 0; i < units.size(); ++i) {
    ManifestRecord r;
    r.id = "u" + std::to_string(i);
    r.image = "images/" + r.id + ".pgm";
    r.unit = units[i];
    r.split = "train";
    style.jitter_seed = 100 + i;
    WritePgm(manifest.ImagePath(r), RenderCells(table.UnitToCells(r.unit), style));
    manifest.records.push_back(r);
  }

  I2TConfig cfg = TinyConfig();
  cfg.epochs = 150;
  ParamStore store(17);
  auto result = TrainI2T(manifest, cfg, table, &store, dir.File("curve.csv"));
  REQUIRE(result.curve.size() == size_t(cfg.epochs));
  CHECK(result.curve.back().acc == doctest::Approx(1.0));
  CHECK(result.curve.back().loss_it < 0.2 * result.curve.front().loss_it);
  // Identity of the averaged loss on every epoch row.
  for (const auto& row : result.curve)
    CHECK(row.loss_it == doctest::Approx(0.5 * (row.loss_i + row.loss_t)));

  // KNN over the trained encoder: every train image retrieves its text.
  std::vector<TextUnit> candidates;
  std::vector<EncoderImage> images;
  for (const auto& r : manifest.records) {
    candidates.push_back(r.unit);
    images.push_back(PrepareImage(ReadPgm(manifest.ImagePath(r)), cfg));
  }
  I2TModel model(cfg);
  auto index = BuildTextIndex(candidates, model, &store, table);
  auto embs = EmbedImages(images, model, &store);
  int top1 = 0;
  for (size_t i = 0; i < images.size(); ++i) {
    std::vector<float> e(embs.begin() + i * cfg.out_dim,
                         embs.begin() + (i + 1) * cfg.out_dim);
    auto hits = index.Query(e, 1);
    if (hits[0].unit == manifest.records[i].unit) ++top1;
  }
  CHECK(double(top1) / images.size() >= 0.95);
}

TEST_CASE("training on an empty manifest fails cleanly") {
  Manifest empty;
  ParamStore store(1);
  CHECK_THROWS_AS(TrainI2T(empty, TinyConfig(), EncodingTable::Builtin(),
                           &store, ""),
                  Error);
}

TEST_CASE("index deduplicates, rebuilds identically, queries stably") {
  I2TConfig cfg = TinyConfig();
  const auto& table = EncodingTable::Builtin();
  ParamStore store(23);
  I2TModel model(cfg);

  std::vector<TextUnit> candidates = {
      TextUnit::Number("1"), TextUnit::Number("2"), TextUnit::Number("1"),
      TextUnit::Punct("!")};
  auto index = BuildTextIndex(candidates, model, &store, table);
  CHECK(index.size() == 3);  // duplicate removed

  auto index2 = BuildTextIndex(candidates, model, &store, table);
  CHECK(index.embeddings() == index2.embeddings());

  // Querying with an entry's own embedding returns that entry first.
  for (int i = 0; i < index.size(); ++i) {
    std::vector<float> e(index.embeddings().begin() + size_t(i) * index.dim(),
                         index.embeddings().begin() +
                             size_t(i + 1) * index.dim());
    auto hits = index.Query(e, index.size());
    CHECK(hits[0].unit == index.units()[i]);
    CHECK(hits[0].p == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(hits.size() == size_t(index.size()));  // permutation of all entries
  }

  // Ranking is invariant under positive scaling of the query.
  std::vector<float> q(index.dim());
  Rng rng(9);
  for (auto& x : q) x = rng.NextFloat(-1, 1);
  auto base = index.Query(q, index.size());
  auto scaled_q = q;
  for (auto& x : scaled_q) x *= 7.25f;
  auto scaled = index.Query(scaled_q, index.size());
  for (int i = 0; i < index.size(); ++i)
    CHECK(base[i].index == scaled[i].index);

  CHECK_THROWS_AS(index.Query(q, 0), Error);
  CHECK_THROWS_AS(index.Query(q, index.size() + 1), Error);
  CHECK_THROWS_AS(
      BuildTextIndex({}, model, &store, table), Error);

  // Exact ties keep insertion order.
  TextIndex tie({TextUnit::Number("1"), TextUnit::Number("2")},
                {1, 0, 1, 0}, 2);
  auto hits = tie.Query({1, 0}, 2);
  CHECK(hits[0].index == 0);
  CHECK(hits[1].index == 1);
}

TEST_CASE("recall metrics are hit rates, nondecreasing in k") {
  using Hit = TextIndex::Hit;
  auto mk = [](std::vector<std::string> ids) {
    std::vector<Hit> hits;
    for (const auto& id : ids) hits.push_back({TextUnit::Number(id), 0.5f, 0});
    return hits;
  };
  std::vector<std::vector<Hit>> results = {
      mk({"1", "2", "3", "4", "5"}), mk({"2", "1", "3", "4", "5"}),
      mk({"3", "9", "1", "4", "5"}), mk({"4", "2", "3", "1", "5"})};
  std::vector<TextUnit> gt = {TextUnit::Number("1"), TextUnit::Number("2")};
  CHECK_THROWS_AS(RecallMetrics(results, gt, {1, 5}), Error);

  gt = {TextUnit::Number("1"), TextUnit::Number("1"), TextUnit::Number("1"),
        TextUnit::Number("1")};
  auto report = RecallMetrics(results, gt, {1, 5});
  // 1 of 4 hit at rank 1; all 4 within rank 5.
  CHECK(report.recall_at[1] == doctest::Approx(0.25));
  CHECK(report.recall_at[5] == doctest::Approx(1.0));
  CHECK(report.mean_r == doctest::Approx(0.625));
  CHECK(report.recall_at[1] <= report.recall_at[5]);

  // The spec's hand count: 3 of 4 in top-1, 4 of 4 in top-5.
  gt = {TextUnit::Number("1"), TextUnit::Number("2"), TextUnit::Number("3"),
        TextUnit::Number("1")};
  auto r2 = RecallMetrics(results, gt, {1, 5});
  CHECK(r2.recall_at[1] == doctest::Approx(0.75));
  CHECK(r2.recall_at[5] == doctest::Approx(1.0));
  CHECK(r2.mean_r == doctest::Approx(0.875));

  // All queries hitting at rank 1.
  gt = {TextUnit::Number("1"), TextUnit::Number("2"), TextUnit::Number("3"),
        TextUnit::Number("4")};
  auto r3 = RecallMetrics(results, gt, {1, 5});
  CHECK(r3.recall_at[1] == doctest::Approx(1.0));
  CHECK(r3.mean_r == doctest::Approx(1.0));
}
