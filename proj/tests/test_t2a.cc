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
#include <cstring>

#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"
#include "doctest.h"
#include "dsp/oracle.h"
#include "t2a/t2a.h"
#include "tensor/gradcheck.h"
#include "testutil.h"

using namespace bip;

namespace {

T2AConfig TinyConfig() {
  T2AConfig cfg;
  cfg.hidden = 32;
  cfg.heads = 4;
  cfg.enc_blocks = 1;
  cfg.dec_blocks = 1;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 5;
  return cfg;
}

std::vector<T2ASample> OracleSamples(const std::vector<TextUnit>& units,
                                     const PhonemeVocab& vocab,
                                     const DspConfig& dsp) {
  std::vector<T2ASample> out;
  for (size_t i = 0; i < units.size(); ++i)
    out.push_back(
        PrepareT2ASample(SynthOracle({units[i]}, 40 + i, dsp), vocab));
  return out;
}

}  // namespace

TEST_CASE("teacher-forced forward conserves frame counts") {
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Spell("h", "ao", 3),
                                TextUnit::Number("24"), TextUnit::Punct("!")},
                               vocab, dsp);
  T2AConfig cfg = TinyConfig();
  ParamStore store(1);
  T2AModel model(cfg);
  Graph g;
  GraphBinder binder(&g, &store);
  auto fwd = model.ForwardTeacher(&binder, samples, vocab.size());

  int tmax = 0;
  for (const auto& s : samples) {
    int total = 0;
    for (int d : s.d_target) total += d;
    CHECK(total == s.frames());  // oracle construction
    tmax = std::max(tmax, total);
  }
  CHECK(fwd.tmax == tmax);
  CHECK(g.node(fwd.mel).shape == Shape{3, tmax, cfg.mel_channels});
  CHECK(g.node(fwd.mel_post).shape == g.node(fwd.mel).shape);
  // Valid-frame mask matches each sample's exact frame count.
  for (int i = 0; i < 3; ++i) {
    int frames = 0;
    for (int t = 0; t < fwd.tmax; ++t) frames += fwd.mel_mask[i * fwd.tmax + t];
    CHECK(frames == samples[i].frames());
  }
}

TEST_CASE("variance predictor with zeroed weights outputs zeros") {
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Spell("m", "a", 2)}, vocab, dsp);
  T2AConfig cfg = TinyConfig();
  ParamStore store(2);
  T2AModel model(cfg);
  {
    Graph g;
    GraphBinder binder(&g, &store);
    model.ForwardTeacher(&binder, samples, vocab.size());  // create params
  }
  for (const auto& name : store.Names())
    if (name.rfind("t2a.duration.", 0) == 0)
      std::fill(store.ValueOf(name).begin(), store.ValueOf(name).end(), 0.0f);
  Graph g;
  GraphBinder binder(&g, &store);
  auto fwd = model.ForwardTeacher(&binder, samples, vocab.size());
  for (float v : g.value(fwd.d_pre)) CHECK(v == 0.0f);
  // Output length equals input length.
  CHECK(g.node(fwd.d_pre).shape == Shape{1, 2});
}

TEST_CASE("losses vanish when predictions equal targets and ignore padding") {
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Spell("h", "ao", 3),
                                TextUnit::Spell("", "a", 1)},
                               vocab, dsp);
  T2AConfig cfg = TinyConfig();
  T2AModel model(cfg);
  const auto stats = ComputeMelStats(samples, cfg.mel_channels);

  auto build = [&](float pad_perturbation) {
    auto g = std::make_unique<Graph>();
    T2AForwardOut fwd;
    fwd.smax = 2;
    fwd.tmax = std::max(samples[0].frames(), samples[1].frames());
    const int bsz = 2;
    for (int i = 0; i < bsz; ++i) {
      for (int s = 0; s < fwd.smax; ++s)
        fwd.src_mask.push_back(
            s < static_cast<int>(samples[i].phoneme_ids.size()));
      for (int t = 0; t < fwd.tmax; ++t)
        fwd.mel_mask.push_back(t < samples[i].frames());
    }
    std::vector<float> mel(size_t(bsz) * fwd.tmax * cfg.mel_channels,
                           pad_perturbation);
    std::vector<float> logd(size_t(bsz) * fwd.smax, pad_perturbation);
    std::vector<float> pc(size_t(bsz) * fwd.tmax * cfg.pitch_scales,
                          pad_perturbation);
    std::vector<float> en(size_t(bsz) * fwd.tmax, pad_perturbation);
    for (int i = 0; i < bsz; ++i) {
      const auto& s = samples[i];
      for (int t = 0; t < s.frames(); ++t) {
        for (int m = 0; m < cfg.mel_channels; ++m)
          mel[(size_t(i) * fwd.tmax + t) * cfg.mel_channels + m] =
              (s.mel_target.at(t, m) - stats.mean[m]) / stats.stddev[m];
        for (int sc = 0; sc < cfg.pitch_scales; ++sc)
          pc[(size_t(i) * fwd.tmax + t) * cfg.pitch_scales + sc] =
              s.p_target.at(sc, t);
        en[size_t(i) * fwd.tmax + t] = std::log1p(s.e_target[t]);
      }
      for (size_t s2 = 0; s2 < s.log_d_target.size(); ++s2)
        logd[size_t(i) * fwd.smax + s2] = s.log_d_target[s2];
    }
    fwd.mel = g->Leaf({bsz, fwd.tmax, cfg.mel_channels}, mel);
    fwd.mel_post = g->Leaf({bsz, fwd.tmax, cfg.mel_channels}, mel);
    fwd.d_pre = g->Leaf({bsz, fwd.smax}, logd);
    fwd.p_pre = g->Leaf({bsz, fwd.tmax, cfg.pitch_scales}, pc);
    fwd.e_pre = g->Leaf({bsz, fwd.tmax}, en);
    auto losses = model.Losses(g.get(), fwd, samples, stats);
    return std::make_pair(std::move(g), losses);
  };

  auto [g0, zero] = build(0.0f);
  CHECK(g0->scalar(zero.mel) == 0.0f);
  CHECK(g0->scalar(zero.mel_post) == 0.0f);
  CHECK(g0->scalar(zero.duration) == 0.0f);
  CHECK(g0->scalar(zero.pitch) == 0.0f);
  CHECK(g0->scalar(zero.energy) == 0.0f);
  CHECK(g0->scalar(zero.total) == 0.0f);

  // Perturbing only masked-out (padding) cells changes nothing.
  auto [g1, still_zero] = build(123.0f);
  CHECK(g1->scalar(still_zero.total) == 0.0f);
}

TEST_CASE("losses match a brute-force masked computation and Eq identity") {
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Spell("l", "iu", 4),
                                TextUnit::Number("3")},
                               vocab, dsp);
  T2AConfig cfg = TinyConfig();
  ParamStore store(7);
  T2AModel model(cfg);
  Graph g;
  GraphBinder binder(&g, &store);
  auto fwd = model.ForwardTeacher(&binder, samples, vocab.size());
  const auto stats = ComputeMelStats(samples, cfg.mel_channels);
  auto losses = model.Losses(&g, fwd, samples, stats);

  // Brute force over valid cells only (standardized domain).
  const auto& mel = g.value(fwd.mel);
  double acc = 0;
  int count = 0;
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < samples[i].frames(); ++t)
      for (int m = 0; m < cfg.mel_channels; ++m) {
        const double d =
            double(mel[(size_t(i) * fwd.tmax + t) * cfg.mel_channels + m]) -
            (samples[i].mel_target.at(t, m) - stats.mean[m]) / stats.stddev[m];
        acc += d * d;
        ++count;
      }
  CHECK(g.scalar(losses.mel) == doctest::Approx(acc / count).epsilon(1e-4));

  const auto& e = g.value(fwd.e_pre);
  double eacc = 0;
  int ecount = 0;
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < samples[i].frames(); ++t) {
      eacc += std::abs(double(e[size_t(i) * fwd.tmax + t]) -
                       std::log1p(samples[i].e_target[t]));
      ++ecount;
    }
  CHECK(g.scalar(losses.energy) == doctest::Approx(eacc / ecount).epsilon(1e-4));

  // The total is the exact f32 left-to-right sum of the five parts.
  float expected = g.scalar(losses.mel);
  expected += g.scalar(losses.mel_post);
  expected += g.scalar(losses.duration);
  expected += g.scalar(losses.pitch);
  expected += g.scalar(losses.energy);
  CHECK(g.scalar(losses.total) == expected);
}

TEST_CASE("full t2a loss passes grad_check on a two-phoneme instance") {
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Spell("b", "a", 2)}, vocab, dsp);
  T2AConfig cfg = TinyConfig();
  cfg.hidden = 16;
  cfg.heads = 2;
  ParamStore store(9);
  T2AModel model(cfg);
  Graph g;
  GraphBinder binder(&g, &store);
  auto fwd = model.ForwardTeacher(&binder, samples, vocab.size());
  auto losses =
      model.Losses(&g, fwd, samples, ComputeMelStats(samples, cfg.mel_channels));

  std::vector<std::pair<std::string, TRef>> probes;
  for (const auto& [name, id] : binder.bound())
    probes.emplace_back(name, TRef{&g, id});
  GradCheckOptions opt;
  opt.max_coords_per_param = 4;
  opt.h = 1e-4;
  auto report = GradCheck(&g, losses.total, probes, opt);
  CHECK(report.checked > 100);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("training overfits a small oracle set and is seed-reproducible") {
  DspConfig dsp;
  PhonemeVocab vocab;
  std::vector<TextUnit> units = {
      TextUnit::Spell("h", "ao", 3), TextUnit::Spell("b", "a", 1),
      TextUnit::Spell("x", "i", 4),  TextUnit::Spell("", "an", 2),
      TextUnit::Number("7"),         TextUnit::Number("2"),
      TextUnit::Spell("s", "ong", 1), TextUnit::Punct("!")};
  auto samples = OracleSamples(units, vocab, dsp);
  T2AConfig cfg = TinyConfig();
  cfg.epochs = 250;
  cfg.lr = 2e-3f;
  cfg.batch_size = 8;

  auto run = [&] {
    ParamStore store(11);
    auto result = TrainT2A(samples, cfg, vocab.size(), &store, "");
    return std::make_pair(std::move(store), result);
  };
  auto [store, result] = run();
  REQUIRE(result.curve.size() == size_t(cfg.epochs));
  CHECK(result.curve.back().mel < 0.05 * result.curve.front().mel);
  for (const auto& row : result.curve) {
    CHECK(std::isfinite(row.total));
    // Eq identity per epoch row (sums of per-batch f64 means).
    CHECK(row.total == doctest::Approx(row.mel + row.mel_post + row.duration +
                                       row.pitch + row.energy)
                           .epsilon(1e-5));
  }

  auto [store2, result2] = run();
  for (const auto& name : store.Names()) {
    const auto& a = store.ValueOf(name);
    const auto& b = store2.ValueOf(name);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  }

  // Inference produces a mel with one row per predicted frame.
  T2AModel model(cfg);
  std::vector<int> ids;
  for (const auto& ph : UnitToPhonemes(units[0])) ids.push_back(vocab.id(ph));
  auto inf = model.Infer(&store, ids, vocab.size());
  REQUIRE(inf.durations.size() == ids.size());
  int total = 0;
  for (int d : inf.durations) {
    CHECK(d >= 1);
    total += d;
  }
  CHECK(inf.mel.rows == total);
  CHECK(inf.mel.cols == cfg.mel_channels);
  // Trained on fixed per-class durations: h=6, ao3=14.
  CHECK(inf.durations[0] == 6);
  CHECK(inf.durations[1] == 14);

  auto inf2 = model.Infer(&store, ids, vocab.size());
  CHECK(inf.mel.data == inf2.mel.data);

  CHECK_THROWS_AS(TrainT2A({}, cfg, vocab.size(), &store, ""), Error);
}

TEST_CASE("curve csv has one row per epoch with six loss columns") {
  testing::TempDir dir("t2a_csv");
  DspConfig dsp;
  PhonemeVocab vocab;
  auto samples = OracleSamples({TextUnit::Number("5")}, vocab, dsp);
  T2AConfig cfg = TinyConfig();
  cfg.epochs = 3;
  ParamStore store(13);
  TrainT2A(samples, cfg, vocab.size(), &store, dir.File("curve.csv"));
  auto lines = SplitString(ReadFileOrThrow(dir.File("curve.csv")), '\n');
  REQUIRE(lines.size() == 5);  // header + 3 rows + trailing newline
  CHECK(lines[0] == "epoch,mel,mel_post,duration,pitch,energy,total");
  CHECK(SplitString(lines[1], ',').size() == 7);
}

TEST_CASE("unknown phonemes are rejected") {
  PhonemeVocab vocab;
  CHECK_THROWS_AS(vocab.id("qq9"), Error);
  CHECK(vocab.id("sp") == 1);
  CHECK(vocab.name(vocab.id("ao3")) == "ao3");
}
