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

#include "t2a/t2a.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.h"
#include "common/io.h"
#include "common/rng.h"

namespace bip {

namespace {

constexpr float kPitchQuantMin = -3.0f;
constexpr float kPitchQuantMax = 3.0f;
constexpr float kEnergyQuantMax = 8.0f;  // on the log1p scale

int QuantizeLinear(float v, float lo, float hi, int bins) {
  const float u = (v - lo) / (hi - lo);
  const int bin = static_cast<int>(u * bins);
  return std::clamp(bin, 0, bins - 1);
}

int PitchBin(float pitch_norm, int bins) {
  return QuantizeLinear(pitch_norm, kPitchQuantMin, kPitchQuantMax, bins);
}

// Energy runs through the adaptor in the log1p domain.
float EnergyToLog(float energy) { return std::log1p(std::max(energy, 0.0f)); }

int EnergyBin(float log_energy, int bins) {
  return QuantizeLinear(log_energy, 0.0f, kEnergyQuantMax, bins);
}

// Flat element mask of shape (B, tmax, inner) from a (B, tmax) frame mask.
std::vector<uint8_t> ExpandMask(const std::vector<uint8_t>& mask, int inner) {
  std::vector<uint8_t> out;
  out.reserve(mask.size() * inner);
  for (uint8_t m : mask)
    for (int i = 0; i < inner; ++i) out.push_back(m);
  return out;
}

}  // namespace

void T2AConfig::Validate() const {
  if (hidden % heads != 0)
    Throw(ErrorCode::kUsage, "hidden must be divisible by heads");
  if (conv_kernel % 2 == 0 || postnet_kernel % 2 == 0)
    Throw(ErrorCode::kUsage, "conv kernels must be odd");
  if (batch_size < 1 || epochs < 1)
    Throw(ErrorCode::kUsage, "bad t2a config");
}

PhonemeVocab::PhonemeVocab() : names_(PhonemeInventory()) {
  for (size_t i = 0; i < names_.size(); ++i)
    ids_[names_[i]] = static_cast<int>(i);
}

int PhonemeVocab::id(const std::string& phoneme) const {
  auto it = ids_.find(phoneme);
  if (it == ids_.end())
    Throw(ErrorCode::kData, "UnknownPhoneme: '" + phoneme + "'");
  return it->second;
}

const std::string& PhonemeVocab::name(int id) const {
  BIP_CHECK(id >= 0 && id < size()) << "phoneme id";
  return names_[id];
}

T2ASample PrepareT2ASample(const OracleUtterance& utt,
                           const PhonemeVocab& vocab) {
  T2ASample s;
  for (const auto& ph : utt.phonemes) s.phoneme_ids.push_back(vocab.id(ph));
  s.d_target = utt.durations;
  for (int d : utt.durations) {
    BIP_CHECK(d >= 1) << "duration";
    s.log_d_target.push_back(std::log(static_cast<float>(d)));
  }
  bool voiced = false;
  for (float v : utt.f0) voiced |= v > 0;
  if (voiced) {
    s.pitch_norm = PreparePitchContour(utt.f0, nullptr);
    s.p_target = CwtPitch(s.pitch_norm);
  } else {
    // Pure pause: flat contour, zero coefficients.
    s.pitch_norm.assign(utt.f0.size(), 0.0f);
    s.p_target = FloatMatrix(kCwtScales, static_cast<int>(utt.f0.size()));
  }
  s.e_target = utt.energy;
  s.mel_target = utt.mel;
  return s;
}

TRef T2AModel::VariancePredictor(GraphBinder* b, const std::string& prefix,
                                 TRef x, int out_dim) const {
  Graph* g = b->graph();
  const int h = cfg_.hidden;
  const int k = cfg_.conv_kernel;
  TRef c1 = g->Conv1d(x, b->P(prefix + ".conv1.w", {k, h, h},
                              ParamInit::Uniform(double(k) * h)),
                      b->P(prefix + ".conv1.b", {h}, ParamInit::Zeros()));
  TRef a1 = LayerNormed(b, prefix + ".ln1", g->Relu(c1), h);
  TRef c2 = g->Conv1d(a1, b->P(prefix + ".conv2.w", {k, h, h},
                               ParamInit::Uniform(double(k) * h)),
                      b->P(prefix + ".conv2.b", {h}, ParamInit::Zeros()));
  TRef a2 = LayerNormed(b, prefix + ".ln2", g->Relu(c2), h);
  return Linear(b, prefix + ".out", a2, h, out_dim);
}

TRef T2AModel::Encode(GraphBinder* b, const std::vector<std::vector<int>>& ids,
                      int smax, int vocab_size) const {
  Graph* g = b->graph();
  const int bsz = static_cast<int>(ids.size());
  std::vector<int> flat;
  for (const auto& seq : ids) {
    BIP_CHECK(static_cast<int>(seq.size()) == smax) << "unpadded batch";
    for (int id : seq) flat.push_back(id);
  }
  TRef table = b->P("t2a.embed", {vocab_size, cfg_.hidden},
                    ParamInit::Uniform(cfg_.hidden));
  TRef x = g->Embedding(table, flat, {bsz, smax});
  TRef pos = b->P("t2a.enc.pos", {cfg_.max_phonemes, cfg_.hidden},
                  ParamInit::Uniform(cfg_.hidden));
  x = g->Add(x, g->Slice(pos, 0, 0, smax));
  for (int blk = 0; blk < cfg_.enc_blocks; ++blk)
    x = AttentionBlock(b, "t2a.enc.block" + std::to_string(blk), x,
                       cfg_.hidden, cfg_.heads);
  return LayerNormed(b, "t2a.enc.ln_out", x, cfg_.hidden);
}

TRef T2AModel::ConditionOn(GraphBinder* b, TRef x,
                           const std::vector<float>& pitch_norm,
                           const std::vector<float>& energy, int bsz,
                           int tmax) const {
  Graph* g = b->graph();
  BIP_CHECK(pitch_norm.size() == size_t(bsz) * tmax) << "pitch length";
  BIP_CHECK(energy.size() == size_t(bsz) * tmax) << "energy length";
  std::vector<int> pitch_ids(pitch_norm.size()), energy_ids(energy.size());
  for (size_t i = 0; i < pitch_norm.size(); ++i) {
    pitch_ids[i] = PitchBin(pitch_norm[i], cfg_.quant_bins);
    energy_ids[i] = EnergyBin(energy[i], cfg_.quant_bins);
  }
  TRef ptable = b->P("t2a.pitch_embed", {cfg_.quant_bins, cfg_.hidden},
                     ParamInit::Uniform(cfg_.hidden));
  TRef etable = b->P("t2a.energy_embed", {cfg_.quant_bins, cfg_.hidden},
                     ParamInit::Uniform(cfg_.hidden));
  TRef pe = g->Embedding(ptable, pitch_ids, {bsz, tmax});
  TRef ee = g->Embedding(etable, energy_ids, {bsz, tmax});
  return g->Add(g->Add(x, pe), ee);
}

TRef T2AModel::Decode(GraphBinder* b, TRef frames) const {
  Graph* g = b->graph();
  TRef x = frames;
  for (int blk = 0; blk < cfg_.dec_blocks; ++blk)
    x = AttentionBlock(b, "t2a.dec.block" + std::to_string(blk), x,
                       cfg_.hidden, cfg_.heads);
  x = LayerNormed(b, "t2a.dec.ln_out", x, cfg_.hidden);
  return Linear(b, "t2a.dec.mel", x, cfg_.hidden, cfg_.mel_channels);
}

namespace {

// mel + conv-stack refinement on top of the decoder output.
TRef Postnet(GraphBinder* b, const T2AConfig& cfg, TRef mel) {
  Graph* g = b->graph();
  const int k = cfg.postnet_kernel;
  TRef x = mel;
  int cin = cfg.mel_channels;
  for (int layer = 0; layer < cfg.postnet_layers; ++layer) {
    const bool last = layer == cfg.postnet_layers - 1;
    const int cout = last ? cfg.mel_channels : cfg.hidden;
    const std::string prefix = "t2a.postnet." + std::to_string(layer);
    x = g->Conv1d(x, b->P(prefix + ".w", {k, cin, cout},
                          ParamInit::Uniform(double(k) * cin)),
                  b->P(prefix + ".b", {cout}, ParamInit::Zeros()));
    if (!last) x = g->Relu(x);
    cin = cout;
  }
  return g->Add(mel, x);
}

}  // namespace

T2AForwardOut T2AModel::ForwardTeacher(GraphBinder* b,
                                       const std::vector<T2ASample>& batch,
                                       int vocab_size) const {
  cfg_.Validate();
  Graph* g = b->graph();
  const int bsz = static_cast<int>(batch.size());
  BIP_CHECK(bsz > 0) << "empty batch";

  T2AForwardOut out;
  for (const auto& s : batch) {
    out.smax = std::max(out.smax, static_cast<int>(s.phoneme_ids.size()));
    out.tmax = std::max(out.tmax, s.frames());
  }
  BIP_CHECK(out.smax <= cfg_.max_phonemes) << "phoneme sequence too long";
  BIP_CHECK(out.tmax <= cfg_.max_frames) << "utterance too long";

  std::vector<std::vector<int>> padded_ids(bsz);
  for (int i = 0; i < bsz; ++i) {
    padded_ids[i] = batch[i].phoneme_ids;
    padded_ids[i].resize(out.smax, 0);
    for (int s = 0; s < out.smax; ++s)
      out.src_mask.push_back(s < static_cast<int>(batch[i].phoneme_ids.size()));
    for (int t = 0; t < out.tmax; ++t)
      out.mel_mask.push_back(t < batch[i].frames());
  }

  TRef enc = Encode(b, padded_ids, out.smax, vocab_size);
  TRef d = VariancePredictor(b, "t2a.duration", enc, 1);
  out.d_pre = g->Reshape(d, {bsz, out.smax});

  // Teacher-forced length regulation, padded to tmax per sample.
  std::vector<TRef> rows;
  for (int i = 0; i < bsz; ++i) {
    TRef enc_i = g->Reshape(g->Slice(enc, 0, i, 1), {out.smax, cfg_.hidden});
    std::vector<int> counts = batch[i].d_target;
    counts.resize(out.smax, 0);
    TRef reg = g->RepeatRows(enc_i, counts);
    const int t = batch[i].frames();
    if (t < out.tmax)
      reg = g->Concat({reg, g->Zeros({out.tmax - t, cfg_.hidden})}, 0);
    rows.push_back(g->Reshape(reg, {1, out.tmax, cfg_.hidden}));
  }
  TRef frames = rows.size() == 1 ? rows[0] : g->Concat(rows, 0);
  TRef fpos = b->P("t2a.dec.pos", {cfg_.max_frames, cfg_.hidden},
                   ParamInit::Uniform(cfg_.hidden));
  frames = g->Add(frames, g->Slice(fpos, 0, 0, out.tmax));

  TRef p = VariancePredictor(b, "t2a.pitch", frames, cfg_.pitch_scales);
  out.p_pre = p;
  TRef e = VariancePredictor(b, "t2a.energy", frames, 1);
  out.e_pre = g->Reshape(e, {bsz, out.tmax});

  // Teacher pitch/energy conditioning.
  std::vector<float> pitch_flat(size_t(bsz) * out.tmax, 0.0f);
  std::vector<float> energy_flat(size_t(bsz) * out.tmax, 0.0f);
  for (int i = 0; i < bsz; ++i)
    for (int t = 0; t < batch[i].frames(); ++t) {
      pitch_flat[size_t(i) * out.tmax + t] = batch[i].pitch_norm[t];
      energy_flat[size_t(i) * out.tmax + t] =
          EnergyToLog(batch[i].e_target[t]);
    }
  TRef conditioned = ConditionOn(b, frames, pitch_flat, energy_flat, bsz,
                                 out.tmax);

  out.mel = Decode(b, conditioned);
  out.mel_post = Postnet(b, cfg_, out.mel);
  return out;
}

MelStats ComputeMelStats(const std::vector<T2ASample>& dataset,
                         int mel_channels) {
  MelStats stats;
  stats.mean.assign(mel_channels, 0.0f);
  stats.stddev.assign(mel_channels, 1.0f);
  std::vector<double> sum(mel_channels, 0.0), sq(mel_channels, 0.0);
  int64_t frames = 0;
  for (const auto& s : dataset) {
    for (int t = 0; t < s.mel_target.rows; ++t)
      for (int m = 0; m < mel_channels; ++m) {
        const double v = s.mel_target.at(t, m);
        sum[m] += v;
        sq[m] += v * v;
      }
    frames += s.mel_target.rows;
  }
  BIP_CHECK(frames > 0) << "no frames for mel stats";
  for (int m = 0; m < mel_channels; ++m) {
    const double mean = sum[m] / frames;
    const double var = std::max(sq[m] / frames - mean * mean, 1e-6);
    stats.mean[m] = float(mean);
    stats.stddev[m] = float(std::sqrt(var));
  }
  return stats;
}

MelStats EnsureMelStats(ParamStore* store,
                        const std::vector<T2ASample>& dataset,
                        int mel_channels) {
  if (!store->Has("t2a.mel_mean")) {
    MelStats stats = ComputeMelStats(dataset, mel_channels);
    store->SetValue("t2a.mel_mean", {mel_channels}, stats.mean);
    store->SetValue("t2a.mel_std", {mel_channels}, stats.stddev);
    return stats;
  }
  MelStats stats;
  stats.mean = store->ValueOf("t2a.mel_mean");
  stats.stddev = store->ValueOf("t2a.mel_std");
  return stats;
}

T2ALosses T2AModel::Losses(Graph* g, const T2AForwardOut& fwd,
                           const std::vector<T2ASample>& batch,
                           const MelStats& stats) const {
  const int bsz = static_cast<int>(batch.size());
  BIP_CHECK(static_cast<int>(stats.mean.size()) == cfg_.mel_channels)
      << "mel stats";

  // Padded targets as constant leaves.
  std::vector<float> mel_t(size_t(bsz) * fwd.tmax * cfg_.mel_channels, 0.0f);
  std::vector<float> logd_t(size_t(bsz) * fwd.smax, 0.0f);
  std::vector<float> p_t(size_t(bsz) * fwd.tmax * cfg_.pitch_scales, 0.0f);
  std::vector<float> e_t(size_t(bsz) * fwd.tmax, 0.0f);
  for (int i = 0; i < bsz; ++i) {
    const auto& s = batch[i];
    for (int t = 0; t < s.frames(); ++t) {
      for (int m = 0; m < cfg_.mel_channels; ++m)
        mel_t[(size_t(i) * fwd.tmax + t) * cfg_.mel_channels + m] =
            (s.mel_target.at(t, m) - stats.mean[m]) / stats.stddev[m];
      for (int sc = 0; sc < cfg_.pitch_scales; ++sc)
        p_t[(size_t(i) * fwd.tmax + t) * cfg_.pitch_scales + sc] =
            s.p_target.at(sc, t);
      e_t[size_t(i) * fwd.tmax + t] = EnergyToLog(s.e_target[t]);
    }
    for (size_t sph = 0; sph < s.log_d_target.size(); ++sph)
      logd_t[size_t(i) * fwd.smax + sph] = s.log_d_target[sph];
  }

  TRef mel_target =
      g->Leaf({bsz, fwd.tmax, cfg_.mel_channels}, std::move(mel_t));
  TRef logd_target = g->Leaf({bsz, fwd.smax}, std::move(logd_t));
  TRef p_target = g->Leaf({bsz, fwd.tmax, cfg_.pitch_scales}, std::move(p_t));
  TRef e_target = g->Leaf({bsz, fwd.tmax}, std::move(e_t));

  const auto mel_elem_mask = ExpandMask(fwd.mel_mask, cfg_.mel_channels);
  const auto pitch_elem_mask = ExpandMask(fwd.mel_mask, cfg_.pitch_scales);

  T2ALosses ls;
  ls.mel = g->Mse(g->MaskedSelect(fwd.mel, mel_elem_mask),
                  g->MaskedSelect(mel_target, mel_elem_mask));
  ls.mel_post = g->Mse(g->MaskedSelect(fwd.mel_post, mel_elem_mask),
                       g->MaskedSelect(mel_target, mel_elem_mask));
  TRef d_sel = g->MaskedSelect(fwd.d_pre, fwd.src_mask);
  TRef d_tgt = g->MaskedSelect(logd_target, fwd.src_mask);
  ls.duration = cfg_.duration_loss_mse ? g->Mse(d_sel, d_tgt)
                                       : g->Mae(d_sel, d_tgt);
  ls.pitch = g->Mae(g->MaskedSelect(fwd.p_pre, pitch_elem_mask),
                    g->MaskedSelect(p_target, pitch_elem_mask));
  ls.energy = g->Mae(g->MaskedSelect(fwd.e_pre, fwd.mel_mask),
                     g->MaskedSelect(e_target, fwd.mel_mask));
  ls.total = g->Add(g->Add(g->Add(g->Add(ls.mel, ls.mel_post), ls.duration),
                           ls.pitch),
                    ls.energy);
  return ls;
}

T2AModel::InferenceOut T2AModel::Infer(ParamStore* store,
                                       const std::vector<int>& phoneme_ids,
                                       int vocab_size) const {
  cfg_.Validate();
  BIP_CHECK(!phoneme_ids.empty()) << "empty phoneme sequence";
  const int s = static_cast<int>(phoneme_ids.size());
  BIP_CHECK(s <= cfg_.max_phonemes) << "phoneme sequence too long";

  Graph g;
  GraphBinder b(&g, store);
  TRef enc = Encode(&b, {phoneme_ids}, s, vocab_size);
  TRef d = g.Reshape(VariancePredictor(&b, "t2a.duration", enc, 1), {1, s});

  InferenceOut out;
  // Log-duration -> frames: exponentiate, round half up, clamp >= 1.
  for (float v : g.value(d)) {
    const int frames =
        std::max(1, static_cast<int>(std::floor(std::exp(double(v)) + 0.5)));
    out.durations.push_back(frames);
  }
  int total = 0;
  for (int dd : out.durations) total += dd;
  if (total > cfg_.max_frames)
    Throw(ErrorCode::kNumeric,
          "DivergedLoss: predicted " + std::to_string(total) + " frames");

  TRef enc_flat = g.Reshape(enc, {s, cfg_.hidden});
  TRef reg = g.RepeatRows(enc_flat, out.durations);
  TRef frames = g.Reshape(reg, {1, total, cfg_.hidden});
  TRef fpos = b.P("t2a.dec.pos", {cfg_.max_frames, cfg_.hidden},
                  ParamInit::Uniform(cfg_.hidden));
  frames = g.Add(frames, g.Slice(fpos, 0, 0, total));

  TRef p = VariancePredictor(&b, "t2a.pitch", frames, cfg_.pitch_scales);
  TRef e = VariancePredictor(&b, "t2a.energy", frames, 1);

  // Reconstruct the standardized contour from predicted CWT coefficients.
  FloatMatrix coef(cfg_.pitch_scales, total);
  const auto& pv = g.value(p);
  for (int t = 0; t < total; ++t)
    for (int sc = 0; sc < cfg_.pitch_scales; ++sc)
      coef.at(sc, t) = pv[size_t(t) * cfg_.pitch_scales + sc];
  out.f0_norm = InverseCwt(coef);
  // Predictions live in the log1p domain; expose raw energies.
  const auto& elog = g.value(e);
  out.energy.resize(elog.size());
  for (size_t i = 0; i < elog.size(); ++i)
    out.energy[i] = std::expm1(std::max(elog[i], 0.0f));

  TRef conditioned = ConditionOn(
      &b, frames, out.f0_norm,
      std::vector<float>(elog.begin(), elog.end()), 1, total);
  TRef mel = Decode(&b, conditioned);
  TRef mel_post = Postnet(&b, cfg_, mel);

  if (!store->Has("t2a.mel_mean"))
    Throw(ErrorCode::kState,
          "CheckpointMismatch: missing t2a mel statistics");
  const auto& mean = store->ValueOf("t2a.mel_mean");
  const auto& stddev = store->ValueOf("t2a.mel_std");
  out.mel = FloatMatrix(total, cfg_.mel_channels);
  const auto& mv = g.value(mel_post);
  for (int t = 0; t < total; ++t)
    for (int m = 0; m < cfg_.mel_channels; ++m)
      out.mel.at(t, m) =
          mv[size_t(t) * cfg_.mel_channels + m] * stddev[m] + mean[m];
  return out;
}

std::string T2ACurveCsv(const std::vector<T2ACurveRow>& curve) {
  std::ostringstream out;
  out << "epoch,mel,mel_post,duration,pitch,energy,total\n";
  for (const auto& r : curve)
    out << r.epoch << "," << FormatFloat(r.mel) << "," << FormatFloat(r.mel_post)
        << "," << FormatFloat(r.duration) << "," << FormatFloat(r.pitch) << ","
        << FormatFloat(r.energy) << "," << FormatFloat(r.total) << "\n";
  return out.str();
}

T2ATrainResult TrainT2A(const std::vector<T2ASample>& dataset,
                        const T2AConfig& cfg, int vocab_size, ParamStore* store,
                        const std::string& curve_csv_path) {
  cfg.Validate();
  if (dataset.empty()) Throw(ErrorCode::kData, "EmptyDataset: no utterances");

  T2AModel model(cfg);
  const MelStats stats = EnsureMelStats(store, dataset, cfg.mel_channels);
  Adam adam(AdamConfig{cfg.lr, 0.9f, 0.999f, 1e-8f});
  Rng rng(cfg.seed);
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  T2ATrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    double sums[6] = {0, 0, 0, 0, 0, 0};
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<T2ASample> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      Graph g;
      GraphBinder binder(&g, store);
      auto fwd = model.ForwardTeacher(&binder, batch, vocab_size);
      auto losses = model.Losses(&g, fwd, batch, stats);
      const double total = g.scalar(losses.total);
      if (!std::isfinite(total))
        Throw(ErrorCode::kNumeric, "DivergedLoss: non-finite t2a loss");
      g.Backward(losses.total);
      adam.Step(g, binder);
      sums[0] += g.scalar(losses.mel);
      sums[1] += g.scalar(losses.mel_post);
      sums[2] += g.scalar(losses.duration);
      sums[3] += g.scalar(losses.pitch);
      sums[4] += g.scalar(losses.energy);
      sums[5] += total;
      ++batches;
    }
    result.curve.push_back({epoch, sums[0] / batches, sums[1] / batches,
                            sums[2] / batches, sums[3] / batches,
                            sums[4] / batches, sums[5] / batches});
  }
  if (!curve_csv_path.empty())
    WriteFileOrThrow(curve_csv_path, T2ACurveCsv(result.curve));
  return result;
}

}  // namespace bip
