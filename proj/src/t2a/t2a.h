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

#ifndef BIP_T2A_T2A_H_
#define BIP_T2A_T2A_H_

#include <string>
#include <vector>

#include "dsp/cwt.h"
#include "dsp/dsp.h"
#include "dsp/oracle.h"
#include "tensor/layers.h"

namespace bip {

struct T2AConfig {
  int hidden = 64;
  int heads = 4;
  int enc_blocks = 2;
  int dec_blocks = 2;
  int conv_kernel = 3;   // variance predictor convs
  int postnet_kernel = 5;
  int postnet_layers = 3;
  int pitch_scales = kCwtScales;
  int quant_bins = 32;  // pitch/energy conditioning embeddings
  int mel_channels = 80;
  int max_phonemes = 32;
  int max_frames = 512;
  int batch_size = 8;
  int epochs = 100;
  float lr = 1e-3f;
  uint64_t seed = 1;
  // Eq 6 writes MAE while the prose says MSE; MAE is the default and the
  // prose reading stays available behind this switch.
  bool duration_loss_mse = false;

  void Validate() const;
};

class PhonemeVocab {
 public:
  PhonemeVocab();
  int id(const std::string& phoneme) const;  // throws UnknownPhoneme
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> ids_;
};

// One utterance with its exact targets, ready for teacher forcing.
struct T2ASample {
  std::vector<int> phoneme_ids;
  std::vector<int> d_target;        // frames per phoneme
  std::vector<float> log_d_target;
  FloatMatrix p_target;             // scales x frames CWT coefficients
  std::vector<float> pitch_norm;    // standardized f0 per frame
  std::vector<float> e_target;      // per-frame energy
  FloatMatrix mel_target;           // frames x mel_channels

  int frames() const { return mel_target.rows; }
};

T2ASample PrepareT2ASample(const OracleUtterance& utt, const PhonemeVocab& vocab);

struct T2AForwardOut {
  TRef mel, mel_post;  // (B, Tmax, mel_channels)
  TRef d_pre;          // (B, Smax) log-durations
  TRef p_pre;          // (B, Tmax, scales)
  TRef e_pre;          // (B, Tmax), log1p energy domain
  std::vector<uint8_t> src_mask;  // B x Smax, valid phonemes
  std::vector<uint8_t> mel_mask;  // B x Tmax, valid frames
  int smax = 0, tmax = 0;
};

struct T2ALosses {
  TRef mel, mel_post, duration, pitch, energy, total;
};

// Per-channel corpus statistics; the model fits standardized mels and
// inference restores the raw scale. Persisted as the non-trainable
// tensors t2a.mel_mean / t2a.mel_std.
struct MelStats {
  std::vector<float> mean, stddev;
};

MelStats ComputeMelStats(const std::vector<T2ASample>& dataset,
                         int mel_channels);
// Loads the stats from the store, computing and saving them first when
// absent.
MelStats EnsureMelStats(ParamStore* store,
                        const std::vector<T2ASample>& dataset,
                        int mel_channels);

class T2AModel {
 public:
  explicit T2AModel(const T2AConfig& cfg) : cfg_(cfg) {}

  // Teacher-forced batch forward: regulation and pitch/energy
  // conditioning use the targets.
  T2AForwardOut ForwardTeacher(GraphBinder* b, const std::vector<T2ASample>& batch,
                               int vocab_size) const;

  // Masked losses of the five objectives plus their unweighted sum.
  // Mel terms compare in the standardized domain.
  T2ALosses Losses(Graph* g, const T2AForwardOut& fwd,
                   const std::vector<T2ASample>& batch,
                   const MelStats& stats) const;

  struct InferenceOut {
    FloatMatrix mel;              // frames x mel_channels (post-refined)
    std::vector<int> durations;   // frames per phoneme
    std::vector<float> f0_norm;   // reconstructed, standardized
    std::vector<float> energy;
  };
  // Single-utterance inference on the model's own predictions.
  InferenceOut Infer(ParamStore* store, const std::vector<int>& phoneme_ids,
                     int vocab_size) const;

  const T2AConfig& config() const { return cfg_; }

 private:
  TRef VariancePredictor(GraphBinder* b, const std::string& prefix, TRef x,
                         int out_dim) const;
  TRef Encode(GraphBinder* b, const std::vector<std::vector<int>>& ids,
              int smax, int vocab_size) const;
  TRef Decode(GraphBinder* b, TRef frames) const;
  TRef ConditionOn(GraphBinder* b, TRef x, const std::vector<float>& pitch_norm,
                   const std::vector<float>& energy, int bsz, int tmax) const;

  T2AConfig cfg_;
};

struct T2ACurveRow {
  int epoch;
  double mel, mel_post, duration, pitch, energy, total;
};

struct T2ATrainResult {
  std::vector<T2ACurveRow> curve;
};

T2ATrainResult TrainT2A(const std::vector<T2ASample>& dataset,
                        const T2AConfig& cfg, int vocab_size, ParamStore* store,
                        const std::string& curve_csv_path = "");

std::string T2ACurveCsv(const std::vector<T2ACurveRow>& curve);

}  // namespace bip

#endif  // BIP_T2A_T2A_H_
