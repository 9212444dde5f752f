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

#ifndef BIP_DSP_DSP_H_
#define BIP_DSP_DSP_H_

#include <string>
#include <vector>

namespace bip {

struct DspConfig {
  int sampling_rate = 16000;
  int filter_length = 1024;  // FFT size, power of two
  int hop_length = 256;
  int win_length = 1024;
  int mel_channels = 80;
  double mel_fmin = 0.0;
  double mel_fmax = 8000.0;
  double max_wav = 32768.0;  // PCM16 full scale; 32786 accepted as a typo

  void Validate() const;
  int num_bins() const { return filter_length / 2 + 1; }
};

struct FloatMatrix {
  int rows = 0, cols = 0;
  std::vector<float> data;

  FloatMatrix() = default;
  FloatMatrix(int r, int c) : rows(r), cols(c), data(size_t(r) * c, 0.0f) {}
  float& at(int r, int c) { return data[size_t(r) * cols + c]; }
  float at(int r, int c) const { return data[size_t(r) * cols + c]; }
};

// Magnitude spectrogram, frames x bins. Hann window, centered frames with
// reflect padding; frame count = 1 + ceil(len / hop).
FloatMatrix Stft(const std::vector<float>& wav, const DspConfig& cfg);

// Triangular HTK-mel filterbank rows (mel_channels x bins).
FloatMatrix MelFilterbank(const DspConfig& cfg);

// log(max(filterbank . power_spectrum, 1e-5)), frames x mel_channels.
FloatMatrix MelSpectrogram(const std::vector<float>& wav, const DspConfig& cfg);

// Per-frame L2 norm over frequency bins of a magnitude spectrogram.
std::vector<float> FrameEnergy(const FloatMatrix& magnitude);

// Iterative phase reconstruction from a log-mel spectrogram through the
// filterbank pseudo-inverse. Per-iteration spectral convergence errors are
// reported when `errors` is given. Output is peak-normalized.
std::vector<float> GriffinLim(const FloatMatrix& logmel, const DspConfig& cfg,
                              int iterations,
                              std::vector<double>* errors = nullptr);

// Mel cepstral distortion: DCT-II cepstra c1..c13 of log-mel frames,
// 10*sqrt(2)/ln10 scaled Euclidean distance, mean over frames (sequences
// aligned by truncation to the shorter one).
double Mcd(const FloatMatrix& mel_ref, const FloatMatrix& mel_test);

// RIFF PCM16 mono.
void WavWrite(const std::string& path, const std::vector<float>& wav,
              int sampling_rate);
std::vector<float> WavRead(const std::string& path, int* sampling_rate);

}  // namespace bip

#endif  // BIP_DSP_DSP_H_
