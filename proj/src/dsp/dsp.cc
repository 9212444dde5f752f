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

#include "dsp/dsp.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <sstream>

#include "common/error.h"
#include "common/io.h"

namespace bip {

namespace {

constexpr double kLogFloor = 1e-5;

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void Fft(std::vector<std::complex<double>>* a, bool inverse) {
  const size_t n = a->size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap((*a)[i], (*a)[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2 * M_PI / len * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = (*a)[i + k];
        auto v = (*a)[i + k + len / 2] * w;
        (*a)[i + k] = u + v;
        (*a)[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : *a) x /= double(n);
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2 * M_PI * i / n);
  return w;
}

// Reflect index into [0, len).
int64_t Reflect(int64_t i, int64_t len) {
  if (len == 1) return 0;
  const int64_t period = 2 * (len - 1);
  i = ((i % period) + period) % period;
  return i < len ? i : period - i;
}

int FrameCount(size_t len, const DspConfig& cfg) {
  return 1 + static_cast<int>((len + cfg.hop_length - 1) / cfg.hop_length);
}

// Complex STFT frames (frames x bins), shared by Stft and GriffinLim.
std::vector<std::vector<std::complex<double>>> StftComplex(
    const std::vector<float>& wav, const DspConfig& cfg) {
  const int fl = cfg.filter_length;
  const int pad = fl / 2;
  const int frames = FrameCount(wav.size(), cfg);
  const auto window = HannWindow(cfg.win_length);
  std::vector<std::vector<std::complex<double>>> out(frames);
  std::vector<std::complex<double>> buf(fl);
  for (int t = 0; t < frames; ++t) {
    const int64_t start = int64_t(t) * cfg.hop_length - pad;
    for (int i = 0; i < fl; ++i) {
      const double w = i < cfg.win_length ? window[i] : 0.0;
      buf[i] = w * wav[Reflect(start + i, int64_t(wav.size()))];
    }
    Fft(&buf, false);
    out[t].assign(buf.begin(), buf.begin() + cfg.num_bins());
  }
  return out;
}

std::vector<float> Istft(
    const std::vector<std::vector<std::complex<double>>>& frames,
    size_t out_len, const DspConfig& cfg) {
  const int fl = cfg.filter_length;
  const int pad = fl / 2;
  const auto window = HannWindow(cfg.win_length);
  std::vector<double> acc(out_len + 2 * pad, 0.0);
  std::vector<double> wsum(out_len + 2 * pad, 0.0);
  std::vector<std::complex<double>> buf(fl);
  for (size_t t = 0; t < frames.size(); ++t) {
    // Rebuild the full spectrum from the half-spectrum (real signal).
    for (int i = 0; i < cfg.num_bins(); ++i) buf[i] = frames[t][i];
    for (int i = cfg.num_bins(); i < fl; ++i)
      buf[i] = std::conj(frames[t][fl - i]);
    Fft(&buf, true);
    const int64_t start = int64_t(t) * cfg.hop_length;
    for (int i = 0; i < fl; ++i) {
      const double w = i < cfg.win_length ? window[i] : 0.0;
      acc[start + i] += w * buf[i].real();
      wsum[start + i] += w * w;
    }
  }
  std::vector<float> out(out_len);
  for (size_t i = 0; i < out_len; ++i) {
    const double d = wsum[i + pad];
    out[i] = d > 1e-9 ? float(acc[i + pad] / d) : 0.0f;
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Solves (A + eps I) x = b in place for small symmetric positive matrices.
std::vector<double> SolveSpd(std::vector<double> a, std::vector<double> b,
                             int n) {
  for (int i = 0; i < n; ++i) a[size_t(i) * n + i] += 1e-8;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[size_t(r) * n + col]) >
          std::abs(a[size_t(pivot) * n + col]))
        pivot = r;
    for (int c = 0; c < n; ++c)
      std::swap(a[size_t(col) * n + c], a[size_t(pivot) * n + c]);
    std::swap(b[col], b[pivot]);
    const double d = a[size_t(col) * n + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[size_t(r) * n + col] / d;
      for (int c = col; c < n; ++c)
        a[size_t(r) * n + c] -= f * a[size_t(col) * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / a[size_t(i) * n + i];
  return x;
}

}  // namespace

void DspConfig::Validate() const {
  if (!IsPowerOfTwo(filter_length))
    Throw(ErrorCode::kUsage, "filter_length must be a power of two");
  if (hop_length <= 0 || hop_length > filter_length)
    Throw(ErrorCode::kUsage, "hop_length must be in (0, filter_length]");
  if (win_length <= 0 || win_length > filter_length)
    Throw(ErrorCode::kUsage, "win_length must be in (0, filter_length]");
  if (!(mel_fmin < mel_fmax && mel_fmax <= sampling_rate / 2.0))
    Throw(ErrorCode::kUsage, "need mel_fmin < mel_fmax <= sampling_rate/2");
  if (mel_channels <= 0) Throw(ErrorCode::kUsage, "mel_channels");
}

FloatMatrix Stft(const std::vector<float>& wav, const DspConfig& cfg) {
  cfg.Validate();
  if (wav.empty()) Throw(ErrorCode::kUsage, "EmptyWaveform");
  auto frames = StftComplex(wav, cfg);
  FloatMatrix mag(static_cast<int>(frames.size()), cfg.num_bins());
  for (size_t t = 0; t < frames.size(); ++t)
    for (int i = 0; i < cfg.num_bins(); ++i)
      mag.at(static_cast<int>(t), i) = float(std::abs(frames[t][i]));
  return mag;
}

FloatMatrix MelFilterbank(const DspConfig& cfg) {
  cfg.Validate();
  const int bins = cfg.num_bins();
  FloatMatrix fb(cfg.mel_channels, bins);
  const double mel_lo = HzToMel(cfg.mel_fmin);
  const double mel_hi = HzToMel(cfg.mel_fmax);
  std::vector<double> centers(cfg.mel_channels + 2);
  for (int i = 0; i < cfg.mel_channels + 2; ++i)
    centers[i] =
        MelToHz(mel_lo + (mel_hi - mel_lo) * i / (cfg.mel_channels + 1));
  for (int m = 0; m < cfg.mel_channels; ++m) {
    const double f0 = centers[m], f1 = centers[m + 1], f2 = centers[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double fk = double(k) * cfg.sampling_rate / cfg.filter_length;
      double w = 0;
      if (fk > f0 && fk <= f1)
        w = (fk - f0) / (f1 - f0);
      else if (fk > f1 && fk < f2)
        w = (f2 - fk) / (f2 - f1);
      fb.at(m, k) = float(w);
    }
  }
  return fb;
}

FloatMatrix MelSpectrogram(const std::vector<float>& wav,
                           const DspConfig& cfg) {
  const FloatMatrix mag = Stft(wav, cfg);
  const FloatMatrix fb = MelFilterbank(cfg);
  FloatMatrix mel(mag.rows, cfg.mel_channels);
  for (int t = 0; t < mag.rows; ++t)
    for (int m = 0; m < cfg.mel_channels; ++m) {
      double acc = 0;
      for (int k = 0; k < mag.cols; ++k)
        acc += double(fb.at(m, k)) * mag.at(t, k) * mag.at(t, k);
      mel.at(t, m) = float(std::log(std::max(acc, kLogFloor)));
    }
  return mel;
}

std::vector<float> FrameEnergy(const FloatMatrix& magnitude) {
  std::vector<float> energy(magnitude.rows);
  for (int t = 0; t < magnitude.rows; ++t) {
    double acc = 0;
    for (int k = 0; k < magnitude.cols; ++k)
      acc += double(magnitude.at(t, k)) * magnitude.at(t, k);
    energy[t] = float(std::sqrt(acc));
  }
  return energy;
}

std::vector<float> GriffinLim(const FloatMatrix& logmel, const DspConfig& cfg,
                              int iterations, std::vector<double>* errors) {
  cfg.Validate();
  BIP_CHECK(iterations >= 1) << "iterations";
  BIP_CHECK(logmel.cols == cfg.mel_channels) << "mel channel count";
  for (float v : logmel.data)
    if (!std::isfinite(v)) Throw(ErrorCode::kNumeric, "NonFiniteInput");

  const FloatMatrix fb = MelFilterbank(cfg);
  const int bins = cfg.num_bins();
  const int mels = cfg.mel_channels;
  // Least-squares mel -> linear power: p = FB^T (FB FB^T)^-1 m.
  std::vector<double> gram(size_t(mels) * mels, 0.0);
  for (int i = 0; i < mels; ++i)
    for (int j = 0; j < mels; ++j) {
      double acc = 0;
      for (int k = 0; k < bins; ++k)
        acc += double(fb.at(i, k)) * fb.at(j, k);
      gram[size_t(i) * mels + j] = acc;
    }

  const int frames = logmel.rows;
  FloatMatrix target(frames, bins);  // magnitude
  std::vector<double> melvec(mels);
  for (int t = 0; t < frames; ++t) {
    for (int m = 0; m < mels; ++m)
      melvec[m] = std::exp(double(logmel.at(t, m)));
    auto coef = SolveSpd(gram, melvec, mels);
    for (int k = 0; k < bins; ++k) {
      double p = 0;
      for (int m = 0; m < mels; ++m) p += coef[m] * fb.at(m, k);
      target.at(t, k) = float(std::sqrt(std::max(p, 0.0)));
    }
  }

  const size_t out_len = size_t(std::max(frames - 1, 1)) * cfg.hop_length;
  // Zero initial phase, then alternate projections.
  std::vector<std::vector<std::complex<double>>> spec(frames);
  for (int t = 0; t < frames; ++t) {
    spec[t].resize(bins);
    for (int k = 0; k < bins; ++k) spec[t][k] = double(target.at(t, k));
  }
  std::vector<float> wav;
  double target_norm = 0;
  for (float v : target.data) target_norm += double(v) * v;
  target_norm = std::sqrt(std::max(target_norm, 1e-30));

  for (int it = 0; it < iterations; ++it) {
    wav = Istft(spec, out_len, cfg);
    auto est = StftComplex(wav, cfg);
    double err = 0;
    for (int t = 0; t < frames && t < static_cast<int>(est.size()); ++t)
      for (int k = 0; k < bins; ++k) {
        const double d = std::abs(est[t][k]) - double(target.at(t, k));
        err += d * d;
      }
    if (errors) errors->push_back(std::sqrt(err) / target_norm);
    // Keep the estimated phase, snap magnitudes back to the target.
    for (int t = 0; t < frames; ++t)
      for (int k = 0; k < bins; ++k) {
        const double mag = std::abs(est[t][k]);
        spec[t][k] = mag > 1e-12
                         ? est[t][k] / mag * double(target.at(t, k))
                         : std::complex<double>(double(target.at(t, k)), 0);
      }
  }
  wav = Istft(spec, out_len, cfg);

  // Peak-normalize, but never amplify near-silence up to full scale.
  float peak = 0;
  for (float v : wav) peak = std::max(peak, std::abs(v));
  if (peak > 0.02f)
    for (auto& v : wav) v = v / peak * 0.95f;
  return wav;
}

double Mcd(const FloatMatrix& mel_ref, const FloatMatrix& mel_test) {
  if (mel_ref.rows == 0 || mel_test.rows == 0 || mel_ref.cols == 0)
    Throw(ErrorCode::kUsage, "EmptyInput: mcd over empty mel");
  BIP_CHECK(mel_ref.cols == mel_test.cols) << "mel channel mismatch";
  const int frames = std::min(mel_ref.rows, mel_test.rows);
  const int m = mel_ref.cols;
  const int ncep = 13;  // c1..c13, c0 excluded
  const double scale = 10.0 * std::sqrt(2.0) / std::log(10.0);
  auto cepstrum = [&](const FloatMatrix& mel, int t, int k) {
    double acc = 0;
    for (int j = 0; j < m; ++j)
      acc += double(mel.at(t, j)) * std::cos(M_PI * k * (j + 0.5) / m);
    return acc;
  };
  double total = 0;
  for (int t = 0; t < frames; ++t) {
    double dist = 0;
    for (int k = 1; k <= ncep; ++k) {
      const double d = cepstrum(mel_ref, t, k) - cepstrum(mel_test, t, k);
      dist += d * d;
    }
    total += scale * std::sqrt(dist);
  }
  return total / frames;
}

namespace {

void PutU32(std::string* s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(char((v >> (8 * i)) & 0xff));
}
void PutU16(std::string* s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s->push_back(char((v >> (8 * i)) & 0xff));
}
uint32_t GetU32(const std::string& s, size_t off) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | uint8_t(s[off + i]);
  return v;
}
uint16_t GetU16(const std::string& s, size_t off) {
  return uint16_t(uint8_t(s[off]) | (uint8_t(s[off + 1]) << 8));
}

}  // namespace

void WavWrite(const std::string& path, const std::vector<float>& wav,
              int sampling_rate) {
  std::string out;
  const uint32_t data_size = uint32_t(wav.size()) * 2;
  out += "RIFF";
  PutU32(&out, 36 + data_size);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, uint32_t(sampling_rate));
  PutU32(&out, uint32_t(sampling_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_size);
  for (float v : wav) {
    const float c = std::clamp(v, -1.0f, 1.0f);
    PutU16(&out, uint16_t(int16_t(std::lround(c * 32767.0))));
  }
  WriteFileOrThrow(path, out);
}

std::vector<float> WavRead(const std::string& path, int* sampling_rate) {
  std::string s = ReadFileOrThrow(path);
  if (s.size() < 44 || s.compare(0, 4, "RIFF") != 0 ||
      s.compare(8, 4, "WAVE") != 0)
    Throw(ErrorCode::kData, "BadHeader: not a RIFF WAVE file: " + path);
  size_t off = 12;
  int sr = 0;
  int bits = 0, channels = 0, format = 0;
  std::vector<float> wav;
  bool got_data = false;
  while (off + 8 <= s.size()) {
    const std::string id = s.substr(off, 4);
    const uint32_t size = GetU32(s, off + 4);
    off += 8;
    if (off + size > s.size())
      Throw(ErrorCode::kData, "BadHeader: truncated chunk in " + path);
    if (id == "fmt ") {
      if (size < 16) Throw(ErrorCode::kData, "BadHeader: short fmt chunk");
      format = GetU16(s, off);
      channels = GetU16(s, off + 2);
      sr = int(GetU32(s, off + 4));
      bits = GetU16(s, off + 14);
    } else if (id == "data") {
      if (format != 1 || channels != 1 || bits != 16)
        Throw(ErrorCode::kData, "UnsupportedFormat: need PCM16 mono");
      wav.resize(size / 2);
      for (size_t i = 0; i < wav.size(); ++i)
        wav[i] = float(int16_t(GetU16(s, off + 2 * i))) / 32767.0f;
      got_data = true;
    }
    off += size + (size & 1);
  }
  if (!got_data) Throw(ErrorCode::kData, "BadHeader: no data chunk in " + path);
  if (sampling_rate) *sampling_rate = sr;
  return wav;
}

}  // namespace bip
