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
#include "dsp/cwt.h"
#include "dsp/dsp.h"
#include "dsp/oracle.h"
#include "testutil.h"

using namespace bip;

namespace {

std::vector<float> Sine(double freq, double seconds, const DspConfig& cfg,
                        double amp = 0.5) {
  std::vector<float> wav(size_t(seconds * cfg.sampling_rate));
  for (size_t i = 0; i < wav.size(); ++i)
    wav[i] = float(amp * std::sin(2 * M_PI * freq * i / cfg.sampling_rate));
  return wav;
}

double Correlation(const std::vector<float>& a, const std::vector<float>& b) {
  REQUIRE(a.size() == b.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(std::max(da * db, 1e-30));
}

// Dominant frequency via the magnitude-peak bin of a long FFT frame.
double DominantFrequency(const std::vector<float>& wav, const DspConfig& cfg) {
  FloatMatrix mag = Stft(wav, cfg);
  std::vector<double> acc(mag.cols, 0.0);
  for (int t = 0; t < mag.rows; ++t)
    for (int k = 0; k < mag.cols; ++k) acc[k] += mag.at(t, k);
  int best = 0;
  for (int k = 1; k < mag.cols; ++k)
    if (acc[k] > acc[best]) best = k;
  return double(best) * cfg.sampling_rate / cfg.filter_length;
}

}  // namespace

TEST_CASE("stft peak bin and frame count") {
  DspConfig cfg;
  auto wav = Sine(1000.0, 0.2, cfg);
  FloatMatrix mag = Stft(wav, cfg);
  CHECK(mag.rows == 1 + int((wav.size() + cfg.hop_length - 1) / cfg.hop_length));
  CHECK(mag.cols == 513);
  // 1 kHz at 16 kHz with a 1024-point FFT lands on bin 64.
  int peak = 0;
  for (int k = 1; k < mag.cols; ++k)
    if (mag.at(5, k) > mag.at(5, peak)) peak = k;
  CHECK(peak == 64);

  std::vector<float> zeros(4096, 0.0f);
  FloatMatrix zmag = Stft(zeros, cfg);
  for (float v : zmag.data) CHECK(v == 0.0f);

  CHECK_THROWS_AS(Stft({}, cfg), Error);
}

TEST_CASE("mel filterbank covers the band without dead bins") {
  DspConfig cfg;
  FloatMatrix fb = MelFilterbank(cfg);
  for (int m = 0; m < fb.rows; ++m) {
    double sum = 0;
    for (int k = 0; k < fb.cols; ++k) sum += fb.at(m, k);
    CHECK(sum > 0);
  }
  for (int k = 0; k < fb.cols; ++k) {
    const double fk = double(k) * cfg.sampling_rate / cfg.filter_length;
    if (fk <= cfg.mel_fmin || fk >= cfg.mel_fmax) continue;
    double sum = 0;
    for (int m = 0; m < fb.rows; ++m) sum += fb.at(m, k);
    CHECK(sum > 0);
  }
}

TEST_CASE("mel spectrogram floor, tone localization, homogeneity") {
  DspConfig cfg;
  std::vector<float> zeros(4096, 0.0f);
  FloatMatrix mz = MelSpectrogram(zeros, cfg);
  for (float v : mz.data) CHECK(v == doctest::Approx(std::log(1e-5)));

  auto wav = Sine(1000.0, 0.25, cfg);
  FloatMatrix mel = MelSpectrogram(wav, cfg);
  // The filterbank row whose center is nearest 1 kHz.
  FloatMatrix fb = MelFilterbank(cfg);
  int oracle_bin = 0;
  double best = -1;
  for (int m = 0; m < fb.rows; ++m) {
    double w = fb.at(m, 64);
    if (w > best) {
      best = w;
      oracle_bin = m;
    }
  }
  for (int t = 2; t < mel.rows - 2; ++t) {
    int arg = 0;
    for (int m = 1; m < mel.cols; ++m)
      if (mel.at(t, m) > mel.at(t, arg)) arg = m;
    CHECK(arg == oracle_bin);
  }

  auto loud = Sine(1000.0, 0.25, cfg, 1.0);
  FloatMatrix mel2 = MelSpectrogram(loud, cfg);
  const int t = mel.rows / 2;
  CHECK(mel2.at(t, oracle_bin) - mel.at(t, oracle_bin) ==
        doctest::Approx(2 * std::log(2.0)).epsilon(0.01));
}

TEST_CASE("frame energy equals the brute-force L2 norm") {
  FloatMatrix zeros(3, 5);
  for (float v : FrameEnergy(zeros)) CHECK(v == 0.0f);

  FloatMatrix unit(4, 6);
  for (int t = 0; t < 4; ++t) unit.at(t, t) = 1.0f;
  for (float v : FrameEnergy(unit)) CHECK(v == doctest::Approx(1.0));

  Rng rng(5);
  FloatMatrix m(6, 20);
  for (auto& v : m.data) v = rng.NextFloat(0.0f, 2.0f);
  auto energy = FrameEnergy(m);
  for (int t = 0; t < m.rows; ++t) {
    double acc = 0;
    for (int k = 0; k < m.cols; ++k) acc += double(m.at(t, k)) * m.at(t, k);
    CHECK(energy[t] == doctest::Approx(std::sqrt(acc)));
  }
}

TEST_CASE("pitch contour preparation interpolates and standardizes") {
  std::vector<float> f0 = {0, 0, 200, 0, 0, 0, 240, 220, 0};
  PitchStats stats;
  auto c = PreparePitchContour(f0, &stats);
  // Gap between 200 and 240 fills linearly: 210, 220, 230 before scaling.
  CHECK(stats.mean > 0);
  double mean = 0;
  for (float v : c) mean += v;
  CHECK(std::abs(mean / c.size()) < 1e-5);
  double var = 0;
  for (float v : c) var += v * v;
  CHECK(var / c.size() == doctest::Approx(1.0).epsilon(1e-4));
  const float hz2 = float(c[2] * stats.stddev + stats.mean);
  const float hz4 = float(c[4] * stats.stddev + stats.mean);
  CHECK(hz2 == doctest::Approx(200.0));
  CHECK(hz4 == doctest::Approx(220.0));

  CHECK_THROWS_AS(PreparePitchContour(std::vector<float>(5, 0.0f), nullptr),
                  Error);
}

TEST_CASE("cwt of a constant contour is near zero at all scales") {
  std::vector<float> constant(30, 5.0f);
  FloatMatrix coef = CwtPitch(constant);
  CHECK(coef.rows == kCwtScales);
  for (float v : coef.data) CHECK(std::abs(v) < 0.1);
}

TEST_CASE("cwt round trip reconstructs tone contours above 0.95 correlation") {
  DspConfig cfg;
  for (auto tones : std::vector<std::vector<int>>{{3}, {1, 4}, {2, 3, 1},
                                                  {4, 4, 2, 3}}) {
    std::vector<float> f0;
    for (int tone : tones) {
      for (int i = 0; i < 6; ++i) f0.push_back(0.0f);
      for (int i = 0; i < 14; ++i)
        f0.push_back(float(ToneF0(tone, i / 13.0)));
    }
    auto normalized = PreparePitchContour(f0, nullptr);
    auto rec = InverseCwt(CwtPitch(normalized));
    CHECK(Correlation(normalized, rec) > 0.95);
  }
}

TEST_CASE("cwt energy of a long linear ramp peaks at the coarsest scale") {
  std::vector<float> ramp(128);
  for (size_t i = 0; i < ramp.size(); ++i)
    ramp[i] = float(-1.0 + 2.0 * i / (ramp.size() - 1));
  FloatMatrix coef = CwtPitch(ramp);
  std::vector<double> energy(kCwtScales, 0.0);
  for (int s = 0; s < kCwtScales; ++s)
    for (int t = 0; t < coef.cols; ++t)
      energy[s] += double(coef.at(s, t)) * coef.at(s, t);
  int arg = 0;
  for (int s = 1; s < kCwtScales; ++s)
    if (energy[s] > energy[arg]) arg = s;
  CHECK(arg == kCwtScales - 1);
}

TEST_CASE("griffin-lim recovers a sine's frequency and converges") {
  DspConfig cfg;
  auto wav = Sine(523.0, 0.3, cfg);
  FloatMatrix mel = MelSpectrogram(wav, cfg);

  std::vector<double> errors;
  auto rec = GriffinLim(mel, cfg, 60, &errors);
  REQUIRE(errors.size() == 60);
  CHECK(errors.back() < errors.front());
  for (size_t i = 1; i < errors.size(); ++i)
    CHECK(errors[i] <= errors[i - 1] + 1e-6);
  const double freq = DominantFrequency(rec, cfg);
  CHECK(std::abs(freq - 523.0) / 523.0 < 0.02);

  std::vector<double> one_err;
  GriffinLim(mel, cfg, 1, &one_err);
  CHECK(errors.back() < one_err.back());

  FloatMatrix silence(20, cfg.mel_channels);
  for (auto& v : silence.data) v = float(std::log(1e-5));
  auto quiet = GriffinLim(silence, cfg, 5);
  float peak = 0;
  for (float v : quiet) peak = std::max(peak, std::abs(v));
  CHECK(peak < 1e-3);

  FloatMatrix bad(2, cfg.mel_channels);
  bad.at(1, 3) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(GriffinLim(bad, cfg, 1), Error);
}

TEST_CASE("mcd is zero on identity, symmetric, and matches brute force") {
  DspConfig cfg;
  auto utt = SynthOracle({TextUnit::Spell("h", "ao", 3)}, 1, cfg);
  CHECK(Mcd(utt.mel, utt.mel) == doctest::Approx(0.0));

  auto utt2 = SynthOracle({TextUnit::Spell("b", "a", 1)}, 1, cfg);
  CHECK(Mcd(utt.mel, utt2.mel) ==
        doctest::Approx(Mcd(utt2.mel, utt.mel)));

  // Hand-built 2-frame case against a direct DCT + distance computation.
  FloatMatrix a(2, 4), b(2, 4);
  float av[] = {0.5f, -1.0f, 2.0f, 0.25f, 1.0f, 0.0f, -0.5f, 3.0f};
  float bv[] = {1.5f, 0.0f, -2.0f, 4.0f, 0.5f, 2.0f, 1.0f, -1.0f};
  std::copy(av, av + 8, a.data.begin());
  std::copy(bv, bv + 8, b.data.begin());
  double expected = 0;
  for (int t = 0; t < 2; ++t) {
    double dist = 0;
    for (int k = 1; k <= 13; ++k) {
      double ca = 0, cb = 0;
      for (int j = 0; j < 4; ++j) {
        ca += a.at(t, j) * std::cos(M_PI * k * (j + 0.5) / 4);
        cb += b.at(t, j) * std::cos(M_PI * k * (j + 0.5) / 4);
      }
      dist += (ca - cb) * (ca - cb);
    }
    expected += 10.0 * std::sqrt(2.0) / std::log(10.0) * std::sqrt(dist);
  }
  expected /= 2;
  CHECK(Mcd(a, b) == doctest::Approx(expected));

  CHECK_THROWS_AS(Mcd(FloatMatrix{}, a), Error);
}

TEST_CASE("wav round trip under the PCM16 quantization bound") {
  testing::TempDir dir("wav");
  DspConfig cfg;
  Rng rng(3);
  std::vector<float> wav(5000);
  for (auto& v : wav) v = rng.NextFloat(-0.99f, 0.99f);
  WavWrite(dir.File("x.wav"), wav, cfg.sampling_rate);
  int sr = 0;
  auto back = WavRead(dir.File("x.wav"), &sr);
  CHECK(sr == 16000);
  REQUIRE(back.size() == wav.size());
  for (size_t i = 0; i < wav.size(); ++i)
    CHECK(std::abs(back[i] - wav[i]) <= 1.0f / 32768);

  auto bytes = ReadFileOrThrow(dir.File("x.wav"));
  WriteFileOrThrow(dir.File("trunc.wav"), bytes.substr(0, 30));
  CHECK_THROWS_AS(WavRead(dir.File("trunc.wav"), nullptr), Error);
}

TEST_CASE("oracle utterances are self-consistent and deterministic") {
  DspConfig cfg;
  auto utt = SynthOracle({TextUnit::Spell("h", "ao", 3)}, 7, cfg);
  REQUIRE(utt.phonemes.size() == 2);
  CHECK(utt.phonemes[0] == "h");
  CHECK(utt.phonemes[1] == "ao3");
  int total = 0;
  for (int d : utt.durations) total += d;
  CHECK(total == utt.mel.rows);
  CHECK(utt.energy.size() == size_t(utt.mel.rows));
  CHECK(utt.f0.size() == size_t(utt.mel.rows));

  // Energy target is the definitional frame energy of the waveform.
  auto direct = FrameEnergy(Stft(utt.waveform, cfg));
  CHECK(Correlation(utt.energy, direct) > 0.99);

  auto again = SynthOracle({TextUnit::Spell("h", "ao", 3)}, 7, cfg);
  CHECK(std::memcmp(utt.waveform.data(), again.waveform.data(),
                    utt.waveform.size() * sizeof(float)) == 0);

  auto other = SynthOracle({TextUnit::Spell("h", "ao", 3)}, 8, cfg);
  CHECK(utt.waveform != other.waveform);  // seed reaches the noise bursts
}

TEST_CASE("tone 1 and tone 4 have opposite f0 slopes") {
  DspConfig cfg;
  auto t1 = SynthOracle({TextUnit::Spell("m", "a", 1)}, 3, cfg);
  auto t4 = SynthOracle({TextUnit::Spell("m", "a", 4)}, 3, cfg);
  auto slope = [](const OracleUtterance& u) {
    // Linear fit over voiced frames.
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < u.f0.size(); ++i)
      if (u.f0[i] > 0) pts.emplace_back(double(i), double(u.f0[i]));
    double mx = 0, my = 0;
    for (auto& [x, y] : pts) {
      mx += x;
      my += y;
    }
    mx /= pts.size();
    my /= pts.size();
    double num = 0, den = 0;
    for (auto& [x, y] : pts) {
      num += (x - mx) * (y - my);
      den += (x - mx) * (x - mx);
    }
    return num / den;
  };
  CHECK(slope(t1) > 0);
  CHECK(slope(t4) < 0);
}

TEST_CASE("number and punct units map to syllables and pauses") {
  auto syls = UnitToSyllables(TextUnit::Number("24"));
  REQUIRE(syls.size() == 2);
  CHECK(syls[0] == "er4");
  CHECK(syls[1] == "si4");
  CHECK(UnitToSyllables(TextUnit::Punct("!"))[0] == "sp");

  auto ph = UnitToPhonemes(TextUnit::Number("7"));
  REQUIRE(ph.size() == 2);
  CHECK(ph[0] == "q");
  CHECK(ph[1] == "i1");

  auto inventory = PhonemeInventory();
  CHECK(inventory.size() > 150);
  CHECK(inventory[0] == "<pad>");
  // Every syllable of every unit resolves to inventory phonemes.
  DspConfig cfg;
  auto utt = SynthOracle({TextUnit::Number("90"), TextUnit::Punct(",")}, 2, cfg);
  CHECK(utt.phonemes.size() == 5);  // j iu3 l ing2 sp
}
