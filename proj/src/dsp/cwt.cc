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

#include "dsp/cwt.h"

#include <cmath>

#include "common/error.h"

namespace bip {

namespace {

// DOG2 constants from Torrence & Compo (1998): psi0(0) and the
// reconstruction factor C_delta for this wavelet.
constexpr double kPsi0Zero = 0.867325;
constexpr double kCDelta = 3.541;
constexpr double kDj = 0.5;  // two subscales per octave
constexpr double kS0 = 2.0;  // finest scale in frames

double Scale(int i) { return kS0 * std::pow(2.0, kDj * i); }

// Unit-energy Mexican hat.
double Psi(double eta) {
  return kPsi0Zero * (1.0 - eta * eta) * std::exp(-eta * eta / 2.0);
}

int ReflectIdx(int i, int len) {
  if (len == 1) return 0;
  const int period = 2 * (len - 1);
  i = ((i % period) + period) % period;
  return i < len ? i : period - i;
}

}  // namespace

std::vector<float> PreparePitchContour(const std::vector<float>& f0_hz,
                                       PitchStats* stats) {
  const int n = static_cast<int>(f0_hz.size());
  std::vector<float> out(f0_hz);
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i)
    if (f0_hz[i] > 0) {
      if (first < 0) first = i;
      last = i;
    }
  if (first < 0) Throw(ErrorCode::kData, "AllUnvoiced: no voiced frames");
  for (int i = 0; i < first; ++i) out[i] = f0_hz[first];
  for (int i = last + 1; i < n; ++i) out[i] = f0_hz[last];
  int i = first;
  while (i <= last) {
    if (out[i] > 0) {
      ++i;
      continue;
    }
    int j = i;
    while (out[j] <= 0) ++j;  // j <= last by construction
    const float a = out[i - 1], b = out[j];
    for (int k = i; k < j; ++k)
      out[k] = a + (b - a) * float(k - i + 1) / float(j - i + 1);
    i = j;
  }
  double mean = 0;
  for (float v : out) mean += v;
  mean /= n;
  double var = 0;
  for (float v : out) var += (v - mean) * (v - mean);
  var /= n;
  const double stddev = std::sqrt(std::max(var, 1e-12));
  if (stats) {
    stats->mean = mean;
    stats->stddev = stddev;
  }
  for (auto& v : out) v = float((v - mean) / stddev);
  return out;
}

FloatMatrix CwtPitch(const std::vector<float>& contour) {
  const int n = static_cast<int>(contour.size());
  BIP_CHECK(n > 0) << "empty contour";
  FloatMatrix coef(kCwtScales, n);
  for (int si = 0; si < kCwtScales; ++si) {
    const double s = Scale(si);
    const int support = static_cast<int>(std::ceil(4 * s));
    for (int t = 0; t < n; ++t) {
      double acc = 0;
      for (int tau = t - support; tau <= t + support; ++tau)
        acc += contour[ReflectIdx(tau, n)] * Psi((tau - t) / s);
      coef.at(si, t) = float(acc / std::sqrt(s));
    }
  }
  return coef;
}

std::vector<float> InverseCwt(const FloatMatrix& coefficients) {
  BIP_CHECK(coefficients.rows == kCwtScales) << "scale count";
  const int n = coefficients.cols;
  std::vector<double> rec(n, 0.0);
  for (int si = 0; si < kCwtScales; ++si) {
    const double s = Scale(si);
    for (int t = 0; t < n; ++t)
      rec[t] += double(coefficients.at(si, t)) / std::sqrt(s);
  }
  const double factor = kDj / (kCDelta * kPsi0Zero);
  double mean = 0;
  for (auto& v : rec) {
    v *= factor;
    mean += v;
  }
  mean /= n;
  double var = 0;
  for (double v : rec) var += (v - mean) * (v - mean);
  var /= n;
  const double stddev = std::sqrt(std::max(var, 1e-12));
  std::vector<float> out(n);
  for (int t = 0; t < n; ++t) out[t] = float((rec[t] - mean) / stddev);
  return out;
}

}  // namespace bip
