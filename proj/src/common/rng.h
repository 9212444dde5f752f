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

#ifndef BIP_COMMON_RNG_H_
#define BIP_COMMON_RNG_H_

#include <cstdint>
#include <vector>

namespace bip {

// SplitMix64 generator. Self-contained so that streams are byte-identical
// across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double NextDouble() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  float NextFloat(float lo, float hi) {
    return lo + static_cast<float>(NextDouble()) * (hi - lo);
  }

  // Uniform integer in [0, n).
  uint64_t NextBelow(uint64_t n) { return NextU64() % n; }

  // Standard normal via Box-Muller (one value per call; no cached spare,
  // so the stream position stays a pure function of call count).
  double NextGauss();

  template <typename T>
  void Shuffle(std::vector<T>* v) {
    for (size_t i = v->size(); i > 1; --i) {
      size_t j = NextBelow(i);
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

  // Derives an independent stream for a labelled subtask.
  Rng Fork(uint64_t stream_id) const {
    Rng r(state_ ^ (0x5851f42d4c957f2dULL * (stream_id + 1)));
    r.NextU64();
    return r;
  }

 private:
  uint64_t state_;
};

}  // namespace bip

#endif  // BIP_COMMON_RNG_H_
