// Copyright 2026 The tinyvox Authors.
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

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace tinyvox {

// All randomness in the toolkit flows through Rng so that every seeded
// operation is bit-identical across platforms:
//
//   * the engine is std::mt19937_64, whose output sequence is fixed by the
//     C++ standard for a given 64-bit seed;
//   * bounded integers use rejection sampling on raw 64-bit draws and reals
//     use the top 53 bits, so no implementation-defined std:: distribution
//     is involved;
//   * independent streams are keyed by (seed, step, stream) through the
//     SplitMix64 finalizer, so plans for different steps never share draws.

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a; used to derive stream keys from names and ids and to
/// fingerprint manifests.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Engine seeded with splitmix64(seed ^ splitmix64(step ^ splitmix64(stream))).
  static Rng keyed(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);
  static Rng keyed(std::uint64_t seed, std::uint64_t step, std::string_view stream) {
    return keyed(seed, step, fnv1a64(stream));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller on uniform01 (test fixtures only need
  /// reproducibility, not speed).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace tinyvox
