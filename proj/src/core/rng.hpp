/*
 * Copyright (c) 2026 benchmap contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "core/mathutil.hpp"

namespace benchmap {

// Deterministic generator used everywhere. Uniforms come straight from the
// top 53 bits of mt19937_64 and normals go through the inverse CDF, so a
// stream is fully specified by (generator = "mt19937_64",
// normal = "inverse-cdf-as241") plus the seed. Manifests record those ids.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr const char* kGeneratorId = "mt19937_64";
  static constexpr const char* kNormalId = "inverse-cdf-as241";

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0, 1): never returns an exact endpoint.
  double uniform() {
    const double u = (engine_() >> 11) * (1.0 / 9007199254740992.0);
    return u == 0.0 ? 5e-324 : u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return norm_quantile(uniform()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates sample of k indices out of [0, n), order randomized.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

// Counter-based side stream for code that must draw in parallel without
// sharing an engine (one stream per (seed, cycle, unit)). splitmix64 core.
class StreamRng {
public:
  StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    state_ = mix(mix(mix(0x9e3779b97f4a7c15ULL ^ seed) + stream) + substream);
  }

  static constexpr const char* kGeneratorId = "splitmix64";

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  double uniform() {
    const double u = (next_u64() >> 11) * (1.0 / 9007199254740992.0);
    return u == 0.0 ? 5e-324 : u;
  }

  double normal() { return norm_quantile(uniform()); }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace benchmap
