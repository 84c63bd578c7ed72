// Copyright 2026 The fairpc Authors
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

#ifndef FAIRPC_RANDOM_HPP_
#define FAIRPC_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fairpc {

// std::mt19937_64 output is fixed by the standard; the distributions in
// <random> are not, so the few we need are written out here to keep seeded
// runs bit-identical across standard libraries.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

/// Exponential(1), equivalently Gamma(1, 1).
inline double exponential1(Rng& rng) {
  return -std::log1p(-uniform01(rng));
}

/// Symmetric Dirichlet(1) draw of dimension k.
inline std::vector<double> dirichlet1(Rng& rng, std::size_t k) {
  std::vector<double> out(k);
  double total = 0.0;
  for (auto& v : out) {
    v = exponential1(rng);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

/// Index drawn from an unnormalized nonnegative weight vector.
inline std::size_t sample_index(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding fallthrough: last child with nonzero weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

/// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng = make_rng(seed, 0x5eed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace fairpc

#endif  // FAIRPC_RANDOM_HPP_
