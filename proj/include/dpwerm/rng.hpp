// Copyright 2026 The dpwerm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPWERM_RNG_HPP_
#define DPWERM_RNG_HPP_

#include <cstdint>

namespace dpwerm {

// Deterministic generator with explicit stream support (PCG-XSH-RR 64/32,
// O'Neill 2014). The same (seed, stream) pair always produces the same draw
// sequence; distinct streams are independent. Parallel repeats must each own
// a child stream rather than sharing one generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();

  // Standard normal via Box-Muller; the paired draw is cached.
  double next_gaussian();

  // Generator on an independent stream derived from (seed, stream, salt).
  // The derivation ignores how much of this stream has been consumed, so a
  // fixed salt always names the same child.
  Rng child(std::uint64_t salt) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  std::uint64_t inc_;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

// SplitMix64 finalizer; used for stream derivation and salt mixing.
std::uint64_t mix64(std::uint64_t value);

// Order-sensitive combiner for building stream salts out of several indices.
inline std::uint64_t salt_pair(std::uint64_t a, std::uint64_t b) {
  return mix64(a * 0x9e3779b97f4a7c15ULL + b);
}

}  // namespace dpwerm

#endif  // DPWERM_RNG_HPP_
