// Copyright 2026 The Phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHASEGEN_RANDOM_H_
#define PHASEGEN_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace phasegen {

// Seeded random stream. All randomness in the library flows through
// explicitly passed Rng values; there is no global generator.
//
// Substreams are derived by hashing (seed, key), so a phase can be replayed
// without re-running the phases that precede it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  Rng substream(std::string_view name) const;
  Rng substream(std::uint64_t index) const;

  double normal();
  // Uniform on [0, 1).
  double uniform();
  bool bernoulli(double p);
  // Index drawn proportionally to nonnegative weights.
  std::size_t categorical(std::span<const double> weights);
  std::size_t uniform_index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace phasegen

#endif  // PHASEGEN_RANDOM_H_
