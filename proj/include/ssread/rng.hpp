#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ssread/matrix.hpp"

namespace ssread {

// Seeded random source. All conversions from the raw mt19937_64 stream are
// done by hand; std::*_distribution is avoided because its output sequence
// is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via the polar method (no trig, deterministic).
  double normal();

  // Uniform integer in [0, bound), rejection-sampled to remove modulo bias.
  int uniform_index(int bound);

  Matrix normal_matrix(int rows, int cols);

  // Uniform in +-sqrt(6 / (rows + cols)).
  Matrix glorot_matrix(int rows, int cols);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[i], v[uniform_index(i + 1)]);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 mix of a base seed and a stream id, for independent substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ssread
