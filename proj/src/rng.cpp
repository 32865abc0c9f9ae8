#include "ssread/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ssread {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double v1, v2, s;
  do {
    v1 = 2.0 * uniform() - 1.0;
    v2 = 2.0 * uniform() - 1.0;
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v2 * f;
  have_spare_ = true;
  return v1 * f;
}

int Rng::uniform_index(int bound) {
  if (bound <= 0) throw std::invalid_argument("uniform_index: bound must be positive");
  const std::uint64_t b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = (0 - b) % b;  // 2^64 mod b
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x < limit);
  return static_cast<int>(x % b);
}

Matrix Rng::normal_matrix(int rows, int cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = normal();
  return m;
}

Matrix Rng::glorot_matrix(int rows, int cols) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform() - 1.0) * limit;
  return m;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ssread
