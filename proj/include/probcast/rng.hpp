#pragma once

// Deterministic random source. All sampling in the library goes through
// this wrapper so that a seed pins every downstream artifact byte for byte.
// Uniform doubles are built directly from the top 53 bits of the engine
// output rather than through std::uniform_real_distribution, whose mapping
// is implementation-defined.

#include <cstdint>
#include <random>

namespace probcast {

// splitmix64 step; used to derive independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform on the open interval (0, 1)
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t next_u64() { return gen_(); }

  // integer in [0, n); modulo bias is irrelevant at the n used here
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  // deterministic sub-stream for parallel or per-epoch use
  Rng fork(std::uint64_t stream) { return Rng(mix_seed(gen_(), stream)); }

  template <typename T>
  void shuffle(T* data, std::size_t n) {
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      T tmp = data[i - 1];
      data[i - 1] = data[j];
      data[j] = tmp;
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace probcast
