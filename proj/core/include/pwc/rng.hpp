#pragma once

#include <cstdint>
#include <vector>

namespace pwc {

// All randomness in this project flows through the fixed generator below so
// that datasets, initialization and shuffles are reproducible bit-for-bit
// across platforms. Standard-library engines and distributions are not used
// on any data path. Sampling routines stick to IEEE-754 add/sub/mul/div/sqrt
// (all correctly rounded) and avoid libm transcendentals.

// splitmix64 (Steele, Lea, Flood). Used for seeding and sub-stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  return splitmix64(s);
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kStreamData = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamShuffle = 3;
inline constexpr std::uint64_t kStreamBench = 4;
inline constexpr std::uint64_t kStreamPerm = 5;

// xorshift64* generator: shift triple (12, 25, 27) and output multiplier
// 0x2545F4914F6CDD1D (Vigna, "An experimental exploration of Marsaglia's
// xorshift generators, scrambled").
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    state_ = splitmix64(s);  // makes seed 0 usable; state must be nonzero
    if (state_ == 0) state_ = 0x2545F4914F6CDD1Dull;
  }

  std::uint64_t next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Multiply-shift; bias is below 2^-32
  // for the desk-scale ranges used here.
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via the sum of 12 uniforms minus 6 (Irwin-Hall).
  // Chosen over Box-Muller so the value depends only on correctly rounded
  // arithmetic; the tail is hard-capped at +/-6 sigma, which is irrelevant
  // for the jitter magnitudes used in data generation.
  double gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace pwc
