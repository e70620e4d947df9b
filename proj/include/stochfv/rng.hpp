#pragma once

#include <cmath>
#include <cstdint>

namespace stochfv {

// Identifies one random stream. Every Monte Carlo draw in the library is
// keyed by such a triple, never by shared mutable generator state, so a run
// partitioned over any number of workers consumes identical randomness.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::int64_t level = 0;
  std::uint64_t sample_index = 0;
};

namespace detail {

// Finalizer from the splitmix64 generator; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based stream in the philox style: a keyed 10-round mix of a
// 128-bit counter. The key encodes (master_seed, level) and the high counter
// word holds the sample index, so distinct triples address disjoint counter
// blocks of the same pseudo-random function and never overlap. Draws are
// bit-reproducible for a given triple on any thread layout.
class RngStream {
 public:
  explicit RngStream(const SeedSpec& seed)
      : key_(seed.master_seed ^
             detail::mix64(static_cast<std::uint64_t>(seed.level) + 0x517CC1B727220A95ull)),
        hi_(seed.sample_index) {}

  std::uint64_t next_u64() {
    if (phase_ == 0) {
      block(block_index_++, out_);
      phase_ = 1;
      return out_[0];
    }
    phase_ = 0;
    return out_[1];
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via the Box-Muller map. Consumes exactly two 64-bit
  // words per call; the sibling variate is discarded so that the number of
  // raw draws per request is fixed (prefix-stable stream consumption).
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  void block(std::uint64_t counter, std::uint64_t out[2]) const {
    std::uint64_t x0 = counter;
    std::uint64_t x1 = hi_;
    std::uint64_t k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi, lo;
      mulhilo(0xD2B74407B1CE6E93ull, x0, hi, lo);
      x0 = hi ^ k ^ x1;
      x1 = lo;
      k += 0x9E3779B97F4A7C15ull;
    }
    out[0] = x0;
    out[1] = x1;
  }

  std::uint64_t key_;
  std::uint64_t hi_;
  std::uint64_t block_index_ = 0;
  std::uint64_t out_[2] = {0, 0};
  int phase_ = 0;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::int64_t level,
                               std::uint64_t sample_index) {
  return RngStream(SeedSpec{master_seed, level, sample_index});
}

}  // namespace stochfv
