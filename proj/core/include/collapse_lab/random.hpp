#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace collapse_lab {

/// SplitMix64 finalizer. Used both to expand seeds and to split streams.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seed of the independent sub-stream `index` of `base_seed`.
///
/// Two rounds of the SplitMix64 avalanche over (base_seed, index); no
/// sequential jumping, so stream i does not depend on how many streams were
/// consumed before it.
std::uint64_t split_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator and produces
/// the same sequence on every platform.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Stream for replication `index` of a run seeded with `base_seed`.
  static RandomStream substream(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return RandomStream(split_seed(base_seed, index));
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(RandomStream& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
inline double uniform_open_closed(RandomStream& rng) noexcept {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

double standard_normal(RandomStream& rng);
double standard_exponential(RandomStream& rng);

/// Gamma(shape, scale = 1). Marsaglia-Tsang squeeze for shape >= 1; for
/// shape < 1 the draw for shape + 1 is multiplied by U^(1/shape).
double standard_gamma(double shape, RandomStream& rng);

}  // namespace collapse_lab
