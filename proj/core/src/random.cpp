#include "collapse_lab/random.hpp"

#include <cmath>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace collapse_lab {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t split_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  std::uint64_t state = base_seed;
  const std::uint64_t mixed_base = splitmix64(state);
  state = mixed_base ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(state);
}

RandomStream::RandomStream(std::uint64_t seed) noexcept {
  std::uint64_t state = seed;
  for (auto& word : state_) word = splitmix64(state);
}

// Boost's ziggurat samplers are specified algorithmically, so their output
// for a given bit stream does not depend on the standard library in use.
double standard_normal(RandomStream& rng) {
  boost::random::normal_distribution<double> dist;
  return dist(rng);
}

double standard_exponential(RandomStream& rng) {
  boost::random::exponential_distribution<double> dist;
  return dist(rng);
}

double standard_gamma(double shape, RandomStream& rng) {
  if (shape < 1.0) {
    const double u = uniform_open_closed(rng);
    return standard_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open_closed(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace collapse_lab
