#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace superfractal {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of an independent stream, e.g. one per replica.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// mt19937_64 with platform-independent uniform and exponential variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on (0, 1).
  double uniform() {
    std::uint64_t b = eng_() >> 11;
    return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double exponential() { return -std::log(uniform()); }
  std::uint64_t poisson(double mean) {
    if (!(mean > 0)) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(eng_);
  }
  double normal() {
    std::normal_distribution<double> d;
    return d(eng_);
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace superfractal
