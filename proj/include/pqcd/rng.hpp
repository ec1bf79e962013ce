#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace pqcd {

// Generator: std::mt19937_64 (bit-exact across platforms per the C++ standard).
// Child streams are derived with splitmix64 so (seed, index) pairs give
// independent reproducible substreams. All sampling transforms below avoid
// std::uniform_*_distribution, whose output is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51ed270b0a9cd1ecull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0, 1), 53-bit resolution
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform on {0, ..., n-1}; rejection keeps the draw unbiased
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v > limit);
    return v % n;
  }

  double next_exponential() {
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    return -std::log(u);
  }

 private:
  std::mt19937_64 gen_;
};

// index sampled from unnormalized nonnegative weights by CDF walk
inline int sample_index(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("sample_index: weights sum to zero");
  const double u = rng.next_double() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// uniform point on the probability simplex (normalized exponential variates)
inline std::vector<double> sample_simplex(Rng& rng, int dim) {
  if (dim <= 0) throw std::invalid_argument("sample_simplex: dim must be positive");
  std::vector<double> v(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (double& x : v) {
    x = rng.next_exponential();
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

}  // namespace pqcd
